import math

import numpy as np
import pytest
from scipy import sparse

from levyfp import DomainError, NumericalError
from levyfp.analysis import EnergyCoefficients, hypocoercivity_energy, weighted_l2_norm
from levyfp.integrators import (
    LinearSystem,
    PhaseGrid,
    hermite_reconstruct,
    kinetic_system,
    solve_linear,
    step_homogeneous,
    step_kinetic_euler,
    step_kinetic_sl,
    transport_sl,
)
from levyfp.operator import assemble_lfp
from levyfp.weights import VelocityGrid


@pytest.fixture(scope="module")
def op1():
    return assemble_lfp(1.0, VelocityGrid(0.25, J=32))


def test_equilibrium_is_stationary(op1):
    f = op1.M.copy()
    for _ in range(20):
        f = step_homogeneous(op1, f, 0.1)
    assert np.max(np.abs(f - op1.M)) < 1e-12


def test_homogeneous_step_conserves_and_contracts(op1, rng):
    h = op1.grid.h
    f = op1.M * (1.0 + 0.5 * rng.uniform(-1, 1, op1.n))
    m0 = op1.weighted_mass(f)
    prev = weighted_l2_norm(f, 1.0 / op1.M, h)
    for _ in range(50):
        f = step_homogeneous(op1, f, 0.05)
        assert op1.weighted_mass(f) == pytest.approx(m0, rel=1e-12)
        cur = weighted_l2_norm(f, 1.0 / op1.M, h)
        assert cur <= prev * (1 + 1e-12)
        prev = cur


def test_homogeneous_step_rejects_bad_dt(op1):
    with pytest.raises(DomainError):
        step_homogeneous(op1, op1.M, 0.0)


def _dense_kinetic_matrix(op, pg, dt):
    # independent assembly, entry by entry
    Nx, n = pg.shape
    A = np.eye(Nx * n)
    for i in range(Nx):
        for j in range(n):
            r = i * n + j
            c = pg.v[j] * dt / (2.0 * pg.dx)
            A[r, ((i + 1) % Nx) * n + j] += c
            A[r, ((i - 1) % Nx) * n + j] -= c
            A[r, i * n: (i + 1) * n] -= dt * op.L_mat[j]
    return A


def test_kinetic_euler_matches_dense_oracle(rng):
    op = assemble_lfp(1.0, VelocityGrid(0.5, J=8))
    pg = PhaseGrid(9, op.grid)
    f = rng.normal(size=pg.shape)
    dt = 0.07
    want = np.linalg.solve(_dense_kinetic_matrix(op, pg, dt), f.ravel()).reshape(pg.shape)
    got = step_kinetic_euler(op, pg, f, dt)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-13)
    gm = step_kinetic_euler(op, pg, f, dt, method="gmres")
    assert np.allclose(gm, want, rtol=1e-9, atol=1e-10)


def test_even_nx_rejected():
    vg = VelocityGrid(0.5, J=8)
    with pytest.raises(DomainError):
        PhaseGrid(8, vg)
    pg = PhaseGrid(8, vg, require_odd=False)
    op = assemble_lfp(1.0, vg)
    with pytest.raises(DomainError):
        step_kinetic_euler(op, pg, np.zeros(pg.shape), 0.1)


def test_phase_grid_validation():
    vg = VelocityGrid(0.5, J=8)
    with pytest.raises(DomainError):
        PhaseGrid(0, vg)
    with pytest.raises(DomainError):
        PhaseGrid(3, vg, period=-1.0)
    pg = PhaseGrid(5, vg, period=2.0)
    assert pg.dx == 0.4 and pg.shape == (5, vg.n)


def test_hermite_exact_at_nodes_and_on_quadratics():
    n = 40
    x = np.arange(n) / n
    u = np.sin(2 * np.pi * x) + 0.3
    assert np.allclose(hermite_reconstruct(u, x), u, rtol=0, atol=1e-14)
    # quadratic samples: exact away from the wrap, where centered slopes are exact
    q = (x - 0.5) ** 2
    xq = np.linspace(0.2, 0.8, 37)
    assert np.allclose(hermite_reconstruct(q, xq), (xq - 0.5) ** 2, atol=1e-14)
    assert isinstance(hermite_reconstruct(u, 0.123), float)


def test_hermite_third_order_on_sine():
    errs = []
    xq = np.linspace(0, 1, 1001)
    for n in (32, 64, 128):
        x = np.arange(n) / n
        errs.append(np.max(np.abs(hermite_reconstruct(np.sin(2 * np.pi * x), xq) - np.sin(2 * np.pi * xq))))
    assert math.log2(errs[1] / errs[2]) >= 2.9


def test_sl_transport_preserves_constants_and_mass(rng):
    vg = VelocityGrid(0.5, J=8)
    pg = PhaseGrid(16, vg, require_odd=False)
    c = np.full(pg.shape, 2.5)
    assert np.allclose(transport_sl(pg, c, 0.013), 2.5, atol=1e-14)
    f = rng.normal(size=pg.shape)
    g = transport_sl(pg, f, 0.037)
    assert np.allclose(g.sum(axis=0), f.sum(axis=0), rtol=1e-12, atol=1e-12)
    # a whole-cell shift is an exact rotation
    pg1 = PhaseGrid(16, VelocityGrid(1.0, J=1), require_odd=False)
    h = rng.normal(size=pg1.shape)
    g1 = transport_sl(pg1, h, pg1.dx)
    assert np.allclose(g1[:, 2], np.roll(h[:, 2], 1))
    assert np.allclose(g1[:, 1], h[:, 1])


def test_solve_linear_paths(rng):
    assert np.allclose(solve_linear(np.eye(4), np.arange(4.0)), np.arange(4.0))
    A = rng.normal(size=(50, 50)) + 50 * np.eye(50)
    b = rng.normal(size=50)
    assert np.allclose(solve_linear(LinearSystem(A), b), np.linalg.solve(A, b), rtol=1e-12)
    S = sparse.csr_matrix(A)
    assert np.allclose(LinearSystem(S, "gmres").solve(b), np.linalg.solve(A, b), rtol=1e-9)
    with pytest.raises(ValueError):
        LinearSystem(A, "cholesky")


def test_singular_system_raises():
    with pytest.raises(NumericalError):
        solve_linear(LinearSystem(np.zeros((3, 3))), np.ones(3))


def test_kinetic_system_is_cached(op1):
    pg = PhaseGrid(5, op1.grid)
    assert kinetic_system(op1, pg, 0.1) is kinetic_system(op1, pg, 0.1)


@pytest.mark.parametrize("scheme", ["euler", "sl"])
def test_kinetic_equilibrium_stationary_for_100_steps(op1, scheme):
    pg = PhaseGrid(9, op1.grid, require_odd=(scheme == "euler"))
    f0 = np.tile(op1.M, (pg.Nx, 1))
    f = f0
    for _ in range(100):
        f = step_kinetic_euler(op1, pg, f, 0.05) if scheme == "euler" else step_kinetic_sl(op1, pg, f, 0.05)
    assert np.max(np.abs(f - f0)) < 1e-10


def test_sl_step_conserves_weighted_mass(op1, rng):
    pg = PhaseGrid(16, op1.grid, require_odd=False)
    f = np.tile(op1.M, (pg.Nx, 1)) * (1 + 0.3 * rng.uniform(-1, 1, pg.shape))
    w = op1.mass_weights
    m0 = float(np.sum(f @ w))
    for _ in range(10):
        f = step_kinetic_sl(op1, pg, f, 0.05)
    assert float(np.sum(f @ w)) == pytest.approx(m0, rel=1e-12)


def test_hypocoercive_energy_decays(op1):
    pg = PhaseGrid(17, op1.grid, period=2 * np.pi)
    v = op1.grid.v
    f = op1.M[None, :] * (1 + 0.5 * np.cos(pg.x[:, None]) * np.exp(-(v[None, :] - 1) ** 2))
    w = op1.mass_weights
    finf = float(np.sum(f @ w)) / pg.Nx / float(w @ op1.M) * op1.M
    coeffs = EnergyCoefficients(1.0, 1.0, 0.5)
    H = []
    for _ in range(60):
        H.append(hypocoercivity_energy(f - finf, coeffs, pg, op1.M))
        f = step_kinetic_euler(op1, pg, f, 0.05)
    assert np.all(np.diff(H) <= 1e-14 * H[0])
    assert H[-1] < 0.05 * H[0]
