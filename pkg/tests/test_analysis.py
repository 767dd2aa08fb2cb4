import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from levyfp import DomainError
from levyfp.analysis import (
    BATTERY_NAMES,
    EnergyCoefficients,
    battery_function,
    battery_samples,
    commutator_norm_ratio,
    commutator_ratio,
    diff,
    energy_parts,
    frac_sobolev_seminorm,
    hypocoercivity_energy,
    interp_excess,
    interp_ratio,
    operator_sym_form,
    poincare_ratio,
    probe_operator,
    project_equilibrium,
    run_probe,
    skew_form,
    sym_form,
    weighted_l2_norm,
)
from levyfp.integrators import PhaseGrid
from levyfp.weights import VelocityGrid

finite = st.floats(-10, 10, allow_nan=False)


@pytest.fixture(scope="module")
def window_op():
    return probe_operator(1.0, 0.25)


def test_weighted_norm_matches_compensated_sum(rng):
    f = rng.normal(size=1001)
    g = rng.uniform(0.5, 2.0, size=1001)
    ref = math.sqrt(math.fsum(f * f * g) * 0.1)
    assert weighted_l2_norm(f, g, 0.1) == pytest.approx(ref, rel=1e-13)
    assert weighted_l2_norm(f, None, 1.0) == pytest.approx(np.linalg.norm(f), rel=1e-13)


def test_weighted_norm_shape_mismatch():
    with pytest.raises(DomainError):
        weighted_l2_norm(np.ones(3), np.ones(4), 1.0)


@pytest.mark.parametrize("n", [1, 9])
def test_seminorm_unit_spike_by_hand(n):
    # centre entry: k = +-1, +-2 give 2 (1 + 1/4); four partners give the same again
    f = np.zeros(n)
    f[n // 2] = 1.0
    got = frac_sobolev_seminorm(f, 0.5, None, 1.0, k_max=2)
    assert got == pytest.approx(math.sqrt(5.0), rel=1e-14)


def test_seminorm_infinite_tail_matches_long_sum():
    f = np.array([0.3, -1.0, 2.0, 0.5])
    s = 0.4
    tail = frac_sobolev_seminorm(f, s, None, 0.5)
    padded = np.concatenate([np.zeros(4000), f, np.zeros(4000)])
    trunc = frac_sobolev_seminorm(padded, s, None, 0.5, window="restrict")
    # the padded sum misses only the k > 4000 pairs
    assert trunc < tail
    assert trunc == pytest.approx(tail, rel=1e-3)


def test_seminorm_of_constant_restricted_is_zero():
    assert frac_sobolev_seminorm(np.full(20, 3.0), 0.7, None, 0.1, window="restrict") == 0.0


def test_seminorm_rejects_bad_arguments():
    with pytest.raises(DomainError):
        frac_sobolev_seminorm(np.ones(3), 1.5)
    with pytest.raises(ValueError):
        frac_sobolev_seminorm(np.ones(3), 0.5, window="periodic")


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_seminorm_converges_to_gagliardo_value(s):
    # continuous double integral for exp(-v^2) through its Fourier transform
    c = s * 4**s * math.gamma(0.5 + s) / (math.sqrt(math.pi) * math.gamma(1 - s))
    exact = 2.0 / c * 0.5 * 2 ** (s + 0.5) * math.gamma(s + 0.5)
    errs = []
    for h in (0.1, 0.05, 0.025):
        v = h * np.arange(-int(8 / h), int(8 / h) + 1)
        errs.append(abs(frac_sobolev_seminorm(np.exp(-v * v), s, None, h) ** 2 / exact - 1))
    order = math.log2(errs[1] / errs[2])
    assert errs[2] < errs[1] < errs[0]
    assert order > 2 - 2 * s - 0.1


def test_differences_exact_on_polynomials():
    h = 0.1
    v = h * np.arange(-10, 11)
    lin = 3.0 * v + 1.0
    quad = v * v
    inner = slice(2, -2)
    assert np.allclose(diff(lin, "forward", h)[inner], 3.0)
    assert np.allclose(diff(lin, "centered", h)[inner], 3.0)
    assert np.allclose(diff(quad, "centered", h)[inner], 2.0 * v[inner])
    assert np.allclose(diff(quad, "second-centered", h)[inner], 2.0)
    with pytest.raises(ValueError):
        diff(lin, "backward", h)


@given(arrays(float, 12, elements=finite), arrays(float, 12, elements=finite))
def test_centered_difference_is_skew(f, g):
    # summation by parts with zero extension
    h = 0.3
    lhs = np.dot(diff(f, "centered", h), g)
    rhs = -np.dot(f, diff(g, "centered", h))
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(lhs)))


def test_forms_symmetry_and_kernels(window_op, rng):
    op = window_op
    f = battery_function("random03", op.v)
    g = battery_function("sine", op.v)
    S = lambda a, b: sym_form(a, b, op.weights, op.M, op.h)
    A = lambda a, b: skew_form(a, b, op.weights, op.M, op.VM, op.h)
    assert S(f, g) == pytest.approx(S(g, f), rel=1e-13)
    assert A(f, g) == pytest.approx(-A(g, f), rel=1e-13)
    assert A(f, f) == pytest.approx(0.0, abs=1e-15)
    assert S(f, f) > 0
    assert abs(S(op.M, g)) < 1e-12
    assert abs(A(f, op.M)) < 1e-12 * (1 + abs(A(f, g)))


def test_skew_form_checks_vm_length(window_op):
    op = window_op
    with pytest.raises(DomainError):
        skew_form(op.M, op.M, op.weights, op.M, op.VM[:-1], op.h)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_decomposition_closes_on_window_operator(alpha):
    op = probe_operator(alpha, 0.25)
    fs = battery_samples(op.v)
    for i, f in enumerate(fs):
        g = fs[(i + 7) % len(fs)]
        S = sym_form(f, g, op.weights, op.M, op.h)
        A = skew_form(f, g, op.weights, op.M, op.VM, op.h)
        lhs = float(np.sum((op.L_mat @ f) * g / op.M)) * op.h
        assert abs(lhs + S + A) <= 1e-10 * (abs(S) + abs(A) + 1e-30)


def test_projection_is_idempotent(window_op, rng):
    op = window_op
    f = rng.normal(size=op.M.size)
    p = project_equilibrium(f, op.M, op.h)
    assert np.allclose(project_equilibrium(p, op.M, op.h), p, rtol=1e-13, atol=1e-15)
    assert math.fsum(p) == pytest.approx(math.fsum(f), rel=1e-12, abs=1e-12)


def test_energy_coefficients_validated():
    EnergyCoefficients(1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        EnergyCoefficients(1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        EnergyCoefficients(-1.0, 1.0, 0.0)


def test_energy_basic_identities():
    vg = VelocityGrid(0.5, 8)
    pg = PhaseGrid(9, vg)
    M = np.exp(-vg.v**2)
    coeffs = EnergyCoefficients(1.0, 1.0, 0.5)
    assert hypocoercivity_energy(np.zeros(pg.shape), coeffs, pg, M) == 0.0
    f = np.tile(np.cos(vg.v) * M, (pg.Nx, 1))
    n2, x2, v2, xv = energy_parts(f, pg, M)
    assert x2 == pytest.approx(0.0, abs=1e-20)
    assert hypocoercivity_energy(f, coeffs, pg, M) == pytest.approx(n2 + v2, rel=1e-13)
    # c^2 < ab keeps the energy above a multiple of the plain norm plus derivatives
    rng = np.random.default_rng(4)
    g = rng.normal(size=pg.shape)
    n2, x2, v2, xv = energy_parts(g, pg, M)
    H = hypocoercivity_energy(g, coeffs, pg, M)
    assert H >= n2 + 0.5 * (x2 + v2) - 1e-9 * H
    assert hypocoercivity_energy(g, (1.0, 1.0, 0.5), pg, M) == H


def test_poincare_ratio_cases(window_op):
    op = window_op
    assert poincare_ratio(op.M, op) == 0.0
    assert poincare_ratio(3.0 * op.M, op) == 0.0
    r = poincare_ratio(battery_function("random00", op.v), op)
    assert 0.0 < r < np.inf


def test_poincare_ratio_stable_in_h():
    rs = [poincare_ratio(battery_function("gaussian", op.v), op)
          for op in (probe_operator(1.0, 0.25), probe_operator(1.0, 0.125))]
    assert 0.5 < rs[1] / rs[0] < 2.0


def test_gaussian_limit_sym_form():
    from levyfp.operator import assemble_lfp_gaussian_limit

    op = assemble_lfp_gaussian_limit(VelocityGrid(0.25, 24))
    v = op.grid.v
    f = (1.0 + v) * op.M
    assert operator_sym_form(op.M, f, op) == pytest.approx(0.0, abs=1e-14)
    assert operator_sym_form(f, f, op) > 0


def test_embedding_chain(rng):
    h = 0.1
    for _ in range(50):
        f = np.concatenate([[0.0], rng.normal(size=40), [0.0]])
        d = weighted_l2_norm(diff(f, "centered", h), None, h)
        dp = weighted_l2_norm(diff(f, "forward", h), None, h)
        h1 = frac_sobolev_seminorm(f, 1.0, None, h)
        assert d <= dp * (1 + 1e-12)
        assert dp <= h1 * (1 + 1e-12)


def test_interpolation_probe_bounded_across_meshes():
    vals = []
    for h in (0.1, 0.05, 0.025):
        v = h * np.arange(-int(6 / h), int(6 / h) + 1)
        f = battery_function("gaussian", v)
        vals.append(interp_ratio(f, h, 0.5, 0.25))
        assert interp_excess(f, h, 0.5, 0.25) < vals[-1]
    assert max(vals) / min(vals) < 1.2


def test_commutator_probes(window_op):
    op = window_op
    f = battery_function("gaussian", op.v)
    g = battery_function("random05", op.v)
    r = commutator_norm_ratio(f, op)
    assert 0.0 < r < np.inf
    # the dual-norm ratio bounds every pairing
    assert commutator_ratio(f, g, op) <= r * (1 + 1e-12) + 1e-12


def test_battery_is_deterministic_and_supported():
    v = np.linspace(-8, 8, 321)
    fs = battery_samples(v)
    assert len(fs) == len(BATTERY_NAMES) == 25
    for f, g in zip(fs, battery_samples(v)):
        assert np.array_equal(f, g)
        assert np.all(f[np.abs(v) > 6.0] == 0.0)
    with pytest.raises(KeyError):
        battery_function("nope", v)


def test_run_probe_layout():
    rows = run_probe(1.0, 0.5, "poincare")
    assert [r[0] for r in rows] == list(BATTERY_NAMES)
    assert all(np.isfinite(r[1]) and np.isfinite(r[2]) for r in rows)
    with pytest.raises(ValueError):
        run_probe(1.0, 0.5, "sobolev")
