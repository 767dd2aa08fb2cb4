"""Time integrators: implicit Euler (homogeneous and kinetic) and a semi-Lagrangian
Strang splitting with Crank-Nicolson collisions."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as spla

from ._errors import DomainError, NumericalError
from .weights import VelocityGrid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhaseGrid:
    """Periodic space mesh x_i = i dx, dx = period / Nx, paired with a velocity grid.

    The implicit Euler scheme needs Nx odd (the centered transport stencil
    has a spurious invariant for even Nx). ``require_odd=False`` lifts the
    check for the semi-Lagrangian scheme, which has no such restriction.
    """

    Nx: int
    vgrid: VelocityGrid
    period: float = 1.0
    require_odd: bool = True

    def __post_init__(self):
        if int(self.Nx) != self.Nx or self.Nx < 1:
            raise DomainError(f"Nx must be a positive integer, got {self.Nx!r}")
        if self.require_odd and self.Nx % 2 == 0:
            raise DomainError(f"Nx must be odd for the implicit kinetic scheme, got {self.Nx}")
        if not self.period > 0:
            raise DomainError(f"period must be positive, got {self.period!r}")
        object.__setattr__(self, "Nx", int(self.Nx))
        object.__setattr__(self, "period", float(self.period))

    @property
    def dx(self):
        return self.period / self.Nx

    @property
    def dv(self):
        return self.vgrid.h

    @property
    def x(self):
        return self.dx * np.arange(self.Nx)

    @property
    def v(self):
        return self.vgrid.v

    @property
    def shape(self):
        return (self.Nx, self.vgrid.n)


class LinearSystem:
    """Factorized linear system with a residual-checked solve.

    ``method="direct"`` uses a sparse (or dense) LU; ``method="gmres"`` uses
    restarted GMRES with a user-supplied preconditioner.
    """

    def __init__(self, A, method="direct", preconditioner=None, rtol=1e-12, krylov_rtol=1e-12):
        if method not in ("direct", "gmres"):
            raise ValueError(f"unknown linear method {method!r}")
        self.A = A
        self.method = method
        self.rtol = rtol
        self.krylov_rtol = krylov_rtol
        self.M = preconditioner
        self._dense = not sparse.issparse(A)
        if method == "direct":
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("error", linalg.LinAlgWarning)
                    if self._dense:
                        self._lu = linalg.lu_factor(np.asarray(A, dtype=float))
                    else:
                        self._lu = spla.splu(sparse.csc_matrix(A))
            except (RuntimeError, linalg.LinAlgError, linalg.LinAlgWarning, ValueError) as exc:
                raise NumericalError(f"factorization failed: {exc}", condition=math.inf) from exc

    def _direct(self, b):
        if self._dense:
            return linalg.lu_solve(self._lu, b)
        return self._lu.solve(b)

    def condition_estimate(self):
        if self._dense:
            return float(np.linalg.cond(self.A))
        try:
            return float(spla.onenormest(self.A) * spla.onenormest(spla.inv(sparse.csc_matrix(self.A))))
        except Exception:  # noqa: BLE001 - best effort diagnostic only
            return math.nan

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        nb = float(np.linalg.norm(b))
        if self.method == "direct":
            x = self._direct(b)
            r = b - self.A @ x
            tol = self.rtol * max(nb, 1e-300)
            if np.linalg.norm(r) > tol:
                x = x + self._direct(r)  # one step of iterative refinement
                r = b - self.A @ x
            res = float(np.linalg.norm(r))
            if not np.all(np.isfinite(x)) or res > tol:
                raise NumericalError(f"direct solve residual {res:.3e} exceeds {tol:.3e}",
                                     residual=res, condition=self.condition_estimate())
            return x
        x, info = spla.gmres(self.A, b, rtol=self.krylov_rtol, atol=0.0, restart=50,
                             maxiter=200, M=self.M)
        res = float(np.linalg.norm(b - self.A @ x))
        if info != 0 or res > 10 * self.krylov_rtol * max(nb, 1e-300):
            raise NumericalError(f"GMRES did not converge (info={info}, residual {res:.3e})",
                                 residual=res, condition=self.condition_estimate())
        return x


def solve_linear(system, rhs):
    """Solve with a :class:`LinearSystem` (or anything with a ``solve`` method)."""
    if not isinstance(system, LinearSystem):
        system = LinearSystem(system)
    return system.solve(rhs)


def step_homogeneous(op, f, dt):
    """One implicit Euler step (I - dt L) f_new = f."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    f = np.asarray(f, dtype=float)
    out = linalg.lu_solve(op.implicit_factor(dt), f)
    if not np.all(np.isfinite(out)):
        raise NumericalError("implicit Euler step produced non-finite values")
    return out


def transport_matrix(pg):
    """Sparse centered periodic transport T, unknowns ordered (i, j) row-major."""
    Nx = pg.Nx
    e = np.ones(Nx)
    S = sparse.diags([e[:-1], -e[:-1]], [1, -1], shape=(Nx, Nx), format="lil")
    if Nx > 2:
        S[Nx - 1, 0] += 1.0
        S[0, Nx - 1] -= 1.0
    S = sparse.csr_matrix(S) / (2.0 * pg.dx)
    return sparse.kron(S, sparse.diags(pg.v), format="csr")


def kinetic_system(op, pg, dt, method="direct"):
    """Factorized I + dt T - dt (I_x (x) L), cached on the operator."""
    key = ("kinetic", pg.Nx, pg.period, float(dt), method)
    cache = op._lu
    with op._lock:
        sysm = cache.get(key)
    if sysm is not None:
        return sysm
    n = op.n
    A = (sparse.identity(pg.Nx * n, format="csr") + dt * transport_matrix(pg)
         - dt * sparse.kron(sparse.identity(pg.Nx), sparse.csr_matrix(op.L_mat), format="csr"))
    A = sparse.csc_matrix(A)
    if method == "gmres":
        lu = op.implicit_factor(dt)
        shape = pg.shape

        def apply(r):
            return linalg.lu_solve(lu, r.reshape(shape).T).T.ravel()

        pre = spla.LinearOperator(A.shape, matvec=apply)
        sysm = LinearSystem(A, "gmres", preconditioner=pre)
    else:
        sysm = LinearSystem(A, "direct", rtol=1e-10)
    with op._lock:
        cache[key] = sysm
    return sysm


def step_kinetic_euler(op, pg, f, dt, method="direct"):
    """One implicit Euler step of f_t + v f_x = L f on the periodic phase grid."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    if pg.Nx % 2 == 0:
        raise DomainError("implicit kinetic scheme needs odd Nx")
    f = np.asarray(f, dtype=float)
    if f.shape != pg.shape:
        raise DomainError(f"state has shape {f.shape}, expected {pg.shape}")
    sysm = kinetic_system(op, pg, dt, method)
    return sysm.solve(f.ravel()).reshape(pg.shape)


def _hermite_basis(t):
    t2, t3 = t * t, t * t * t
    return 2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t, -2 * t3 + 3 * t2, t3 - t2


def hermite_reconstruct(u, x_query, period=1.0):
    """C^1 piecewise-cubic Hermite interpolant of periodic samples, slopes by centered differences."""
    u = np.asarray(u, dtype=float)
    n = u.size
    dx = period / n
    q = np.mod(np.asarray(x_query, dtype=float), period) / dx
    i = np.floor(q).astype(int)
    t = q - i
    i %= n
    ip = (i + 1) % n
    d = 0.5 * (np.roll(u, -1) - np.roll(u, 1))  # slope times dx
    h00, h10, h01, h11 = _hermite_basis(t)
    out = h00 * u[i] + h10 * d[i] + h01 * u[ip] + h11 * d[ip]
    return out if out.ndim else float(out)


@lru_cache(maxsize=32)
def _sl_stencil(Nx, dx, v_key, tau):
    v = np.frombuffer(v_key)
    shift = v * tau / dx  # in cells, per column
    m = np.floor(shift)
    t = 1.0 - (shift - m)  # query x_i - shift = x_{i-k} + t dx with k = m + 1
    k = (m + 1).astype(int)
    rows = np.arange(Nx)[:, None]
    left = (rows - k[None, :]) % Nx
    right = (left + 1) % Nx
    basis = np.stack(_hermite_basis(t))
    exact = t == 1.0
    basis[:, exact] = np.array([0.0, 0.0, 1.0, 0.0])[:, None]
    for a in (left, right, basis):
        a.setflags(write=False)
    return left, right, basis


def transport_sl(pg, f, tau):
    """Backward semi-Lagrangian transport over time tau: f(x_i - v_j tau) per column."""
    f = np.asarray(f, dtype=float)
    left, right, (h00, h10, h01, h11) = _sl_stencil(pg.Nx, pg.dx, pg.v.tobytes(), float(tau))
    d = 0.5 * (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0))
    take = np.take_along_axis
    return (h00 * take(f, left, 0) + h10 * take(d, left, 0)
            + h01 * take(f, right, 0) + h11 * take(d, right, 0))


def step_kinetic_sl(op, pg, f, dt):
    """Strang splitting: transport dt/2, Crank-Nicolson collision dt, transport dt/2."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    f = np.asarray(f, dtype=float)
    if f.shape != pg.shape:
        raise DomainError(f"state has shape {f.shape}, expected {pg.shape}")
    C = op.crank_nicolson_matrix(dt)
    g = transport_sl(pg, f, 0.5 * dt)
    g = g @ C.T
    return transport_sl(pg, g, 0.5 * dt)
