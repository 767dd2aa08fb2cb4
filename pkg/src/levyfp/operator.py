"""Lévy-Fokker-Planck operator L = Gamma + Lambda on a truncated velocity grid.

The drift is written in flux form with interface values (VM)_{j+1/2} built
from partial sums of Lambda M, so the sampled equilibrium lies in the kernel
of the assembled matrix. The two end rows carry boundary fluxes weighted by
the exterior-mass parameter I_L, which makes

    sum_j f_j h + I_L (f_J + f_{-J})

invariant under implicit Euler steps.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from ._errors import DomainError, NumericalError
from .stable_density import _check_alpha, eval_density, sample_equilibrium, tail_mass
from .weights import VelocityGrid, WeightTable, assemble_lambda_truncated, build_weights

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LfpOperator:
    """Assembled operator and its companions.

    ``VM[i]`` is the half-point value at v_{(i - J) + 1/2}, i = 0..2J-1.
    """

    grid: VelocityGrid
    alpha: float
    L_mat: np.ndarray = field(repr=False)
    lambda_mat: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    VM: np.ndarray = field(repr=False)
    I_L: float
    gamma_decay: float | None = None
    _lu: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def n(self):
        return self.M.size

    @property
    def mass_weights(self):
        """Weights w with sum(w * f) the conserved (weighted) mass."""
        w = np.full(self.n, self.grid.h)
        w[0] += self.I_L
        w[-1] += self.I_L
        return w

    def weighted_mass(self, f):
        return float(np.dot(self.mass_weights, np.asarray(f, dtype=float)))

    def implicit_factor(self, dt):
        """LU factorization of I - dt L, computed once per time step and cached."""
        dt = float(dt)
        with self._lock:
            lu = self._lu.get(dt)
            if lu is None:
                A = np.eye(self.n) - dt * self.L_mat
                lu = linalg.lu_factor(A, check_finite=True)
                self._lu[dt] = lu
        return lu

    def crank_nicolson_matrix(self, dt):
        """Dense C = (I - dt/2 L)^{-1} (I + dt/2 L)."""
        key = ("cn", float(dt))
        with self._lock:
            C = self._lu.get(key)
            if C is None:
                eye = np.eye(self.n)
                C = linalg.solve(eye - 0.5 * dt * self.L_mat, eye + 0.5 * dt * self.L_mat)
                self._lu[key] = C
        return C


def compute_vm(lambda_M, h):
    """Half-point values (VM)_{j+1/2}, j = -J..J-1, from partial sums of Lambda M.

    Lambda M is symmetrized first, which only removes round-off: the exact
    vector is even because both M and the matrix are centro-symmetric.
    """
    lm = np.asarray(lambda_M, dtype=float)
    n = lm.size
    if n % 2 == 0 or n < 3:
        raise DomainError("lambda_M must have odd length 2J + 1 >= 3")
    J = n // 2
    s = 0.5 * (lm + lm[::-1])
    partial = s[J] + 2.0 * np.concatenate([[0.0], np.cumsum(s[J + 1: 2 * J])])
    pos = -0.5 * h * partial  # j = 0..J-1
    return np.concatenate([-pos[::-1], pos])


def exterior_mass(M, h):
    """I_L = (1 - sum_j M_j h) / (2 M_J), clamped at zero."""
    M = np.asarray(M, dtype=float)
    MJ = float(M[-1])
    if MJ <= 0.0:
        raise DomainError("exterior mass needs M_J > 0 (equilibrium underflowed at the boundary)")
    val = (1.0 - math.fsum(M) * h) / (2.0 * MJ)
    if val < 0.0:
        log.warning("exterior mass parameter %.3e is negative; clamped to 0", val)
        return 0.0
    return val


def exterior_mass_continuous(alpha, L):
    """mu(L)^{-1} int_L^inf mu(v) dv, the quantity the discrete I_L approximates."""
    alpha = _check_alpha(alpha)
    L = float(L)
    if alpha == 2.0:
        return math.sqrt(0.5 * math.pi) * float(special.erfcx(L / math.sqrt(2.0)))
    return tail_mass(alpha, L) / eval_density(alpha, L)


def assemble_gamma_truncated(VM, M, I_L, lambda_mat, grid):
    """Drift matrix: centered fluxes inside, corrected boundary fluxes on rows +-J."""
    M = np.asarray(M, dtype=float)
    VM = np.asarray(VM, dtype=float)
    h = grid.h
    n = M.size
    J = n // 2
    if VM.size != n - 1 or lambda_mat.shape != (n, n) or J != grid.J:
        raise DomainError("companions are inconsistent with the grid")
    G = np.zeros((n, n))
    r = np.arange(1, n - 1)
    inv = 1.0 / M
    G[r, r + 1] = VM[r] * inv[r + 1] / (2 * h)
    G[r, r] = (VM[r] - VM[r - 1]) * inv[r] / (2 * h)
    G[r, r - 1] = -VM[r - 1] * inv[r - 1] / (2 * h)

    theta = I_L / (2.0 * (h + I_L))
    interior_mass = h * lambda_mat[1:-1].sum(axis=0)  # row vector f -> sum_{|k|<J} (Lambda f)_k h
    corr = h / (2.0 * (h + I_L)) * interior_mass

    # F_{J+1/2} - (1/2) VM_{J-1/2} (F_J + F_{J-1}), divided by h
    top = -h * lambda_mat[-1] - corr
    top[-1] += (theta - 0.5) * VM[-1] * inv[-1]
    top[-2] += (theta - 0.5) * VM[-1] * inv[-2]
    G[-1] = top / h

    # (1/2) VM_{-J+1/2} (F_{-J+1} + F_{-J}) - F_{-J-1/2}, divided by h
    bot = -h * lambda_mat[0] - corr
    bot[0] += (0.5 - theta) * VM[0] * inv[0]
    bot[1] += (0.5 - theta) * VM[0] * inv[1]
    G[0] = bot / h
    return G


def assemble_lfp(alpha, grid, gamma_decay=None):
    """Full truncated operator for 0 < alpha < 2; alpha = 2 gives the Gaussian limit."""
    alpha = _check_alpha(alpha)
    if alpha == 2.0:
        return assemble_lfp_gaussian_limit(grid)
    if gamma_decay is None:
        gamma_decay = 1.0 + alpha
    M = sample_equilibrium(alpha, grid)
    lam = assemble_lambda_truncated(alpha, grid, gamma_decay)
    VM = compute_vm(lam @ M, grid.h)
    I_L = exterior_mass(M, grid.h)
    G = assemble_gamma_truncated(VM, M, I_L, lam, grid)
    L = G + lam
    if not np.all(np.isfinite(L)):
        raise NumericalError("assembled operator has non-finite entries")
    for a in (L, lam, M, VM):
        a.setflags(write=False)
    return LfpOperator(grid, alpha, L, lam, M, VM, I_L, float(gamma_decay))


def assemble_lfp_gaussian_limit(grid):
    """Classical Fokker-Planck limit: fluxes (M_j + M_{j+1})/(2h) (F_{j+1} - F_j), zero at the ends."""
    h = grid.h
    M = sample_equilibrium(2.0, grid)
    n = M.size
    VM = (M[:-1] - M[1:]) / h
    c = 0.5 * (M[:-1] + M[1:]) / h**2  # flux coefficient divided by h
    inv = 1.0 / M
    L = np.zeros((n, n))
    i = np.arange(n - 1)
    # flux G_{i+1/2} enters row i with + and row i+1 with -
    L[i, i + 1] += c * inv[i + 1]
    L[i, i] -= c * inv[i]
    L[i + 1, i + 1] -= c * inv[i + 1]
    L[i + 1, i] += c * inv[i]
    lam = np.zeros((n, n))
    for a in (L, lam, M, VM):
        a.setflags(write=False)
    return LfpOperator(grid, 2.0, L, lam, M, VM, 0.0, None)


@dataclass(frozen=True, eq=False)
class FullLineOperator:
    """Untruncated operator restricted to the index window [-N, N].

    The kernel is cut at |k| <= K with interior weights, f is extended by
    zero, and M is sampled on [-N-K, N+K] so Lambda M is exact on the window.
    For f supported at least K points away from the window edges, L f
    coincides with the operator on the whole line.
    """

    alpha: float
    h: float
    N: int
    weights: WeightTable = field(repr=False)
    L_mat: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    VM: np.ndarray = field(repr=False)  # j + 1/2 for j = -N..N-1

    @property
    def v(self):
        return self.h * np.arange(-self.N, self.N + 1)


def _lambda_window(w, n):
    b = np.concatenate([w.beta[:0:-1], w.beta])
    idx = np.arange(n)
    d = idx[:, None] - idx[None, :]
    mat = np.where(np.abs(d) <= w.K, b[np.clip(d, -w.K, w.K) + w.K], 0.0) * w.h
    mat[np.diag_indices(n)] = -2.0 * np.sum(w.beta[1:]) * w.h
    return mat


def assemble_lfp_fullline(alpha, h, N, K):
    """Window of the untruncated operator; see :class:`FullLineOperator`."""
    alpha = _check_alpha(alpha)
    if alpha >= 2.0:
        raise DomainError("full-line window operator needs alpha < 2")
    w = build_weights(alpha, h, K)
    big = N + K + 1
    vb = h * np.arange(-big, big + 1)
    Mb = eval_density(alpha, vb)
    lam_big = _lambda_window(w, Mb.size)
    lm = (lam_big @ Mb)[K: K + 2 * N + 3]  # indices -N-1..N+1
    lm = 0.5 * (lm + lm[::-1])
    # VM_{j+1/2}, j = -N-1..N, by symmetric partial sums
    c = lm.size // 2
    partial = lm[c] + 2.0 * np.concatenate([[0.0], np.cumsum(lm[c + 1:])])
    pos = -0.5 * h * partial[: N + 1]  # j = 0..N
    VMx = np.concatenate([-pos[::-1], pos])  # j = -N-1..N
    M = Mb[K + 1: K + 2 * N + 2]
    n = M.size
    lam = _lambda_window(w, n)
    inv = 1.0 / M
    G = np.zeros((n, n))
    r = np.arange(n)
    up, dn = VMx[1:], VMx[:-1]  # VM_{j+1/2}, VM_{j-1/2} for j = -N..N
    G[r, r] = (up - dn) * inv / (2 * h)
    G[r[:-1], r[:-1] + 1] = up[:-1] * inv[1:] / (2 * h)
    G[r[1:], r[1:] - 1] = -dn[1:] * inv[:-1] / (2 * h)
    L = G + lam
    VM = VMx[1:-1]
    for a in (L, M, VM):
        a.setflags(write=False)
    return FullLineOperator(alpha, float(h), int(N), w, L, M, VM)
