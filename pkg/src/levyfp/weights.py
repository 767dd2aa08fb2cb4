"""Quadrature weights of the discrete fractional Laplacian and its truncated matrix.

The weights follow the finite-difference/quadrature construction of Huang and
Oberman: a second-order treatment of the singular part on ``[0, h]`` and a
piecewise-quadratic interpolation of the tail, integrated exactly. For k >= 2
the weights are evaluated from their kernel-integral form

    even k:  C/h^(1+a) * int_{-1}^{1} (1 - t^2) (k + t)^(-1-a) dt
    odd k:   C/(2 h^(1+a)) * int_{-2}^{2} (t^2 - 3|t| + 2) (k + t)^(-1-a) dt

which is free of the cancellation the closed phi-differences suffer at large k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._errors import DomainError
from .stable_density import _check_alpha, fractional_constant

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform symmetric velocity mesh v_j = j h, j = -J..J.

    ``K`` is the integral truncation index (L_W = K h); it defaults to
    ``10 J + 1`` and is rounded up to an odd integer >= 2J + 1.
    """

    h: float
    J: int
    K: int | None = None

    def __post_init__(self):
        h, J = float(self.h), int(self.J)
        if not (h > 0.0 and math.isfinite(h)):
            raise DomainError(f"velocity step must be positive, got {self.h!r}")
        if J < 1:
            raise DomainError(f"J must be >= 1, got {self.J!r}")
        K = 10 * J + 1 if self.K is None else int(self.K)
        K = max(K, 2 * J + 1)
        if K % 2 == 0:
            K += 1
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "K", K)

    @classmethod
    def from_length(cls, L, J, K=None):
        return cls(float(L) / int(J), J, K)

    @property
    def L(self):
        return self.J * self.h

    @property
    def n(self):
        return 2 * self.J + 1

    @property
    def v(self):
        return self.h * np.arange(-self.J, self.J + 1)


def phi_alpha(alpha, t):
    """Antiderivative kernel phi_a with phi_a''' = t^(-1-a)."""
    alpha = float(alpha)
    if alpha <= 0.0 or alpha >= 2.0:
        raise DomainError(f"phi_alpha needs 0 < alpha < 2, got {alpha}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("phi_alpha needs t > 0")
    if alpha == 1.0:
        out = t - t * np.log(t)
    else:
        out = t ** (2.0 - alpha) / ((2.0 - alpha) * (alpha - 1.0) * alpha)
    return out if out.ndim else float(out)


def _phi_d1(alpha, t):
    if alpha == 1.0:
        return -np.log(t)
    return t ** (1.0 - alpha) / ((alpha - 1.0) * alpha)


def _phi_d2(alpha, t):
    return -(t ** (-alpha)) / alpha


def beta_phi_formula(alpha, k, h=1.0, boundary=False):
    """Weights written with phi-differences, exactly as printed in the method.

    Suffers O(k^3 eps) relative cancellation; kept as an independent route for
    checking :func:`build_weights` at small k.
    """
    alpha = float(alpha)
    k = int(k)
    f, d1, d2 = (lambda t: phi_alpha(alpha, t)), (lambda t: _phi_d1(alpha, t)), (lambda t: _phi_d2(alpha, t))
    c = fractional_constant(alpha) / h ** (1.0 + alpha)
    if boundary:
        return 0.5 * c * (2 * d2(k) + 2 * f(k) - 2 * f(k - 2) - d1(k - 2) - 3 * d1(k))
    if k == 1:
        return c * (1.0 / (2.0 - alpha) - d2(1.0) - 0.5 * (d1(3.0) + 3 * d1(1.0)) + f(3.0) - f(1.0))
    if k % 2 == 0:
        return c * 2.0 * (d1(k + 1) + d1(k - 1) - f(k + 1) + f(k - 1))
    return c * (-0.5 * (d1(k + 2) + 6 * d1(k) + d1(k - 2)) + f(k + 2) - f(k - 2))


def _gl(fun, a, b):
    x = 0.5 * (b - a) * _GL_NODES[:, None] + 0.5 * (b + a)
    return 0.5 * (b - a) * np.sum(_GL_WEIGHTS[:, None] * fun(x), axis=0)


def _unit_weights(alpha, kmax):
    """h = 1, C = 1 weights for k = 0..kmax (entry 0 unused, set to 0)."""
    out = np.zeros(kmax + 1)
    if alpha == 1.0:
        g = -math.log(3.0)
    else:
        g = math.expm1(-(alpha - 1.0) * math.log(3.0)) / (alpha - 1.0)
    out[1] = (8.0 + (4.0 + alpha) * g) / (2.0 * alpha * (2.0 - alpha))
    k = np.arange(2, kmax + 1, dtype=float)
    p = -1.0 - alpha
    even = _gl(lambda t: (1.0 - t * t) * (k + t) ** p, -1.0, 1.0)
    odd = 0.5 * (_gl(lambda t: (t * t + 3.0 * t + 2.0) * (k + t) ** p, -2.0, 0.0)
                 + _gl(lambda t: (t * t - 3.0 * t + 2.0) * (k + t) ** p, 0.0, 2.0))
    out[2:] = np.where(k % 2 == 0, even, odd)
    return out


def _unit_boundary_weight(alpha, K):
    p = -1.0 - alpha
    kk = np.array([float(K)])
    return float(0.5 * _gl(lambda t: (t * t + 3.0 * t + 2.0) * (kk + t) ** p, -2.0, 0.0)[0])


@dataclass(frozen=True)
class WeightTable:
    """Weights beta_k^h for k = 0..K (``beta[0]`` is unused and stored as 0).

    ``beta`` holds the full-line values; ``beta_K_boundary`` is the value used
    at |k| = K when the stencil is cut at the integral truncation L_W = K h.
    """

    alpha: float
    h: float
    K: int
    beta: np.ndarray = field(repr=False)
    beta_K_boundary: float

    def symmetric(self, truncated=True):
        """Array over k = -K..K, with the boundary value at +-K if ``truncated``."""
        b = self.beta.copy()
        if truncated:
            b[self.K] = self.beta_K_boundary
        return np.concatenate([b[:0:-1], b])

    def scaled(self):
        """beta_k * |h k|^(1+alpha) for k = 1..K (h independent)."""
        k = np.arange(1, self.K + 1)
        return self.beta[1:] * (self.h * k) ** (1.0 + self.alpha)


def build_weights(alpha, h, K):
    """Weight table for the discrete fractional Laplacian, 0 < alpha < 2."""
    alpha = _check_alpha(alpha)
    if alpha >= 2.0:
        raise DomainError("weights are singular at alpha = 2; use the Gaussian limit operator")
    h = float(h)
    if h <= 0.0:
        raise DomainError(f"h must be positive, got {h}")
    K = int(K)
    if K < 3 or K % 2 == 0:
        raise DomainError(f"K must be an odd integer >= 3, got {K}")
    scale = fractional_constant(alpha) / h ** (1.0 + alpha)
    beta = scale * _unit_weights(alpha, K)
    beta.setflags(write=False)
    return WeightTable(alpha, h, K, beta, scale * _unit_boundary_weight(alpha, K))


def apply_lambda_fullline(w, f):
    """(Lambda f)_j = sum_{k=1..K} beta_k (f_{j+k} + f_{j-k} - 2 f_j) h, zero extension."""
    f = np.asarray(f, dtype=float)
    n = f.size
    pad = np.concatenate([np.zeros(w.K), f, np.zeros(w.K)])
    out = np.zeros(n)
    for k in range(1, min(w.K, n + w.K - 1) + 1):
        out += w.beta[k] * (pad[w.K + k: w.K + k + n] + pad[w.K - k: w.K - k + n])
    out -= 2.0 * np.sum(w.beta[1:]) * f
    return out * w.h


def gauss_2f1(a, b, c, z, rtol=1e-13, max_terms=2000):
    """Gauss hypergeometric series 2F1(a, b; c; z) for |z| <= 0.75."""
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 0.75):
        raise DomainError("gauss_2f1 only sums the series for |z| <= 0.75")
    if c <= 0 and float(c).is_integer():
        raise DomainError("c must not be a non-positive integer")
    term = np.ones_like(z)
    total = np.ones_like(z)
    for n in range(max_terms):
        term = term * (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total = total + term
        if np.all(np.abs(term) <= rtol * np.abs(total)):
            break
    return total if total.ndim else float(total)


def assemble_lambda_truncated(alpha, grid, gamma_decay=None, weights=None):
    """Dense (2J+1)^2 matrix of the fractional Laplacian on [-L, L].

    Outside the domain the unknown is extended algebraically,
    f_{+-l} = f_{+-J} (J / l)^gamma for l >= J, which folds the stencil
    beyond +-J into the two boundary columns; the far field |w| > L_W adds
    the hypergeometric columns.
    """
    alpha = _check_alpha(alpha)
    if gamma_decay is None:
        gamma_decay = 1.0 + alpha
    if not gamma_decay > 0.0:
        raise DomainError(f"gamma_decay must be positive, got {gamma_decay}")
    J, K, h = grid.J, grid.K, grid.h
    w = weights if weights is not None else build_weights(alpha, h, K)
    bsym = w.symmetric(truncated=True)  # index k + K
    c1 = fractional_constant(alpha)
    n = 2 * J + 1
    idx = np.arange(-J, J + 1)

    diff = idx[:, None] - idx[None, :]
    mat = bsym[diff + K] * h
    mat[np.abs(diff) > K] = 0.0

    # boundary columns: l = J..j+K (right) and l = j-K..-J (left)
    for row, j in enumerate(idx):
        l_right = np.arange(J, j + K + 1)
        mat[row, -1] = h * np.sum(bsym[j - l_right + K] * (J / l_right) ** gamma_decay)
        l_left = np.arange(j - K, -J + 1)
        mat[row, 0] = h * np.sum(bsym[j - l_left + K] * (J / np.abs(l_left)) ** gamma_decay)

    qscale = c1 * (J * h) ** gamma_decay / ((K * h) ** (alpha + gamma_decay) * (alpha + gamma_decay))
    a_, b_, c_ = gamma_decay, alpha + gamma_decay, 1.0 + alpha + gamma_decay
    mat[:, -1] += qscale * gauss_2f1(a_, b_, c_, -idx / K)
    mat[:, 0] += qscale * gauss_2f1(a_, b_, c_, idx / K)

    diag = 2.0 * c1 / (alpha * (K * h) ** alpha) + h * np.sum(bsym)
    mat[np.diag_indices(n)] -= diag
    return mat
