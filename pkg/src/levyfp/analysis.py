"""Discrete norms, difference operators, bilinear forms and functional-inequality probes.

Conventions: every 1D array is indexed j = -J..J (centered). Sums that run
over Z in the continuous statements are truncated at the array ends; how the
outside is treated is spelled out per function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._errors import DomainError
from .weights import build_weights


def weighted_l2_norm(f, gamma, h):
    """sqrt(sum_j f_j^2 gamma_j h). ``gamma=None`` means the flat weight 1."""
    f = np.asarray(f, dtype=float)
    w = np.ones_like(f) if gamma is None else np.asarray(gamma, dtype=float)
    if w.shape != f.shape:
        raise DomainError("weight and sequence shapes differ")
    return math.sqrt(float(np.sum(f * f * w)) * h)


def _hurwitz_window(p, lo, hi):
    """sum_{k=lo}^{hi} k^(-p) for integer arrays lo >= 1 (hi may be inf)."""
    lo = np.asarray(lo, dtype=float)
    out = special.zeta(p, lo)
    if np.isfinite(hi):
        out = out - special.zeta(p, np.maximum(lo, hi + 1.0))
        out = np.where(lo > hi, 0.0, out)
    return out


def frac_sobolev_seminorm(f, s, gamma=None, h=1.0, k_max=None, window="zero"):
    """Discrete fractional seminorm |f|_{H^s_h(gamma)}.

    sqrt( sum_j sum_{0<|k|<=k_max} (f_j - f_{j+k})^2 / |hk|^(1+2s) gamma_j h^2 )

    ``window="zero"``: f is zero outside the array; pairs with one index
    outside are included (with gamma_j for j inside; for the flat weight the
    j-outside terms are included as well). ``k_max=None`` sums to infinity
    using Hurwitz-zeta tails.
    ``window="restrict"``: only pairs with both indices inside the array.
    """
    s = float(s)
    if not (0.0 < s <= 1.0):
        raise DomainError(f"s must lie in (0, 1], got {s}")
    if window not in ("zero", "restrict"):
        raise ValueError(f"unknown window {window!r}")
    f = np.asarray(f, dtype=float)
    n = f.size
    flat = gamma is None
    g = np.ones(n) if flat else np.asarray(gamma, dtype=float)
    p = 1.0 + 2.0 * s
    kmax = math.inf if k_max is None else int(k_max)
    if window == "restrict" and k_max is None:
        kmax = n - 1
    total = 0.0
    for k in range(1, int(min(kmax, n - 1)) + 1):
        d = f[:-k] - f[k:]
        total += float(np.sum(d * d * (g[:-k] + g[k:]))) / k**p
    if window == "zero":
        i = np.arange(n)
        # k > 0 with i + k >= n, and k < 0 with i + k < 0
        right = _hurwitz_window(p, n - i, kmax)
        left = _hurwitz_window(p, i + 1, kmax)
        mult = 2.0 if flat else 1.0
        total += mult * float(np.sum(f * f * g * (right + left)))
    return math.sqrt(total * h * h / h**p)


def diff(f, mode, h):
    """Finite differences with zero extension: forward, centered or second-centered."""
    f = np.asarray(f, dtype=float)
    z = np.concatenate([[0.0, 0.0], f, [0.0, 0.0]])
    n = f.size
    if mode == "forward":
        return (z[3: 3 + n] - z[2: 2 + n]) / h
    if mode == "centered":
        return (z[3: 3 + n] - z[1: 1 + n]) / (2.0 * h)
    if mode == "second-centered":
        return (z[4: 4 + n] + z[0:n] - 2.0 * f) / (4.0 * h * h)
    raise ValueError(f"unknown difference mode {mode!r}")


def _beta(weights, k_max):
    k_max = weights.K if k_max is None else min(int(k_max), weights.K)
    return weights.beta, k_max


def sym_form(f, g, weights, M, h, k_max=None):
    """S(f, g) = 1/2 sum_{j,k} beta_k (F_j - F_{j+k})(G_j - G_{j+k}) M_j h^2.

    F = f/M, G = g/M; only pairs with both indices inside the array enter.
    """
    M = np.asarray(M, dtype=float)
    F = np.asarray(f, dtype=float) / M
    G = np.asarray(g, dtype=float) / M
    beta, kmax = _beta(weights, k_max)
    n = M.size
    total = 0.0
    for k in range(1, min(kmax, n - 1) + 1):
        dF = F[:-k] - F[k:]
        dG = G[:-k] - G[k:]
        total += beta[k] * float(np.sum(dF * dG * (M[:-k] + M[k:])))
    return 0.5 * total * h * h


def skew_form(f, g, weights, M, VM, h, k_max=None):
    """A(f, g): nonlocal skew part plus the drift term with half-point values VM.

    ``VM[i]`` sits between array entries i and i + 1.
    """
    M = np.asarray(M, dtype=float)
    F = np.asarray(f, dtype=float) / M
    G = np.asarray(g, dtype=float) / M
    VM = np.asarray(VM, dtype=float)
    if VM.size != M.size - 1:
        raise DomainError("VM must have one entry per interface")
    beta, kmax = _beta(weights, k_max)
    n = M.size
    nonlocal_part = 0.0
    for k in range(1, min(kmax, n - 1) + 1):
        cross = F[:-k] * G[k:] - G[:-k] * F[k:]
        nonlocal_part += beta[k] * float(np.sum(cross * (M[:-k] - M[k:])))
    drift = float(np.sum(VM * (F[1:] * G[:-1] - F[:-1] * G[1:])))
    return -0.5 * nonlocal_part * h * h - 0.5 * drift


def project_equilibrium(f, M, h):
    """(Pi f)_j = M_j (sum f h) / (sum M h)."""
    f = np.asarray(f, dtype=float)
    M = np.asarray(M, dtype=float)
    return M * (math.fsum(f) / math.fsum(M))


@dataclass(frozen=True)
class EnergyCoefficients:
    """Coefficients of the twisted H^1 energy; requires c^2 < a b."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError("a and b must be positive")
        if not self.c * self.c < self.a * self.b:
            raise DomainError(f"need c^2 < a b, got a={self.a}, b={self.b}, c={self.c}")


def _dx_periodic(f, dx):
    return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * dx)


def _dv_zero(f, dv):
    z = np.pad(f, ((0, 0), (1, 1)))
    return (z[:, 2:] - z[:, :-2]) / (2.0 * dv)


def hypocoercivity_energy(f, coeffs, pg, M):
    """H(f) = |f|^2 + a |D_x f|^2 + b |D_v f|^2 + 2c <D_x f, D_v f>, all in l2(M^-1) dx dv."""
    if not isinstance(coeffs, EnergyCoefficients):
        coeffs = EnergyCoefficients(*coeffs)
    f = np.asarray(f, dtype=float)
    w = (pg.dx * pg.dv) / np.asarray(M, dtype=float)[None, :]
    fx = _dx_periodic(f, pg.dx)
    fv = _dv_zero(f, pg.dv)
    return float(np.sum(w * (f * f + coeffs.a * fx * fx + coeffs.b * fv * fv + 2.0 * coeffs.c * fx * fv)))


def energy_parts(f, pg, M):
    """(|f|^2, |D_x f|^2, |D_v f|^2, <D_x f, D_v f>) in l2(M^-1) dx dv."""
    f = np.asarray(f, dtype=float)
    w = (pg.dx * pg.dv) / np.asarray(M, dtype=float)[None, :]
    fx = _dx_periodic(f, pg.dx)
    fv = _dv_zero(f, pg.dv)
    return tuple(float(np.sum(w * q)) for q in (f * f, fx * fx, fv * fv, fx * fv))


def operator_sym_form(f, g, op):
    """S(f, g) for an assembled operator (truncated, window or Gaussian limit)."""
    h = op.grid.h if hasattr(op, "grid") else op.h
    if op.alpha == 2.0:
        M = op.M
        F, G = f / M, g / M
        c = 0.5 * (M[:-1] + M[1:]) / h
        return float(np.sum(c * np.diff(F) * np.diff(G)))
    w = getattr(op, "weights", None)
    if w is None:
        w = build_weights(op.alpha, h, op.grid.K)
    return sym_form(f, g, w, op.M, h)


def poincare_ratio(f, op):
    """|f - Pi f|^2_{l2(M^-1)} / S(f, f); 0 when f is proportional to M."""
    h = op.grid.h if hasattr(op, "grid") else op.h
    M = op.M
    f = np.asarray(f, dtype=float)
    r = f - project_equilibrium(f, M, h)
    num = weighted_l2_norm(r, 1.0 / M, h) ** 2
    den = operator_sym_form(f, f, op)
    scale = weighted_l2_norm(f, 1.0 / M, h) ** 2
    if num <= 1e-24 * max(scale, 1e-300) or den <= 0.0:
        return 0.0
    return num / den


def _interp_terms(f, h, s):
    dp = weighted_l2_norm(diff(f, "forward", h), None, h) ** 2
    dfs = frac_sobolev_seminorm(diff(f, "centered", h), s, None, h) ** 2
    hs = weighted_l2_norm(f, None, h) ** 2 + frac_sobolev_seminorm(f, s, None, h) ** 2
    return dp, dfs, hs


def interp_excess(f, h, s, eps):
    """(|D+ f|^2 - eps |D f|^2_{H^s}) / |f|^2_{H^s}: the smallest K(eps) this f needs.

    Flat norms on the whole line (zero extension).
    """
    dp, dfs, hs = _interp_terms(f, h, s)
    return (dp - eps * dfs) / hs


def interp_ratio(f, h, s, eps):
    """|D+ f|^2 / (eps |D f|^2_{H^s} + |f|^2_{H^s}).

    Bounded uniformly in h exactly when an interpolation bound
    |D+ f|^2 <~ eps |D f|^2_{H^s} + K |f|^2_{H^s} holds with h-independent
    constants; unlike :func:`interp_excess` it is not a difference of
    comparable terms, so it can be compared across meshes.
    """
    dp, dfs, hs = _interp_terms(f, h, s)
    return dp / (eps * dfs + hs)


def _commutator(f, op):
    Df = diff(f, "centered", op.h)
    return diff(op.L_mat @ f, "centered", op.h) - op.L_mat @ Df, Df


def commutator_norm_ratio(f, op):
    """sup_g |<[D, L] f, g>| / (|g| (|f| + |D f|)) = |[D, L] f| / (|f| + |D f|).

    The two end entries are dropped: there D (L f) sees the artificial zero
    outside the window.
    """
    h, M = op.h, op.M
    comm, Df = _commutator(f, op)
    num = weighted_l2_norm(comm[1:-1], 1.0 / M[1:-1], h)
    return num / (weighted_l2_norm(f, 1.0 / M, h) + weighted_l2_norm(Df, 1.0 / M, h))


def commutator_ratio(f, g, op):
    """|<[D, L] f, g>_{l2(M^-1)}| / (|f| |g| + |D f| |g|)."""
    h, M = op.h, op.M
    comm, Df = _commutator(f, op)
    num = abs(float(np.sum(comm * g / M)) * h)
    nf = weighted_l2_norm(f, 1.0 / M, h)
    ng = weighted_l2_norm(g, 1.0 / M, h)
    nd = weighted_l2_norm(Df, 1.0 / M, h)
    return num / (nf * ng + nd * ng)


# Deterministic test battery: 20 seeded random bump sums plus 5 structured shapes,
# all supported in [-BATTERY_RADIUS, BATTERY_RADIUS].
BATTERY_RADIUS = 6.0
BATTERY_NAMES = tuple([f"random{i:02d}" for i in range(20)]
                      + ["spike", "step", "gaussian", "cauchy", "sine"])


def _window(v):
    return np.clip(1.0 - (v / 5.5) ** 2, 0.0, None) ** 3


def _bump(v, c, w):
    return np.clip(1.0 - ((v - c) / w) ** 2, 0.0, None) ** 3


def _battery_params(seed=20240611):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(20):
        amps = rng.uniform(0.2, 1.0, 3) * rng.choice([-1.0, 1.0], 3)
        amps[0] = abs(amps[0]) + 0.5
        out.append((amps, rng.uniform(-3.0, 3.0, 3), rng.uniform(0.5, 2.0, 3)))
    return out


_PARAMS = _battery_params()


def battery_function(name, v):
    """Evaluate a battery member at velocities ``v``."""
    v = np.asarray(v, dtype=float)
    if name.startswith("random"):
        amps, cs, ws = _PARAMS[int(name[6:])]
        return sum(a * _bump(v, c, w) for a, c, w in zip(amps, cs, ws))
    if name == "spike":
        return np.clip(1.0 - np.abs(v) / 0.5, 0.0, None)
    if name == "step":
        return (np.abs(v) <= 1.0).astype(float)
    if name == "gaussian":
        return np.exp(-v * v) * _window(v)
    if name == "cauchy":
        return _window(v) / (1.0 + v * v)
    if name == "sine":
        return np.sin(2.0 * v) * _window(v)
    raise KeyError(name)


def battery_samples(v):
    """All 25 battery members sampled at ``v``, in :data:`BATTERY_NAMES` order."""
    return [battery_function(name, v) for name in BATTERY_NAMES]


def probe_operator(alpha, h, kernel_width=8.0):
    """Window operator wide enough for the battery: kernel cut at |w| <= kernel_width."""
    from .operator import assemble_lfp_fullline

    K = int(math.ceil(kernel_width / h))
    K += 1 - K % 2
    N = int(math.ceil(BATTERY_RADIUS / h)) + K
    return assemble_lfp_fullline(alpha, h, N, K)


def run_probe(alpha, h, suite, eps=0.1, s=None):
    """Rows (test_id, ratio at h, ratio at h/2) for one probe suite."""
    if suite not in ("poincare", "interp", "commutator"):
        raise ValueError(f"unknown probe suite {suite!r}")
    if s is None:
        s = min(0.5 * alpha, 0.99)
    cols = []
    for hh in (h, 0.5 * h):
        op = probe_operator(alpha, hh) if suite != "interp" else None
        v = op.v if op is not None else hh * np.arange(-int(round(BATTERY_RADIUS / hh)) - 2,
                                                        int(round(BATTERY_RADIUS / hh)) + 3)
        fs = battery_samples(v)
        if suite == "poincare":
            cols.append([poincare_ratio(f, op) for f in fs])
        elif suite == "interp":
            cols.append([interp_ratio(f, hh, s, eps) for f in fs])
        else:
            cols.append([commutator_norm_ratio(f, op) for f in fs])
    return [(name, a, b) for name, a, b in zip(BATTERY_NAMES, cols[0], cols[1])]
