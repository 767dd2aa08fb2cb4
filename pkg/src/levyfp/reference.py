"""Reference solutions for the homogeneous (test case 1) and kinetic (test case 3) problems."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._errors import DomainError
from .stable_density import _check_alpha, density_table


@dataclass(frozen=True)
class Tc1Params:
    """Mixture of two relaxing stable profiles: weights theta, centers w."""

    alpha: float = 1.0
    theta: tuple = (0.75, 0.25)
    centers: tuple = (2.0, -6.0)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        if len(self.theta) != len(self.centers):
            raise DomainError("theta and centers must have equal length")
        if abs(math.fsum(self.theta) - 1.0) > 1e-12:
            raise DomainError(f"theta must sum to 1, got {sum(self.theta)}")


def exact_homogeneous(p, t, v):
    """sum_i theta_i s^-1 mu((v - w_i e^{-(t+1)}) / s), s = (1 - e^{-(t+1) alpha})^{1/alpha}."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    v = np.asarray(v, dtype=float)
    a = p.alpha
    s = (-math.expm1(-(t + 1.0) * a)) ** (1.0 / a)
    mu = density_table(a)
    e = math.exp(-(t + 1.0))
    out = np.asarray(sum(th * mu((v - w * e) / s) for th, w in zip(p.theta, p.centers)) / s)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Tc3Params:
    """Kinetic Cauchy (alpha = 1) solution family: time shift t0, space shift x0, drift v0."""

    t0: float = 0.5
    x0: float = 0.0
    v0: float = 1.0

    def __post_init__(self):
        if not self.t0 > 0:
            raise DomainError("t0 must be positive")


def _tau_eta(t):
    tau = -math.expm1(-t)
    return tau, t - tau


def g_exponent(t, xi):
    """g(t, xi) = int_0^t |xi e^{-s} + 1 - e^{-s}| ds, piecewise closed form.

    Middle branch (-tau/(1-tau) <= xi <= 0): eta - xi (2 - tau) - 2 ln(1 - xi).
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    tau, eta = _tau_eta(t)
    xi = np.asarray(xi, dtype=float)
    a = math.expm1(t)  # tau / (1 - tau)
    right = xi * tau + eta
    left = -xi * tau - eta
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = eta - xi * (2.0 - tau) - 2.0 * np.log1p(-np.minimum(xi, 0.0))
    out = np.where(xi >= 0, right, np.where(xi >= -a, mid, left))
    return out if out.ndim else float(out)


def _fourier_of_exp_minus_g(t, w):
    """int_R e^{-g(t, xi)} e^{i xi w} d xi in closed form (complex, vectorized in w)."""
    tau, eta = _tau_eta(t)
    a = math.expm1(t)
    w = np.asarray(w, dtype=float)
    right = math.exp(-eta) / (tau - 1j * w)
    zl = tau + 1j * w
    left = np.exp(eta - a * tau - 1j * a * w) / zl
    z = (2.0 - tau) + 1j * w

    def prim(xi):
        u = 1.0 - xi
        return u * u / z + 2.0 * u / z**2 + 2.0 / z**3

    lower = np.exp(-a * (2.0 - tau) - 1j * a * w) * prim(-a) if a * (2.0 - tau) < 745 else 0.0
    mid = math.exp(-eta) * (prim(0.0) - lower)
    return right + left + mid


def kinetic_profile(t, x, v, v0=1.0):
    """Unshifted solution value at time t (> 0), position x, velocity v."""
    if not t > 0:
        raise DomainError("kinetic reference needs t > 0")
    tau, _ = _tau_eta(t)
    x, v = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
    w = v - v0 * math.exp(-t)
    y = x - v0 * tau
    cauchy = tau / (math.pi * (tau * tau + w * w))
    integral = np.real(np.exp(1j * y) * _fourier_of_exp_minus_g(t, w)) / math.pi
    out = cauchy + integral
    return out if out.ndim else float(out)


def exact_kinetic(p, t, x, v):
    """Solution at simulation time t: the family evaluated at (t + t0, x + x0, v)."""
    if t + p.t0 <= 0:
        raise DomainError("shifted time must be positive")
    return kinetic_profile(t + p.t0, np.asarray(x, dtype=float) + p.x0, v, p.v0)


def kinetic_profile_quadrature(t, x, v, v0=1.0):
    """Whole-line adaptive quadrature of the defining integral (slow oracle, scalar)."""
    from scipy import integrate

    tau, _ = _tau_eta(t)
    w = v - v0 * math.exp(-t)
    y = x - v0 * tau
    a = math.expm1(t)
    f = lambda xi: math.exp(-g_exponent(t, xi)) * math.cos(xi * w + y)  # noqa: E731
    pieces = [(-math.inf, -a), (-a, 0.0), (0.0, math.inf)]
    total = sum(integrate.quad(f, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-12)[0] for lo, hi in pieces)
    return tau / (math.pi * (tau * tau + w * w)) + total / math.pi


def error_norms(fnum, fref, h, M, dx=None):
    """{'linf': max |d|, 'l2mu': sqrt(sum d^2 / M h [dx])} for d = fnum - fref.

    Kinetic states have shape (Nx, 2J+1); ``dx`` then weights the space sum.
    """
    d = np.asarray(fnum, dtype=float) - np.asarray(fref, dtype=float)
    M = np.asarray(M, dtype=float)
    if d.shape[-1] != M.size:
        raise DomainError("last axis must match the velocity grid")
    w = h * (1.0 if dx is None else dx)
    return {"linf": float(np.max(np.abs(d))), "l2mu": math.sqrt(float(np.sum(d * d / M)) * w)}
