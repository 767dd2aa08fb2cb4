"""Simulation drivers: single runs, convergence, decay and tail studies."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._errors import DomainError
from .analysis import EnergyCoefficients, hypocoercivity_energy
from .integrators import PhaseGrid, step_homogeneous, step_kinetic_euler, step_kinetic_sl
from .operator import assemble_lfp
from .reference import Tc1Params, Tc3Params, exact_homogeneous, exact_kinetic

log = logging.getLogger(__name__)

ENERGY_COEFFS = EnergyCoefficients(1.0, 1.0, 0.5)  # frozen a, b, c for the H-energy column

MISSING = "\u2014"  # em dash, printed in place of an undefined order
_ORDER_FLOOR = 1e-11  # errors below this are treated as exact


def tc2_initial(v):
    """1/2 on [-3, -1] plus 1/4 on [0, 4]."""
    v = np.asarray(v, dtype=float)
    return 0.5 * ((v >= -3) & (v <= -1)) + 0.25 * ((v >= 0) & (v <= 4))


def _load_csv_state(path, shape):
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if len(shape) == 1 and data.shape[1] == 2 and data.shape[0] == shape[0]:
        data = data[:, 1]  # (v, f) columns
    data = np.asarray(data, dtype=float).reshape(-1) if len(shape) == 1 else data
    if data.shape != tuple(shape):
        raise DomainError(f"initial state in {path} has shape {data.shape}, expected {tuple(shape)}")
    return data


@dataclass
class Problem:
    """Everything needed to advance one configuration."""

    cfg: object
    op: object
    pg: PhaseGrid | None
    f0: np.ndarray
    reference: object = None  # callable t -> state, or None

    @property
    def kinetic(self):
        return self.pg is not None

    @property
    def cell(self):
        return self.op.grid.h * (self.pg.dx if self.kinetic else 1.0)

    def mass(self, f):
        return float(np.sum(f)) * self.cell

    def weighted_mass(self, f):
        w = self.op.mass_weights
        return float(np.sum(f @ w) * (self.pg.dx if self.kinetic else 1.0))

    def l2mu(self, f):
        return math.sqrt(float(np.sum(f * f / self.op.M)) * self.cell)

    def energy(self, f):
        if not self.kinetic:
            return math.nan
        return hypocoercivity_energy(f, ENERGY_COEFFS, self.pg, self.op.M)

    def step(self, f, dt):
        cfg = self.cfg
        if not self.kinetic:
            return step_homogeneous(self.op, f, dt)
        if cfg.scheme == "sl":
            return step_kinetic_sl(self.op, self.pg, f, dt)
        return step_kinetic_euler(self.op, self.pg, f, dt, cfg.linear_solver)


def build_problem(cfg, op=None):
    """Assemble the operator and the initial state described by ``cfg``."""
    grid = cfg.grid
    if op is None:
        op = assemble_lfp(cfg.alpha, grid, cfg.gamma_decay)
    v = grid.v
    pg = None
    if cfg.model == "kinetic":
        pg = PhaseGrid(cfg.Nx, grid, cfg.period, require_odd=cfg.scheme == "euler")
        X, V = np.meshgrid(pg.x, v, indexing="ij")
    ref = None
    init = cfg.init
    if init == "tc1":
        p = Tc1Params(cfg.alpha)
        ref = lambda t: exact_homogeneous(p, t, v)  # noqa: E731
        f0 = ref(0.0)
    elif init == "tc2":
        f0 = tc2_initial(v)
    elif init == "tc3":
        p = Tc3Params()
        ref = lambda t: exact_kinetic(p, t, X, V)  # noqa: E731
        f0 = ref(0.0)
    elif init == "equilibrium":
        state = cfg.init_scale * (np.broadcast_to(op.M, pg.shape) if pg else op.M)
        state = np.array(state)
        ref = lambda t: state  # noqa: E731
        f0 = state.copy()
    elif init == "random":
        rng = np.random.default_rng(cfg.seed)
        bumps = sum(a * np.exp(-((v - c) ** 2)) for a, c in zip(rng.uniform(0.1, 1, 4), rng.uniform(-3, 3, 4)))
        if pg is None:
            f0 = op.M * (1.0 + bumps)
        else:
            k, ph = rng.integers(1, 4), rng.uniform(0, 2 * math.pi)
            f0 = op.M * (1.0 + bumps) * (1.0 + 0.5 * np.cos(2 * math.pi * k * X / cfg.period + ph))
    else:
        f0 = _load_csv_state(init, pg.shape if pg else (grid.n,))
    return Problem(cfg, op, pg, np.asarray(f0, dtype=float), ref)


@dataclass
class Trace:
    """Snapshot series of one run."""

    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    weighted_mass: list = field(default_factory=list)
    norm: list = field(default_factory=list)
    error_linf: list = field(default_factory=list)
    error_l2mu: list = field(default_factory=list)
    henergy: list = field(default_factory=list)
    min_f: list = field(default_factory=list)

    COLUMNS = ("t", "mass", "weighted_mass", "l2M", "Henergy", "min_f", "error_linf", "error_l2mu")

    def rows(self):
        return list(zip(self.t, self.mass, self.weighted_mass, self.norm, self.henergy, self.min_f,
                        self.error_linf, self.error_l2mu))

    def max_error(self):
        e_inf = [e for e in self.error_linf if not math.isnan(e)]
        e_2 = [e for e in self.error_l2mu if not math.isnan(e)]
        return (max(e_inf) if e_inf else math.nan, max(e_2) if e_2 else math.nan)

    def mass_drift(self):
        w = np.asarray(self.weighted_mass)
        return float(np.max(np.abs(w - w[0])) / max(abs(w[0]), 1e-300))

    def norm_increases(self, rtol=1e-12):
        n = np.asarray(self.norm)
        return int(np.sum(n[1:] > n[:-1] * (1 + rtol)))


def simulate(problem, T=None, dt=None, every=None, on_snapshot=None):
    """Advance to time T, recording a snapshot every ``every`` steps and at the end."""
    cfg = problem.cfg
    T = cfg.T if T is None else T
    dt = cfg.dt if dt is None else dt
    every = cfg.every if every is None else every
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    dt = T / n
    trace = Trace()
    f = problem.f0.copy()

    def record(t, f):
        trace.t.append(t)
        trace.mass.append(problem.mass(f))
        trace.weighted_mass.append(problem.weighted_mass(f))
        trace.norm.append(problem.l2mu(f))
        trace.henergy.append(problem.energy(f))
        trace.min_f.append(float(np.min(f)))
        if problem.reference is not None:
            d = f - problem.reference(t)
            trace.error_linf.append(float(np.max(np.abs(d))))
            trace.error_l2mu.append(problem.l2mu(d))
        else:
            trace.error_linf.append(math.nan)
            trace.error_l2mu.append(math.nan)
        if on_snapshot is not None:
            on_snapshot(t, f)

    record(0.0, f)
    for k in range(1, n + 1):
        f = problem.step(f, dt)
        if k % every == 0 or k == n:
            record(k * dt, f)
    if min(trace.min_f) < 0:
        log.info("negative values observed (min %.3e); not enforced", min(trace.min_f))
    return f, trace


def conservation_tolerance(cfg):
    return 1e-8 if cfg.linear_solver == "gmres" else 1e-10


# ---------------------------------------------------------------- convergence


@dataclass
class StudyRow:
    resolution: float
    error_linf: float
    error_l2mu: float
    order_linf: float
    order_l2mu: float
    mass_drift: float
    runtime_seconds: float
    Nx: int = 0


@dataclass
class StudyReport:
    rows: list = field(default_factory=list)
    failure: str | None = None

    COLUMNS = ("h", "Nx", "error_linf", "error_l2mu", "order_linf", "order_l2mu", "mass_drift")

    @staticmethod
    def fmt_order(x):
        return MISSING if math.isnan(x) else f"{x:.4f}"

    def table(self):
        """Deterministic rows (runtimes excluded) for CSV emission."""
        return [(r.resolution, r.Nx, r.error_linf, r.error_l2mu, self.fmt_order(r.order_linf),
                 self.fmt_order(r.order_l2mu), r.mass_drift) for r in self.rows]

    def errors(self, norm="l2mu"):
        return np.array([getattr(r, "error_" + norm) for r in self.rows])

    def fitted_order(self, last=3, norm="l2mu"):
        """Least-squares slope of -log2(error) against level over the last ``last`` rows."""
        e = self.errors(norm)[-last:]
        h = np.array([r.resolution for r in self.rows])[-last:]
        if len(e) < 2 or np.any(e <= _ORDER_FLOOR):
            return math.nan
        return float(np.polyfit(np.log2(h), np.log2(e), 1)[0])


def observed_order(e_coarse, e_fine):
    """log2(e_{2h} / e_h), NaN when either error is at round-off level."""
    if not (e_coarse > _ORDER_FLOOR and e_fine > _ORDER_FLOOR):
        return math.nan
    return math.log2(e_coarse / e_fine)


def level_config(base, level):
    """Level ``level`` of a study: h / 2^l, dt / dt_refine^l, Nx doubled (kept odd for Euler)."""
    s = 2 ** level
    changes = dict(J=base.J * s, h=base.h / s, L=base.L, dt=base.dt / base.dt_refine ** level)
    if base.model == "kinetic":
        Nx = base.Nx * s
        if base.scheme == "euler" and Nx % 2 == 0:
            Nx += 1
        changes["Nx"] = Nx
    return base.replace(**changes)


def _run_level(cfg):
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    if problem.reference is None:
        raise DomainError(f"initial datum {cfg.init!r} has no reference solution")
    _, trace = simulate(problem)
    e_inf, e_2 = trace.max_error()
    return cfg, e_inf, e_2, trace.mass_drift(), time.perf_counter() - t0


def run_convergence_study(base, levels=None, workers=1):
    """Refine the base configuration ``levels`` times and compare with the reference.

    The time step is divided by ``base.dt_refine`` per level (4 keeps
    dt proportional to h^2, which exposes the second-order spatial error of
    the first-order implicit Euler scheme).
    """
    levels = base.levels if levels is None else int(levels)
    if levels < 1:
        raise DomainError("levels must be >= 1")
    cfgs = [level_config(base, l) for l in range(levels)]
    report = StudyReport()
    results = []
    try:
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                futures = [ex.submit(_run_level, c) for c in cfgs]
                for fut in futures:
                    results.append(fut.result())
        else:
            for c in cfgs:
                results.append(_run_level(c))
    except Exception as exc:  # noqa: BLE001 - keep the partial report
        report.failure = f"level {len(results)} failed: {exc}"
        log.error(report.failure)
    prev = None
    for cfg, e_inf, e_2, drift, secs in results:
        o_inf = observed_order(prev[0], e_inf) if prev else math.nan
        o_2 = observed_order(prev[1], e_2) if prev else math.nan
        report.rows.append(StudyRow(cfg.h, e_inf, e_2, o_inf, o_2, drift, secs, cfg.Nx))
        prev = (e_inf, e_2)
    return report


# ---------------------------------------------------------------- decay


def fit_log_linear(t, d, window):
    """Least-squares slope and R^2 of log d against t on [t0, t1] (positive d only)."""
    t, d = np.asarray(t), np.asarray(d)
    m = (t >= window[0]) & (t <= window[1]) & (d > 0)
    if m.sum() < 3:
        return math.nan, math.nan
    y = np.log(d[m])
    c = np.polyfit(t[m], y, 1)
    res = y - np.polyval(c, t[m])
    var = y.var()
    return float(c[0]), float(1.0 - res.var() / var) if var > 0 else math.nan


@dataclass
class DecayReport:
    t: np.ndarray
    distance: np.ndarray
    mass: np.ndarray
    weighted_mass: np.ndarray
    rate: float
    r2: float
    ref_distance: np.ndarray | None = None
    ref_rate: float = math.nan
    ref_r2: float = math.nan
    error_linf: float = math.nan

    COLUMNS = ("t", "distance", "ref_distance", "mass", "weighted_mass")

    def table(self):
        ref = self.ref_distance if self.ref_distance is not None else np.full(self.t.size, math.nan)
        return list(zip(self.t, self.distance, ref, self.mass, self.weighted_mass))

    def mass_drift(self):
        w = self.weighted_mass
        return float(np.max(np.abs(w - w[0])) / abs(w[0]))


def run_decay_study(cfg, problem=None):
    """Distance to the discrete global equilibrium over time, with fitted exponential rate."""
    if cfg.model != "kinetic":
        raise DomainError("decay study needs the kinetic model")
    problem = problem or build_problem(cfg)
    op, pg = problem.op, problem.pg
    w = op.mass_weights
    # f_inf = <f0> / <M> M with <.> the space-averaged weighted mass; w.M need not be 1
    finf = float(np.sum(problem.f0 @ w)) / pg.Nx / float(w @ op.M) * op.M
    ref_M = op.M  # the reference solution relaxes to M itself (unit mean in x)
    dist, ref_dist, errs = [], [], []

    def snap(t, f):
        dist.append(problem.l2mu(f - finf))
        if problem.reference is not None and cfg.init == "tc3":
            r = problem.reference(t)
            ref_dist.append(problem.l2mu(r - ref_M))
            errs.append(float(np.max(np.abs(f - r))))

    _, trace = simulate(problem, on_snapshot=snap)
    t = np.asarray(trace.t)
    window = (cfg.fit_start, cfg.fit_end)
    rate, r2 = fit_log_linear(t, dist, window)
    rep = DecayReport(t, np.asarray(dist), np.asarray(trace.mass), np.asarray(trace.weighted_mass), rate, r2)
    if ref_dist:
        rep.ref_distance = np.asarray(ref_dist)
        rep.ref_rate, rep.ref_r2 = fit_log_linear(t, ref_dist, window)
        rep.error_linf = max(errs)
    return rep


# ---------------------------------------------------------------- tails


@dataclass
class TailFit:
    t: float
    slope: float
    slope_left: float
    points: int
    skipped: str | None = None


def tail_slope(v, f, vmin, vmax):
    """Log-log slope of f over vmin <= |v| <= vmax on each side; raises if f <= 0 there."""
    v, f = np.asarray(v), np.asarray(f)
    out = []
    for side in (1.0, -1.0):
        m = (side * v >= vmin) & (side * v <= vmax + 1e-12)
        if m.sum() < 2:
            raise DomainError("fewer than two points in the fit window")
        if np.any(f[m] <= 0):
            raise DomainError(f"nonpositive density in the fit window (side {'+' if side > 0 else '-'})")
        out.append(float(np.polyfit(np.log(side * v[m]), np.log(f[m]), 1)[0]))
    return out[0], out[1], int(m.sum())


def run_tail_study(cfg, times=None, problem=None):
    """Tail slopes of the homogeneous solution at the requested times."""
    if cfg.model != "homogeneous":
        raise DomainError("tail study needs the homogeneous model")
    times = sorted(cfg.tail_times if times is None else times)
    problem = problem or build_problem(cfg)
    v = problem.op.grid.v
    fits = []
    f, t_now = problem.f0.copy(), 0.0
    for t in times:
        if t > t_now:
            n = max(1, int(math.ceil((t - t_now) / cfg.dt - 1e-9)))
            dt = (t - t_now) / n
            for _ in range(n):
                f = problem.step(f, dt)
            t_now = t
        try:
            s, sl, npts = tail_slope(v, f, cfg.tail_vmin, cfg.L)
            fits.append(TailFit(t, s, sl, npts))
        except DomainError as exc:
            fits.append(TailFit(t, math.nan, math.nan, 0, str(exc)))
    return fits
