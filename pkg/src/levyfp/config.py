"""Run configuration: a flat ``key = value`` document.

Grammar (one entry per line)::

    # comment
    key = value        # trailing comments allowed

Keys are case sensitive and may appear once. Numeric values accept the usual
float syntax and the forms ``pi``, ``2pi`` and ``2*pi``. List values
(``tail_times``) are comma separated. See :data:`FIELDS` for the keys.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, fields

from ._errors import ConfigError
from .weights import VelocityGrid

MODELS = ("homogeneous", "kinetic")
SCHEMES = ("euler", "sl")
PRESETS = ("tc1", "tc2", "tc3", "equilibrium", "random")
SOLVERS = ("direct", "gmres")


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully resolved run parameters.

    Grid: give two of ``h``, ``J``, ``L``. ``K = K_ratio * J + 1`` (rounded up
    to odd), ``gamma_decay`` defaults to ``1 + alpha``. ``init`` is a preset
    name or the path of a CSV file holding the initial state.
    """

    model: str = "homogeneous"
    scheme: str = "euler"
    alpha: float = 1.0
    h: float = 0.0
    J: int = 0
    L: float = 0.0
    K_ratio: int = 10
    K: int = 0
    gamma_decay: float = 0.0
    Nx: int = 0
    period: float = 1.0
    dt: float = 0.01
    T: float = 1.0
    init: str = "tc1"
    init_scale: float = 1.0
    output: str = "run"
    seed: int = 0
    every: int = 1
    levels: int = 3
    dt_refine: float = 4.0
    fit_start: float = 5.0
    fit_end: float = 30.0
    tail_times: tuple = (2.0,)
    tail_vmin: float = 10.0
    linear_solver: str = "direct"

    @property
    def grid(self):
        return VelocityGrid(self.h, self.J, self.K)

    @property
    def n_steps(self):
        return max(1, int(math.ceil(self.T / self.dt - 1e-9)))

    def as_dict(self):
        d = asdict(self)
        d["tail_times"] = ",".join(repr(t) for t in self.tail_times)
        return d

    def replace(self, **changes):
        """Copy with changes, re-resolving derived grid quantities."""
        d = {k: v for k, v in asdict(self).items() if k not in ("K",)}
        d.update(changes)
        if "h" in changes and "J" in changes and "L" not in changes:
            d["L"] = 0.0
        elif "h" in changes and "J" not in changes:
            d["J"] = 0
        elif "J" in changes and "h" not in changes:
            d["h"] = 0.0
        if "alpha" in changes and "gamma_decay" not in changes:
            d["gamma_decay"] = 0.0
        return _resolve(d)


FIELDS = {f.name: f for f in fields(RunConfig)}
_INPUT_KEYS = set(FIELDS) - {"K"}
_INT_KEYS = {"J", "K_ratio", "Nx", "seed", "every", "levels"}
_STR_KEYS = {"model", "scheme", "init", "output", "linear_solver"}
_PI = re.compile(r"^([0-9.eE+-]*)\s*\*?\s*pi$")


def _number(text):
    t = text.strip()
    m = _PI.match(t)
    if m:
        c = m.group(1)
        return (float(c) if c not in ("", "+") else (-1.0 if c == "-" else 1.0)) * math.pi
    return float(t)


def _convert(key, raw, problems):
    try:
        if key in _STR_KEYS:
            return raw
        if key == "tail_times":
            return tuple(_number(p) for p in raw.split(",") if p.strip())
        val = _number(raw)
        if key in _INT_KEYS:
            if not val.is_integer():
                raise ValueError
            return int(val)
        return val
    except ValueError:
        problems.append(f"{key}: cannot parse {raw!r}")
        return None


def parse_config(source):
    """Parse and validate a config document; raise ConfigError listing every problem."""
    problems = []
    values = {}
    unknown = []
    for lineno, line in enumerate(source.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _INPUT_KEYS:
            unknown.append(key)
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        val = _convert(key, raw, problems)
        if val is not None:
            values[key] = val
    if unknown:
        problems.insert(0, "unknown keys: " + ", ".join(sorted(set(unknown))))
    return _resolve(values, problems)


def _resolve(values, problems=None):
    problems = [] if problems is None else problems
    d = {k: v for k, v in values.items() if v is not None}
    model = d.get("model", "homogeneous")
    d.setdefault("init", "tc3" if model == "kinetic" else "tc1")

    def bad(msg):
        problems.append(msg)

    if model not in MODELS:
        bad(f"model must be one of {MODELS}, got {model!r}")
    scheme = d.get("scheme", "euler")
    if scheme not in SCHEMES:
        bad(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if scheme == "sl" and model != "kinetic":
        bad("scheme 'sl' is only defined for the kinetic model")
    if d.get("linear_solver", "direct") not in SOLVERS:
        bad(f"linear_solver must be one of {SOLVERS}")

    alpha = d.get("alpha", 1.0)
    if not (0.0 < alpha <= 2.0):
        bad(f"alpha must lie in (0, 2], got {alpha}")

    h, J, L = d.get("h", 0.0) or None, d.get("J", 0) or None, d.get("L", 0.0) or None
    given = sum(x is not None for x in (h, J, L))
    if given < 2:
        bad("grid: give two of h, J, L")
    else:
        n_before = len(problems)
        if h is not None and h <= 0:
            bad(f"h must be positive, got {h}")
        if J is not None and J < 1:
            bad(f"J must be >= 1, got {J}")
        if L is not None and L <= 0:
            bad(f"L must be positive, got {L}")
        if len(problems) == n_before:
            if J is None:
                ratio = L / h
                if abs(ratio - round(ratio)) > 1e-9 * ratio:
                    bad(f"L / h = {ratio} is not an integer")
                J = max(1, int(round(ratio)))
            elif h is None:
                h = L / J
            else:
                if L is not None and abs(J * h - L) > 1e-9 * L:
                    bad(f"inconsistent grid: J h = {J * h} but L = {L}")
                L = J * h
    K_ratio = d.get("K_ratio", 10)
    if K_ratio < 2:
        bad(f"K_ratio must be >= 2, got {K_ratio}")

    gamma = d.get("gamma_decay", 0.0) or (1.0 + alpha)
    if gamma <= 0:
        bad(f"gamma_decay must be positive, got {gamma}")

    Nx = d.get("Nx", 0)
    if model == "kinetic":
        if Nx < 1:
            bad("kinetic model needs Nx >= 1")
        elif scheme == "euler" and Nx % 2 == 0:
            bad(f"Nx = {Nx} is even; the implicit kinetic scheme requires an odd number of "
                "space points (the centered transport has a spurious invariant otherwise)")
    if d.get("period", 1.0) <= 0:
        bad("period must be positive")
    for key in ("dt", "T"):
        if d.get(key, 1.0) <= 0:
            bad(f"{key} must be positive")
    if d.get("every", 1) < 1:
        bad("every must be >= 1")
    if d.get("levels", 3) < 1:
        bad("levels must be >= 1")
    if d.get("dt_refine", 4.0) < 1:
        bad("dt_refine must be >= 1")
    if d.get("fit_end", 30.0) <= d.get("fit_start", 5.0):
        bad("fit_end must exceed fit_start")
    init = d["init"]
    if init not in PRESETS and not init.lower().endswith(".csv"):
        bad(f"init must be a preset {PRESETS} or a .csv path, got {init!r}")
    if init in ("tc1", "tc2") and model != "homogeneous":
        bad(f"preset {init} is a homogeneous initial datum")
    if init == "tc3" and model != "kinetic":
        bad("preset tc3 is a kinetic initial datum")
    if init == "tc3" and alpha != 1.0:
        bad("preset tc3 needs alpha = 1 (the analytic reference is the Cauchy case)")
    if not d.get("tail_times", (2.0,)):
        bad("tail_times must not be empty")

    if problems:
        raise ConfigError(problems)
    d.update(h=float(h), J=int(J), L=float(L), gamma_decay=float(gamma), model=model, scheme=scheme)
    d["K"] = VelocityGrid(h, J, K_ratio * J + 1).K
    return RunConfig(**{k: v for k, v in d.items() if k in FIELDS})
