"""Scenario layer: scheme builders, maximum distance, and parameter sweeps."""

from __future__ import annotations

import ast
import math
import operator
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConsistencyError, DomainError, ValidationError
from .fiber import distance_to_transmissivity, plob_reference, transmissivity_to_distance
from .protocol import ChannelParams, GroupSpec, ProtocolConfig
from .rates import RateReport, optimize_modulation, secret_key_rate

__all__ = [
    "distance_to_transmissivity", "transmissivity_to_distance", "plob_reference",
    "build_scheme", "max_distance", "SweepSpec", "Series", "SweepRow", "SweepResult",
    "run_sweep", "apply_override", "parse_splitting",
]

DEFAULT_USERS = 12
DISTANCE_CAP_KM = 500.0
DISTANCE_TOL_KM = 0.05
PRESCAN_POINTS = 16
SCHEMES = ("bipartite", "Y", "X", "switch")


def parse_splitting(splitting: str | Sequence[float], n: int) -> tuple[int, int]:
    """``"5/95"`` (percent) -> ``(N1, N2)`` with ``N1 = round(p N) >= 1`` and ``N2 = N - N1 >= 1``."""
    if isinstance(splitting, str):
        parts = splitting.split("/")
        if len(parts) != 2:
            raise ValidationError(f"splitting must look like '50/50', got {splitting!r}")
        try:
            p1, p2 = (float(p) for p in parts)
        except ValueError:
            raise ValidationError(f"splitting must look like '50/50', got {splitting!r}") from None
    else:
        p1, p2 = splitting
    if p1 <= 0 or p2 <= 0:
        raise ValidationError(f"splitting shares must be positive, got {splitting!r}")
    n1 = max(1, int(round(p1 / (p1 + p2) * n)))
    n2 = n - n1
    if n2 < 1:
        raise ValidationError(f"splitting {splitting!r} leaves no users in group 2 for N={n}")
    return n1, n2


def _pad(values: Sequence[float] | float | None, m: int, default: float, what: str) -> list[float]:
    if values is None:
        return [default] * m
    if isinstance(values, (int, float)):
        return [float(values)] * m
    values = list(values)
    if len(values) != m:
        raise ValidationError(f"{what} needs {m} entries, got {len(values)}")
    return [float(v) for v in values]


def build_scheme(
    kind: str,
    M: int | None = None,
    N: int = DEFAULT_USERS,
    distances: Sequence[float] = (0.0, 0.0),
    noises: Sequence[float] | float | None = None,
    *,
    splitting: str | Sequence[float] | None = None,
    members: Sequence[int] | None = None,
    dummies: Sequence[int] | None = None,
    mu: float = 1e6,
    tau: float = 1.0,
    xi: float = 1.0,
) -> ProtocolConfig:
    """Build a configuration for one of the standard geometries.

    ``distances`` (km) has two entries for every kind:
    bipartite ``(d1, d2)``; Y ``(d_shallow, d_deep)`` with the last group
    deep; X ``(d_12, d_34)``; switch is Y with pairwise detection.
    ``noises`` gives one omega per group (or a scalar). Group sizes default
    to ``N/M`` (``splitting`` for bipartite), or are set by ``members``.
    """
    if kind not in SCHEMES:
        raise ValidationError(f"unknown scheme {kind!r}; use one of {SCHEMES}")
    if kind == "bipartite":
        m = 2 if M is None else M
        if m != 2:
            raise ValidationError("bipartite scheme has M = 2")
    elif kind == "X":
        m = 4 if M is None else M
        if m != 4:
            raise ValidationError("X scheme has M = 4")
    else:
        m = 3 if M is None else M
        if m not in (3, 4):
            raise ValidationError(f"{kind} scheme needs M in (3, 4), got {m}")
    dist = list(distances)
    if len(dist) != 2:
        raise ValidationError(f"distances needs two entries, got {len(dist)}")
    if kind == "bipartite":
        per_group = dist
    elif kind == "X":
        per_group = [dist[0], dist[0], dist[1], dist[1]]
    else:
        per_group = [dist[0]] * (m - 1) + [dist[1]]

    if members is not None:
        sizes = [int(v) for v in members]
        if len(sizes) != m:
            raise ValidationError(f"members needs {m} entries, got {len(sizes)}")
    elif kind == "bipartite" and splitting is not None:
        sizes = list(parse_splitting(splitting, N))
    else:
        if N % m:
            raise ValidationError(f"N={N} is not divisible by M={m}; pass members explicitly")
        sizes = [N // m] * m
    omegas = _pad(noises, m, 1.0, "noises")
    dums = [int(v) for v in _pad(dummies, m, 0, "dummies")]
    groups = tuple(GroupSpec.at_distance(s, d, w, k) for s, d, w, k in zip(sizes, per_group, omegas, dums))
    total = max(N, sum(gr.located for gr in groups))
    return ProtocolConfig(groups, mu=mu, tau=tau, xi=xi, total_users=total, switch=(kind == "switch"))


def _rate_at_distance(cfg: ProtocolConfig, group: Sequence[int], d: float, mu_max: float) -> float:
    try:
        new = apply_override(cfg, _group_path(group, "distance_km"), d)
    except ValidationError:
        return -math.inf
    if any(gr.eta == 0.0 for gr in new.groups):
        return -math.inf
    return optimize_modulation(new, mu_max)[1].rate


def _group_path(group: Sequence[int], attr: str) -> str:
    return f"group[{','.join(str(i) for i in group)}].{attr}"


def max_distance(
    cfg: ProtocolConfig,
    moving_group: int | Sequence[int],
    d_max_cap: float = DISTANCE_CAP_KM,
    tol_km: float = DISTANCE_TOL_KM,
    mu_max: float = 1e6,
) -> float | None:
    """Largest distance of ``moving_group`` with a positive optimized rate.

    ``None`` if the rate is not positive at 0 km, ``inf`` if it is still
    positive at the cap. A 16-point pre-scan must show a single sign change.
    """
    group = [moving_group] if isinstance(moving_group, int) else list(moving_group)
    for j in group:
        if not 0 <= j < cfg.n_groups:
            raise ValidationError(f"group index {j} out of range")
    f = lambda d: _rate_at_distance(cfg, group, d, mu_max)  # noqa: E731
    if not f(0.0) > 0.0:
        return None
    grid = np.linspace(0.0, d_max_cap, PRESCAN_POINTS)
    signs = [True] + [f(float(d)) > 0.0 for d in grid[1:]]
    changes = sum(a != b for a, b in zip(signs, signs[1:]))
    if changes > 1:
        raise ConsistencyError("rate changes sign more than once along the distance axis")
    if changes == 0:
        return math.inf
    k = signs.index(False)
    lo, hi = float(grid[k - 1]), float(grid[k])
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- parameter paths -------------------------------------------------------

_PATH = re.compile(r"^group\[(\*|\d+(?:\s*,\s*\d+)*)\]\.(distance_km|eta|omega|members|dummies)$")
_TOP = ("mu", "tau", "xi", "total_users")


def _member_expr(expr: str | int | float, n: int) -> int:
    """Evaluate an integer expression in ``N`` such as ``"N/2-1"``."""
    if isinstance(expr, (int, float)):
        return int(expr)
    ops = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.FloorDiv: operator.floordiv}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "N":
            return n
        if isinstance(node, ast.BinOp) and type(node.op) in ops:
            return ops[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        raise ValidationError(f"unsupported member expression {expr!r}")

    try:
        tree = ast.parse(str(expr), mode="eval")
    except SyntaxError:
        raise ValidationError(f"bad member expression {expr!r}") from None
    value = ev(tree)
    if value != int(value):
        raise ValidationError(f"member expression {expr!r} is not an integer at N={n}")
    return int(value)


def apply_override(cfg: ProtocolConfig, path: str, value: Any) -> ProtocolConfig:
    """Return ``cfg`` with the parameter at ``path`` set to ``value``.

    Paths: ``mu``, ``tau``, ``xi``, ``total_users``, or
    ``group[i].attr`` / ``group[i,j].attr`` / ``group[*].attr`` with attr in
    distance_km, eta, omega, members, dummies. ``members`` may be an
    expression in ``N`` (the current total user count).
    """
    if path in _TOP:
        if path == "total_users":
            value = int(value)
            located = sum(gr.located for gr in cfg.groups)
            if value < located:
                raise ValidationError(f"total_users={value} is below the {located} placed users")
        return replace(cfg, **{path: value})
    m = _PATH.match(path)
    if not m:
        raise ValidationError(f"unknown parameter path {path!r}")
    idx_text, attr = m.groups()
    idx = range(cfg.n_groups) if idx_text == "*" else [int(i) for i in idx_text.split(",")]
    groups = list(cfg.groups)
    for i in idx:
        if not 0 <= i < len(groups):
            raise ValidationError(f"group index {i} out of range in {path!r}")
        gr = groups[i]
        if attr == "distance_km":
            groups[i] = gr.with_distance(float(value))
        elif attr == "eta":
            groups[i] = gr.with_eta(float(value))
        elif attr == "omega":
            groups[i] = gr.with_omega(float(value))
        elif attr == "members":
            groups[i] = replace(gr, members=_member_expr(value, cfg.n_users))
        else:
            groups[i] = replace(gr, dummies=_member_expr(value, cfg.n_users))
    total = cfg.total_users
    if total is not None and sum(gr.located for gr in groups) > total:
        raise ValidationError(f"override {path}={value!r} places more users than total_users={total}")
    return replace(cfg, groups=tuple(groups))


# --- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class Series:
    """A named curve: overrides applied to the sweep's base configuration.

    Overrides are applied in order after the axis value, so member
    expressions see the swept ``total_users``.
    """

    name: str
    overrides: tuple[tuple[str, Any], ...] = ()
    base: ProtocolConfig | None = None
    axis: str | None = None  # replaces the sweep axis path for this curve

    @classmethod
    def of(cls, name: str, overrides: Mapping[str, Any] | None = None,
           base: ProtocolConfig | None = None, axis: str | None = None) -> "Series":
        return cls(name, tuple((overrides or {}).items()), base, axis)


@dataclass(frozen=True)
class SweepSpec:
    """One axis swept over ``points`` values in ``[lo, hi]``.

    quantity ``rate``: optimized (or fixed-mu) rate per point;
    ``max_distance``: the largest distance of ``moving_group`` per point.
    """

    base: ProtocolConfig
    axis: str
    lo: float
    hi: float
    points: int
    spacing: str = "linear"
    quantity: str = "rate"
    optimize_mu: bool = True
    mu_max: float = 1e6
    moving_group: tuple[int, ...] = (0,)
    series: tuple[Series, ...] = ()
    plob: bool = False
    plob_group: int = 0
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.values is None:
            if not self.lo < self.hi:
                raise ValidationError(f"sweep range must satisfy lo < hi, got [{self.lo}, {self.hi}]")
            if self.points < 2:
                raise ValidationError(f"sweep needs at least 2 points, got {self.points}")
        elif len(self.values) < 1:
            raise ValidationError("sweep values are empty")
        if self.spacing not in ("linear", "log"):
            raise ValidationError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")
        if self.spacing == "log" and self.lo <= 0:
            raise ValidationError("log spacing needs lo > 0")
        if self.quantity not in ("rate", "max_distance"):
            raise ValidationError(f"quantity must be 'rate' or 'max_distance', got {self.quantity!r}")
        if self.axis not in _TOP and not _PATH.match(self.axis):
            raise ValidationError(f"unknown axis {self.axis!r}")
        if self.axis == "mu" and self.quantity == "rate" and self.optimize_mu:
            object.__setattr__(self, "optimize_mu", False)

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.points)
        return np.linspace(self.lo, self.hi, self.points)

    def all_series(self) -> tuple[Series, ...]:
        return self.series or (Series("default"),)


@dataclass(frozen=True)
class SweepRow:
    series: str
    axis_value: float
    report: RateReport | None
    mu_star: float = math.nan
    max_distance_km: float | None = None
    plob: float | None = None
    status: str = "ok"


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]
    metadata: dict = field(default_factory=dict)

    def series_rows(self, name: str) -> list[SweepRow]:
        return [r for r in self.rows if r.series == name]


def _axis_value(axis: str, v: float):
    return int(round(v)) if axis == "total_users" or axis.endswith((".members", ".dummies")) else float(v)


def _evaluate(task) -> SweepRow:
    spec, series, v = task
    base = series.base or spec.base
    try:
        axis = series.axis or spec.axis
        cfg = apply_override(base, axis, _axis_value(axis, v))
        for path, value in series.overrides:
            cfg = apply_override(cfg, path, value)
        plob = None
        if spec.plob:
            plob = plob_reference(cfg.groups[spec.plob_group].eta) if cfg.groups[spec.plob_group].eta > 0 else 0.0
        if spec.quantity == "max_distance":
            d = max_distance(cfg, list(spec.moving_group), mu_max=spec.mu_max)
            status = "no_positive_rate" if d is None else ("beyond_cap" if math.isinf(d) else "ok")
            return SweepRow(series.name, float(v), None, math.nan, d, plob, status)
        if spec.optimize_mu:
            mu_star, rep = optimize_modulation(cfg, spec.mu_max)
        else:
            rep = secret_key_rate(cfg)
            mu_star = cfg.mu
        return SweepRow(series.name, float(v), rep, mu_star, None, plob, rep.status)
    except (ValidationError, DomainError) as exc:
        return SweepRow(series.name, float(v), None, math.nan, None, None, f"invalid: {exc}")


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        env = os.environ.get("QSSRATE_JOBS")
        if env:
            try:
                jobs = int(env)
            except ValueError:
                raise ValidationError(f"QSSRATE_JOBS must be an integer, got {env!r}") from None
        else:
            jobs = 1
    if jobs < 1:
        raise ValidationError(f"jobs must be >= 1, got {jobs}")
    return jobs


def run_sweep(spec: SweepSpec, jobs: int | None = 1) -> SweepResult:
    """Evaluate every (series, grid point). Rows come back in series then axis order."""
    tasks = [(spec, s, float(v)) for s in spec.all_series() for v in spec.grid()]
    n = resolve_jobs(jobs)
    if n == 1 or len(tasks) < 2:
        rows = [_evaluate(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * n))))
    meta = {"axis": spec.axis, "quantity": spec.quantity, "points": len(spec.grid())}
    return SweepResult(spec, tuple(rows), meta)
