"""Run-configuration files (TOML) with strict schema checking.

Layout::

    [scheme]                      # or one [[groups]] table per group
    kind = "bipartite"            # bipartite | Y | X | switch
    users = 12
    splitting = "50/50"           # bipartite only; or members = [6, 6]
    distances_km = [170.0, 0.0]   # (d1, d2) | (d_shallow, d_deep) | (d_12, d_34)
    omegas = 1.0                  # scalar or one per group
    dummies = [0, 0]              # users placed on a group link but not cooperating

    [protocol]
    mu = "optimize"               # or a fixed modulation >= 1 (SNU)
    mu_max = 1e6
    tau = 1.0
    xi = 1.0
    total_users = 12              # only with [[groups]]

    [sweep]
    axis = "group[0].distance_km"
    range = [0.0, 200.0]          # or values = [...]
    points = 200
    spacing = "linear"            # or "log"
    quantity = "rate"             # or "max_distance"
    moving_group = 0

    [[sweep.series]]
    name = "noisy"
    overrides = { "group[*].omega" = 1.1 }

    [output]
    csv = "out.csv"
    svg = "out.svg"
    plob = false
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .errors import ValidationError
from .protocol import ChannelParams, GroupSpec, ProtocolConfig
from .schemes import SCHEMES, Series, SweepSpec, apply_override, build_scheme

_ALLOWED = {
    "": {"scheme", "groups", "protocol", "sweep", "output"},
    "scheme": {"kind", "users", "splitting", "members", "distances_km", "omegas", "dummies", "M"},
    "groups[]": {"members", "distance_km", "eta", "omega", "dummies"},
    "protocol": {"mu", "mu_max", "tau", "xi", "total_users"},
    "sweep": {"axis", "range", "values", "points", "spacing", "quantity", "moving_group", "series"},
    "sweep.series[]": {"name", "overrides", "axis"},
    "output": {"csv", "svg", "plob"},
}


@dataclass(frozen=True)
class RunConfig:
    protocol: ProtocolConfig
    optimize_mu: bool = True
    mu_max: float = 1e6
    sweep: SweepSpec | None = None
    csv_path: str | None = None
    svg_path: str | None = None
    plob: bool = False
    echo: dict = field(default_factory=dict)


def _check_keys(table: dict, where: str, schema_key: str) -> None:
    if not isinstance(table, dict):
        raise ValidationError(f"{where or 'top level'}: expected a table")
    unknown = sorted(set(table) - _ALLOWED[schema_key])
    if unknown:
        allowed = ", ".join(sorted(_ALLOWED[schema_key]))
        raise ValidationError(f"{where or 'top level'}: unknown key(s) {', '.join(unknown)} (allowed: {allowed})")


def _num(table: dict, key: str, where: str, default: Any = None, required: bool = False) -> float:
    if key not in table:
        if required:
            raise ValidationError(f"{where}.{key}: required")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(f"{where}.{key}: expected a finite number, got {v!r}")
    return float(v)


def _int(table: dict, key: str, where: str, default: Any = None, required: bool = False) -> int:
    if key not in table:
        if required:
            raise ValidationError(f"{where}.{key}: required")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def _str(table: dict, key: str, where: str, default: Any = None, required: bool = False) -> str:
    if key not in table:
        if required:
            raise ValidationError(f"{where}.{key}: required")
        return default
    v = table[key]
    if not isinstance(v, str):
        raise ValidationError(f"{where}.{key}: expected a string, got {v!r}")
    return v


def _list(table: dict, key: str, where: str, kind: type, default: Any = None) -> list | None:
    if key not in table:
        return default
    v = table[key]
    if not isinstance(v, list):
        raise ValidationError(f"{where}.{key}: expected a list, got {v!r}")
    for item in v:
        ok = isinstance(item, (int, float)) if kind is float else isinstance(item, kind)
        if isinstance(item, bool) or not ok:
            raise ValidationError(f"{where}.{key}: bad entry {item!r}")
    return [kind(x) for x in v]


def _wrap(where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _protocol_from_scheme(sch: dict, prot: dict) -> tuple[ProtocolConfig, dict]:
    _check_keys(sch, "scheme", "scheme")
    kind = _str(sch, "kind", "scheme", required=True)
    if kind not in SCHEMES:
        raise ValidationError(f"scheme.kind: must be one of {', '.join(SCHEMES)}, got {kind!r}")
    if "total_users" in prot:
        raise ValidationError("protocol.total_users: use scheme.users with a [scheme] table")
    users = _int(sch, "users", "scheme", 12)
    M = _int(sch, "M", "scheme", None)
    dist = _list(sch, "distances_km", "scheme", float)
    if dist is None:
        raise ValidationError("scheme.distances_km: required")
    omegas = sch.get("omegas", 1.0)
    if isinstance(omegas, list):
        omegas = _list(sch, "omegas", "scheme", float)
    else:
        omegas = _num(sch, "omegas", "scheme", 1.0)
    members = _list(sch, "members", "scheme", int)
    dummies = _list(sch, "dummies", "scheme", int)
    splitting = _str(sch, "splitting", "scheme", None)
    cfg = _wrap("scheme", build_scheme, kind, M, users, dist, omegas, splitting=splitting,
                members=members, dummies=dummies, mu=1e6)
    echo = {"scheme.kind": kind, "scheme.users": users, "scheme.distances_km": dist,
            "scheme.omegas": omegas}
    for k, v in (("scheme.M", M), ("scheme.members", members), ("scheme.dummies", dummies),
                 ("scheme.splitting", splitting)):
        if v is not None:
            echo[k] = v
    return cfg, echo


def _protocol_from_groups(groups: list, prot: dict) -> tuple[ProtocolConfig, dict]:
    if not isinstance(groups, list) or len(groups) < 2:
        raise ValidationError("groups: need at least two [[groups]] tables")
    built, echo = [], {}
    for i, gt in enumerate(groups):
        where = f"groups[{i}]"
        _check_keys(gt, where, "groups[]")
        members = _int(gt, "members", where, required=True)
        omega = _num(gt, "omega", where, 1.0)
        dummies = _int(gt, "dummies", where, 0)
        if ("distance_km" in gt) == ("eta" in gt):
            raise ValidationError(f"{where}: give exactly one of distance_km or eta")
        if "distance_km" in gt:
            d = _num(gt, "distance_km", where)
            grp = _wrap(where, GroupSpec.at_distance, members, d, omega, dummies)
            echo[f"{where}.distance_km"] = d
        else:
            eta = _num(gt, "eta", where)
            grp = _wrap(where, lambda: GroupSpec(members, ChannelParams(eta, omega), None, dummies))
            echo[f"{where}.eta"] = eta
        echo[f"{where}.members"] = members
        echo[f"{where}.omega"] = omega
        echo[f"{where}.dummies"] = dummies
        built.append(grp)
    total = _int(prot, "total_users", "protocol", None)
    if total is not None:
        echo["protocol.total_users"] = total
    cfg = _wrap("protocol", ProtocolConfig, tuple(built), total_users=total)
    return cfg, echo


def _sweep(sw: dict, base: ProtocolConfig, mu_max: float, plob: bool, fixed_mu: bool) -> tuple[SweepSpec, dict]:
    _check_keys(sw, "sweep", "sweep")
    axis = _str(sw, "axis", "sweep", required=True)
    values = _list(sw, "values", "sweep", float)
    rng = _list(sw, "range", "sweep", float)
    echo = {"sweep.axis": axis}
    if values is None:
        if rng is None or len(rng) != 2:
            raise ValidationError("sweep.range: required as [lo, hi] (or give sweep.values)")
        lo, hi = rng
        echo["sweep.range"] = rng
        points = _int(sw, "points", "sweep", required=True)
        echo["sweep.points"] = points
    else:
        if rng is not None:
            raise ValidationError("sweep: give either range or values, not both")
        if not values:
            raise ValidationError("sweep.values: empty")
        lo, hi, points = min(values), max(values), len(values)
        echo["sweep.values"] = values
    spacing = _str(sw, "spacing", "sweep", "linear")
    quantity = _str(sw, "quantity", "sweep", "rate")
    mg = sw.get("moving_group", 0)
    if isinstance(mg, bool) or not isinstance(mg, (int, list)):
        raise ValidationError(f"sweep.moving_group: expected an integer or list, got {mg!r}")
    moving = (mg,) if isinstance(mg, int) else tuple(_list(sw, "moving_group", "sweep", int))
    echo.update({"sweep.spacing": spacing, "sweep.quantity": quantity, "sweep.moving_group": list(moving)})
    series = []
    raw_series = sw.get("series", [])
    if not isinstance(raw_series, list):
        raise ValidationError("sweep.series: expected an array of tables")
    for i, st in enumerate(raw_series):
        where = f"sweep.series[{i}]"
        _check_keys(st, where, "sweep.series[]")
        name = _str(st, "name", where, required=True)
        ov = st.get("overrides", {})
        if not isinstance(ov, dict):
            raise ValidationError(f"{where}.overrides: expected a table")
        s_axis = _str(st, "axis", where, None)
        for path, value in ov.items():
            if isinstance(value, bool) or not isinstance(value, (int, float, str)):
                raise ValidationError(f"{where}.overrides.{path}: expected a number or expression")
        series.append(Series.of(name, ov, None, s_axis))
        echo[f"{where}.name"] = name
        for path, value in ov.items():
            echo[f"{where}.overrides.{path}"] = value
        if s_axis is not None:
            echo[f"{where}.axis"] = s_axis
    names = [s.name for s in series]
    if len(set(names)) != len(names):
        raise ValidationError("sweep.series: names must be unique")
    spec = _wrap("sweep", SweepSpec, base, axis, lo, hi, points, spacing, quantity,
                 optimize_mu=not fixed_mu, mu_max=mu_max, moving_group=moving,
                 series=tuple(series), plob=plob, values=tuple(values) if values is not None else None)
    # surface bad paths or override values before any computation starts
    for s in spec.all_series():
        cfg = _wrap(f"sweep.series[{s.name}]", apply_override, base, s.axis or axis,
                    int(lo) if (s.axis or axis) == "total_users" else lo)
        for path, value in s.overrides:
            cfg = _wrap(f"sweep.series[{s.name}].overrides", apply_override, cfg, path, value)
    return spec, echo


def parse_config(data: dict, source: str = "<config>") -> RunConfig:
    """Validate a decoded TOML document and build the run description."""
    _check_keys(data, "", "")
    prot = data.get("protocol", {})
    _check_keys(prot, "protocol", "protocol")
    if ("scheme" in data) == ("groups" in data):
        raise ValidationError("give exactly one of [scheme] or [[groups]]")
    if "scheme" in data:
        cfg, echo = _protocol_from_scheme(data["scheme"], prot)
    else:
        cfg, echo = _protocol_from_groups(data["groups"], prot)

    mu = prot.get("mu", "optimize")
    if isinstance(mu, str):
        if mu != "optimize":
            raise ValidationError(f"protocol.mu: expected a number or \"optimize\", got {mu!r}")
        optimize_mu, mu_val = True, 1e6
    else:
        optimize_mu, mu_val = False, _num(prot, "mu", "protocol")
    mu_max = _num(prot, "mu_max", "protocol", 1e6)
    tau = _num(prot, "tau", "protocol", 1.0)
    xi = _num(prot, "xi", "protocol", 1.0)
    from dataclasses import replace
    cfg = _wrap("protocol", replace, cfg, mu=mu_val, tau=tau, xi=xi)
    echo.update({"protocol.mu": "optimize" if optimize_mu else mu_val, "protocol.mu_max": mu_max,
                 "protocol.tau": tau, "protocol.xi": xi})

    out = data.get("output", {})
    _check_keys(out, "output", "output")
    csv_path = _str(out, "csv", "output", None)
    svg_path = _str(out, "svg", "output", None)
    plob = out.get("plob", False)
    if not isinstance(plob, bool):
        raise ValidationError(f"output.plob: expected true or false, got {plob!r}")
    echo["output.plob"] = plob

    sweep = None
    if "sweep" in data:
        sweep, sweep_echo = _sweep(data["sweep"], cfg, mu_max, plob, not optimize_mu)
        echo.update(sweep_echo)
    return RunConfig(cfg, optimize_mu, mu_max, sweep, csv_path, svg_path, plob, echo)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a TOML run configuration. Syntax errors carry line/column."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")  # OSError propagates to the caller
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    try:
        return parse_config(data, str(path))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def echo_lines(echo: dict) -> list[str]:
    """Canonical ``key = json`` lines, sorted by key."""
    return [f"{k} = {json.dumps(echo[k], sort_keys=True)}" for k in sorted(echo)]


def parse_echo_lines(lines: list[str]) -> dict:
    out = {}
    for line in lines:
        key, _, value = line.partition(" = ")
        out[key] = json.loads(value)
    return out
