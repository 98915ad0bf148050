"""Built-in sweep definitions that regenerate the standard result figures."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .schemes import Series, SweepSpec, build_scheme


@dataclass(frozen=True)
class Panel:
    name: str
    spec: SweepSpec
    xlabel: str
    ylabel: str = "secret-key rate [bit/use]"
    log_x: bool = False
    log_y: bool = True
    asymptote: bool = False
    styles: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FigureSpec:
    fig_id: str
    title: str
    panels: tuple[Panel, ...]


def _s(name, overrides=None, base=None, axis=None):
    return Series.of(name, overrides, base, axis)


def _fig3() -> FigureSpec:
    base = build_scheme("bipartite", N=12, distances=(0.0, 0.0), splitting="50/50")
    curves = [
        ("black", 1.0, 1.0, 1.0, "-"), ("green", 1.0, 1.1, 1.0, "--"),
        ("red", 1.0, 1.0, 0.98, "-"), ("purple", 1.0, 1.1, 0.98, "--"),
        ("orange", 1.1, 1.0, 1.0, "-"), ("blue", 1.1, 1.1, 1.0, "--"),
        ("gold", 1.1, 1.0, 0.98, "-"), ("gray", 1.1, 1.1, 0.98, "--"),
    ]
    series = tuple(
        _s(f"w1={w1:g},w2={w2:g},tau={t:g}", {"group[0].omega": w1, "group[1].omega": w2, "tau": t})
        for _, w1, w2, t, _ in curves
    )
    styles = {s.name: (c[0], c[4]) for s, c in zip(series, curves)}
    spec = SweepSpec(base, "group[0].distance_km", 0.0, 200.0, 201, series=series)
    return FigureSpec("fig3", "Two groups, d2 = 0 km", (Panel("main", spec, "d1 [km]", styles=styles),))


def _fig4() -> FigureSpec:
    n = 100
    curves = [
        ("red", (50, 50), 1.0, 1.0), ("black", (50, 50), 1.0, 1.1),
        ("purple", (50, 50), 1.1, 1.0), ("green", (50, 50), 1.1, 1.1),
        ("blue", (5, 95), 1.0, 1.0), ("gray", (1, 99), 1.0, 1.0),
    ]
    panels = []
    for pname, moving, fixed in (("a", 0, 1), ("b", 1, 0)):
        dist = [0.0, 0.0]
        dist[fixed] = 0.1
        series, styles = [], {}
        for color, members, w1, w2 in curves:
            base = build_scheme("bipartite", N=n, distances=dist, members=members, noises=(w1, w2))
            name = f"{members[0]}/{members[1]},w1={w1:g},w2={w2:g}"
            series.append(_s(name, base=base))
            styles[name] = (color, "-")
        spec = SweepSpec(series[0].base, f"group[{moving}].distance_km", 0.0, 80.0, 161, series=tuple(series))
        panels.append(Panel(pname, spec, f"d{moving + 1} [km] (d{fixed + 1} = 0.1 km)", styles=styles))
    return FigureSpec("fig4", "Splitting ratios and noise, N = 100", tuple(panels))


def _fig5() -> FigureSpec:
    base = build_scheme("bipartite", N=12, distances=(0.0, 0.1), splitting="50/50")
    series = tuple(_s(f"xi={xi:g}", {"xi": xi}) for xi in (1.0, 0.985, 0.98, 0.95, 0.90))
    spec = SweepSpec(base, "group[0].distance_km", 0.0, 80.0, 81, series=series)
    return FigureSpec("fig5", "Reconciliation efficiency, d2 = 0.1 km",
                      (Panel("main", spec, "d1 [km]"),))


_FAMILIES = (
    ("FH", ("N/2", "N/2"), "orange"),
    ("N1=N/2-1", ("N/2-1", "N/2"), "purple"),
    ("N2=N/2-1", ("N/2", "N/2-1"), "blue"),
    ("N1=N2=N/2-1", ("N/2-1", "N/2-1"), "red"),
    ("N1=N/2-2", ("N/2-2", "N/2"), "brown"),
    ("N2=N/2-2", ("N/2", "N/2-2"), "pink"),
)
FIG6_USERS = (4, 8, 12, 16, 20, 30, 40, 50, 60, 80, 100, 150, 200)


def _family(name, members, overrides=None):
    ov = {"group[0].members": members[0], "group[1].members": members[1]}
    ov.update(overrides or {})
    return _s(name, ov)


def _fig6a() -> FigureSpec:
    base = build_scheme("bipartite", N=4, distances=(0.0, 0.1), members=(1, 1), noises=(1.1, 1.1))
    series = [_family(f"{n},w=1.1", m) for n, m, _ in _FAMILIES]
    series.append(_family("FH,w=1", ("N/2", "N/2"), {"group[*].omega": 1.0}))
    styles = {s.name: (c, "-") for s, (_, _, c) in zip(series, _FAMILIES)}
    styles["FH,w=1"] = ("gray", "-")
    spec = SweepSpec(base, "total_users", 0, 1, 2, quantity="max_distance", moving_group=(0,),
                     series=tuple(series), values=FIG6_USERS)
    return FigureSpec("fig6a", "Maximum distance of group 1 (d2 = 0.1 km)",
                      (Panel("main", spec, "N", "max distance d1 [km]", log_y=False, styles=styles),))


def _fig6b() -> FigureSpec:
    base = build_scheme("bipartite", N=4, distances=(0.0, 0.1), members=(1, 1))
    series = (
        _family("FH,xi=0.985", ("N/2", "N/2"), {"xi": 0.985}),
        _family("N1=N/2-1,xi=0.985", ("N/2-1", "N/2"), {"xi": 0.985}),
        _family("N1=N2=N/2-1,xi=0.985", ("N/2-1", "N/2-1"), {"xi": 0.985}),
        _family("N1=N/2-1,xi=1", ("N/2-1", "N/2")),
    )
    styles = {series[0].name: ("orange", "-"), series[1].name: ("purple", "-"),
              series[2].name: ("red", "-"), series[3].name: ("gray", "-")}
    spec = SweepSpec(base, "total_users", 0, 1, 2, quantity="max_distance", moving_group=(0,),
                     series=series, values=FIG6_USERS)
    return FigureSpec("fig6b", "Maximum distance with reconciliation efficiency",
                      (Panel("main", spec, "N", "max distance d1 [km]", log_y=False, styles=styles),))


def _fig8(noisy: bool) -> FigureSpec:
    colors = {0.1: "red", 0.05: "blue", 0.01: "black"}
    if noisy:
        ideal = build_scheme("Y", 3, 12, (0.0, 0.1))
        series = (
            _s("Y,tau=0.98", {"tau": 0.98}, base=ideal),
            _s("switch,tau=0.98", {"tau": 0.98}, base=build_scheme("switch", 3, 12, (0.0, 0.1))),
            _s("Y,ideal", base=ideal),
        )
        styles = {series[0].name: ("red", "-"), series[1].name: ("blue", "-"), series[2].name: ("gray", "-")}
        spec = SweepSpec(ideal, "group[0,1].distance_km", 0.0, 4.5, 91, series=series)
        return FigureSpec("fig8-noisy", "Y-scheme with lossy detectors (d3 = 0.1 km)",
                          (Panel("main", spec, "d1/2 [km]", styles=styles),))
    series, styles = [], {}
    for kind in ("Y", "switch"):
        for d3 in (0.1, 0.05, 0.01):
            name = f"{kind},d3={d3:g}"
            series.append(_s(name, base=build_scheme(kind, 3, 12, (0.0, d3))))
            styles[name] = (colors[d3], "-" if kind == "Y" else "--")
    main = SweepSpec(series[0].base, "group[0,1].distance_km", 0.0, 4.5, 91, series=tuple(series))
    inset = (
        _s("Y,d3=0.1", base=build_scheme("Y", 3, 12, (0.0, 0.1)), axis="group[0,1].distance_km"),
        _s("M=2,N/2", base=build_scheme("bipartite", N=12, distances=(0.0, 0.1), members=(6, 6))),
        _s("M=2,2N/3", base=build_scheme("bipartite", N=12, distances=(0.0, 0.1), members=(8, 4))),
    )
    inset_styles = {inset[0].name: ("red", "-"), inset[1].name: ("green", "-"), inset[2].name: ("black", "-")}
    inset_spec = SweepSpec(inset[1].base, "group[0].distance_km", 0.0, 70.0, 141, series=inset)
    return FigureSpec("fig8", "Y-scheme, M = 3 (switch dashed)", (
        Panel("main", main, "d1/2 [km]", styles=styles),
        Panel("inset", inset_spec, "d1 (or d1/2) [km]", styles=inset_styles),
    ))


def _fig10() -> FigureSpec:
    series, styles = [], {}
    colors = {0.1: "red", 0.05: "blue", 0.01: "black"}
    for d in (0.1, 0.05, 0.01):
        name = f"Y,d_deep={d:g}"
        series.append(_s(name, base=build_scheme("Y", 4, 12, (0.0, d)), axis="group[0,1,2].distance_km"))
        styles[name] = (colors[d], "-")
    for d in (0.1, 0.05, 0.01):
        name = f"X,d_deep={d:g}"
        series.append(_s(name, base=build_scheme("X", 4, 12, (0.0, d))))
        styles[name] = ("green", "-" if d == 0.1 else ":")
    spec = SweepSpec(series[3].base, "group[0,1].distance_km", 0.0, 1.0, 101, series=tuple(series))
    return FigureSpec("fig10", "Y-scheme vs X-scheme, M = 4",
                      (Panel("main", spec, "distance of the shallow groups [km]", styles=styles),))


def _fig12() -> FigureSpec:
    series = tuple(
        _s(f"{a}/{b}", base=build_scheme("bipartite", N=100, distances=(1.0, 0.1), members=(a, b)))
        for a, b in ((50, 50), (5, 95), (95, 5), (1, 99), (99, 1))
    )
    spec = SweepSpec(series[0].base, "mu", 1.001, 1e6, 121, spacing="log", series=series)
    return FigureSpec("fig12", "Rate vs modulation, full house (d1 = 1 km, d2 = 0.1 km)",
                      (Panel("main", spec, "mu [SNU]", log_x=True, log_y=False, asymptote=True),))


def _fig13() -> FigureSpec:
    base = build_scheme("bipartite", N=100, distances=(1.0, 0.01), members=(50, 50))
    series = tuple(
        _s(f"N1={a},N2={b}", {"group[0].members": a, "group[1].members": b})
        for a, b in ((50, 50), (49, 50), (50, 49), (49, 49), (48, 50), (50, 48))
    )
    spec = SweepSpec(base, "mu", 1.001, 1e4, 121, spacing="log", series=series)
    return FigureSpec("fig13", "Rate vs modulation with dummy users, N = 100",
                      (Panel("main", spec, "mu [SNU]", log_x=True, log_y=False),))


FIGURES = {
    "fig3": _fig3, "fig4": _fig4, "fig5": _fig5, "fig6a": _fig6a, "fig6b": _fig6b,
    "fig8": lambda: _fig8(False), "fig8-noisy": lambda: _fig8(True),
    "fig10": _fig10, "fig12": _fig12, "fig13": _fig13,
}


def figure_spec(fig_id: str) -> FigureSpec:
    if fig_id not in FIGURES:
        raise ValidationError(f"unknown figure {fig_id!r}; valid ids: {', '.join(FIGURES)}")
    return FIGURES[fig_id]()
