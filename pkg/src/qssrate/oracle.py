"""Brute-force reference pipeline.

Builds the explicit 2N-mode state and applies every physical step as a
matrix operation (channels, interferometer, lossy detectors with vacuum
ancillas, sequential homodynes, local rotations). No closed forms are used,
so it serves as ground truth for the analytic module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import gaussian as g
from .errors import ConsistencyError, ValidationError
from .protocol import ProtocolConfig, interferometer_matrix, localization_rotation, user_layout

MAX_USERS = 12
RESIDUAL_TOL = 1e-10
RESIDUAL_FAIL = 1e-8


@dataclass
class PipelineTrace:
    stages: list[tuple[str, np.ndarray, list[str]]] = field(default_factory=list)

    def record(self, name: str, V: np.ndarray, labels: Sequence[str]) -> None:
        self.stages.append((name, V.copy(), list(labels)))

    def __getitem__(self, name: str) -> np.ndarray:
        for stage, V, _ in self.stages:
            if stage == name:
                return V
        raise KeyError(name)

    def labels(self, name: str) -> list[str]:
        for stage, _, labels in self.stages:
            if stage == name:
                return labels
        raise KeyError(name)

    def names(self) -> list[str]:
        return [s for s, _, _ in self.stages]

    def dump(self) -> str:
        out = []
        with np.printoptions(precision=6, suppress=True, linewidth=160):
            for name, V, labels in self.stages:
                out.append(f"[{name}] modes: {' '.join(labels)}")
                out.append(str(V))
        return "\n".join(out)


def _lossy_channels(V: np.ndarray, a_modes: list[int], channels) -> np.ndarray:
    # A -> sqrt(eta) A + sqrt(1-eta) E, E thermal with variance omega
    X = np.eye(V.shape[0])
    Y = np.zeros_like(V)
    for m, ch in zip(a_modes, channels):
        for i in (2 * m, 2 * m + 1):
            X[i, i] = np.sqrt(ch.eta)
            Y[i, i] = (1.0 - ch.eta) * ch.omega
    return X @ V @ X.T + Y


def _detector_loss(V: np.ndarray, a_modes: list[int], tau: float) -> np.ndarray:
    # mix each detected mode with a vacuum ancilla on a tau beam splitter, trace the ancilla
    bs = g.beamsplitter(tau)
    for m in a_modes:
        n = g.n_modes(V)
        W = np.eye(2 * n + 2)
        W[: 2 * n, : 2 * n] = V
        W = g.apply_symplectic(W, bs, [m, n])
        V = g.select_modes(W, range(n))
    return V


def oracle_reduced_cm(
    cfg: ProtocolConfig,
    measurement_order: Sequence[int] | None = None,
    completion: str = "householder",
) -> tuple[np.ndarray, PipelineTrace]:
    """Effective M-mode CM and the trace of every intermediate state.

    ``measurement_order`` permutes the q-homodynes on ``A_2..A_N`` (1-based
    output indices 2..N); the p-homodyne on ``A_1`` always comes first.
    """
    lay = user_layout(cfg)
    n = cfg.n_users
    if n > MAX_USERS:
        raise ValidationError(f"oracle is capped at {MAX_USERS} users, got {n}")
    order = list(range(2, n + 1)) if measurement_order is None else list(measurement_order)
    if sorted(order) != list(range(2, n + 1)):
        raise ValidationError(f"measurement order must permute 2..{n}, got {order}")

    trace = PipelineTrace()
    b_labels = [f"B{k}" for k in range(1, n + 1)]
    a_labels = [f"A{k}" for k in range(1, n + 1)]

    V = np.zeros((4 * n, 4 * n))
    for k in range(n):
        block = g.tmsv(lay.mu[k])
        idx = g.mode_indices([n + k, k])  # (A_k, B_k) pair
        V[np.ix_(idx, idx)] = block
    trace.record("input", V, b_labels + [f"Â{k}" for k in range(1, n + 1)])

    a_modes = list(range(n, 2 * n))
    V = _lossy_channels(V, a_modes, lay.channels)
    trace.record("post_channel", V, b_labels + [f"Â{k}" for k in range(1, n + 1)])

    S = np.eye(4 * n)
    S[2 * n:, 2 * n:] = interferometer_matrix(n)
    V = S @ V @ S.T
    trace.record("post_interferometer", V, b_labels + a_labels)

    if cfg.tau < 1.0:
        V = _detector_loss(V, a_modes, cfg.tau)
        trace.record("post_detector_loss", V, b_labels + a_labels)

    labels = b_labels + a_labels
    for k, quad in [(1, "p")] + [(k, "q") for k in order]:
        pos = labels.index(f"A{k}")
        V = g.homodyne_condition(V, pos, quad)
        labels.pop(pos)
    trace.record("post_detection", V, labels)

    # keep cooperating users, grouped; dummies are traced out
    keep = [k for k in range(n) if lay.cooperating[k]]
    V = g.select_modes(V, keep)
    sizes = list(cfg.members)
    R = localization_rotation(sizes, completion)
    V = R.T @ V @ R
    loc_labels = []
    for j, s in enumerate(sizes, start=1):
        loc_labels += [f"G{j}.aux{i}" for i in range(1, s)] + [f"G{j}"]
    trace.record("post_localization", V, loc_labels)

    worst = _aux_residual(V, sizes)
    if worst > RESIDUAL_FAIL * max(1.0, float(np.abs(V).max())):
        raise ConsistencyError(f"localized auxiliary modes still correlated: {worst:.3e}")
    eff = np.cumsum(sizes) - 1
    VM = g.select_modes(V, eff)
    trace.record("effective", VM, [f"G{j}" for j in range(1, len(sizes) + 1)])
    return VM, trace


def _aux_residual(V: np.ndarray, sizes: Sequence[int]) -> float:
    eff = set(int(e) for e in np.cumsum(sizes) - 1)
    worst = 0.0
    for m in range(g.n_modes(V)):
        if m in eff:
            continue
        rows = g.mode_indices([m])
        others = [i for i in range(V.shape[0]) if i not in rows]
        worst = max(worst, float(np.abs(V[np.ix_(rows, others)]).max()))
    return worst


def residual_correlation(trace: PipelineTrace, sizes: Sequence[int]) -> float:
    """Largest correlation between an auxiliary localized mode and any other mode."""
    return _aux_residual(trace["post_localization"], sizes)


def selftest(cases: int = 40, seed: int = 0, tol: float = 1e-8) -> list[tuple[str, float]]:
    """Random small configurations: oracle vs analytic reduced CM.

    Returns ``(description, relative deviation)`` per case; callers compare
    against ``tol``.
    """
    from .protocol import ChannelParams, GroupSpec, reduced_cm_multipartite

    rng = np.random.default_rng(seed)
    out = []
    for _ in range(cases):
        m = int(rng.choice([2, 3]))
        n = int(rng.integers(m, 7))
        cuts = sorted(rng.choice(np.arange(1, n), m - 1, replace=False))
        sizes = np.diff([0, *cuts, n])
        groups = tuple(GroupSpec(int(s), ChannelParams(rng.uniform(0.05, 1.0), rng.uniform(1.0, 1.3)))
                       for s in sizes)
        cfg = ProtocolConfig(groups, mu=float(rng.uniform(1.0, 100.0)), tau=float(rng.choice([1.0, 0.98])))
        VM, _ = oracle_reduced_cm(cfg)
        VA = reduced_cm_multipartite(cfg)
        dev = float(np.abs(VM - VA).max() / max(1.0, np.abs(VA).max()))
        desc = (f"members={list(map(int, sizes))} mu={cfg.mu:.3f} tau={cfg.tau:g} "
                f"eta={[round(gr.eta, 3) for gr in groups]}")
        out.append((desc, dev))
    return out
