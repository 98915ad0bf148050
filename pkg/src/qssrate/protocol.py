"""Protocol configuration and the covariance matrices it produces.

Mode ordering for the global state is ``B_1..B_N, A_1..A_N`` where ``B_k``
stays with user ``k`` and ``A_k`` travels to the relay. Users are laid out
group by group: a group's cooperating members first, then its located
dummies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import gaussian as g
from .errors import ConsistencyError, ValidationError
from .fiber import ALPHA_DB_PER_KM, distance_to_transmissivity

PHYSICALITY_TOL = 1e-6


@dataclass(frozen=True)
class ChannelParams:
    """Thermal-loss link: transmissivity ``eta`` and thermal noise ``omega`` (SNU)."""

    eta: float
    omega: float = 1.0

    def __post_init__(self):
        # eta = 0 is accepted as the full-loss limit (fiber underflow)
        if not 0.0 <= self.eta <= 1.0:
            raise ValidationError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.omega >= 1.0:
            raise ValidationError(f"omega must be >= 1, got {self.omega}")


@dataclass(frozen=True)
class GroupSpec:
    """``members`` cooperating users sharing one link.

    ``dummies`` counts non-cooperating users placed on the same link; they
    only matter to the brute-force pipeline, which needs their channel.
    """

    members: int
    channel: ChannelParams
    distance_km: float | None = None
    dummies: int = 0

    def __post_init__(self):
        if int(self.members) != self.members or self.members < 1:
            raise ValidationError(f"group members must be a positive integer, got {self.members}")
        if int(self.dummies) != self.dummies or self.dummies < 0:
            raise ValidationError(f"group dummies must be a non-negative integer, got {self.dummies}")
        if self.distance_km is not None:
            eta = distance_to_transmissivity(self.distance_km)
            if not math.isclose(eta, self.channel.eta, rel_tol=1e-12, abs_tol=1e-300):
                raise ValidationError(
                    f"distance {self.distance_km} km implies eta={eta}, channel has {self.channel.eta}"
                )

    @classmethod
    def at_distance(cls, members: int, distance_km: float, omega: float = 1.0,
                    dummies: int = 0, alpha_db_per_km: float = ALPHA_DB_PER_KM) -> "GroupSpec":
        eta = distance_to_transmissivity(distance_km, alpha_db_per_km)
        d = distance_km if alpha_db_per_km == ALPHA_DB_PER_KM else None
        return cls(members, ChannelParams(eta, omega), d, dummies)

    @property
    def eta(self) -> float:
        return self.channel.eta

    @property
    def omega(self) -> float:
        return self.channel.omega

    @property
    def located(self) -> int:
        return self.members + self.dummies

    def with_distance(self, distance_km: float) -> "GroupSpec":
        return GroupSpec.at_distance(self.members, distance_km, self.omega, self.dummies)

    def with_eta(self, eta: float) -> "GroupSpec":
        return GroupSpec(self.members, ChannelParams(eta, self.omega), None, self.dummies)

    def with_omega(self, omega: float) -> "GroupSpec":
        return replace(self, channel=ChannelParams(self.eta, omega))


@dataclass(frozen=True)
class ProtocolConfig:
    """Full experiment description.

    ``total_users`` defaults to the number of located users; a larger value
    adds dummies whose position is unspecified (analytic paths only).
    """

    groups: tuple[GroupSpec, ...]
    mu: float = 1e6
    tau: float = 1.0
    xi: float = 1.0
    total_users: int | None = None
    switch: bool = False

    def __post_init__(self):
        groups = tuple(self.groups)
        object.__setattr__(self, "groups", groups)
        if len(groups) < 2:
            raise ValidationError("at least two groups are required")
        if not self.mu >= 1.0:
            raise ValidationError(f"mu must be >= 1, got {self.mu}")
        if not 0.0 < self.tau <= 1.0:
            raise ValidationError(f"tau must lie in (0, 1], got {self.tau}")
        if not 0.0 < self.xi <= 1.0:
            raise ValidationError(f"xi must lie in (0, 1], got {self.xi}")
        located = sum(gr.located for gr in groups)
        n = located if self.total_users is None else self.total_users
        if int(n) != n or n < 2:
            raise ValidationError(f"total_users must be an integer >= 2, got {n}")
        if located > n:
            raise ValidationError(f"groups place {located} users but total_users is {n}")

    @property
    def n_users(self) -> int:
        if self.total_users is None:
            return sum(gr.located for gr in self.groups)
        return int(self.total_users)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    M = n_groups

    @property
    def cooperating(self) -> int:
        return sum(gr.members for gr in self.groups)

    @property
    def full_house(self) -> bool:
        return self.cooperating == self.n_users

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(gr.members for gr in self.groups)

    def with_mu(self, mu: float) -> "ProtocolConfig":
        return replace(self, mu=mu)

    def with_group(self, index: int, group: GroupSpec) -> "ProtocolConfig":
        groups = list(self.groups)
        groups[index] = group
        return replace(self, groups=tuple(groups))


@dataclass(frozen=True)
class XYZParams:
    x: float
    y: float
    z: float


def channel_params(mu: float, ch: ChannelParams) -> XYZParams:
    """Channel-dressed TMSV entries: ``x = eta mu + (1-eta) omega``, ``y = mu``, ``z = sqrt(eta (mu^2-1))``."""
    if not mu >= 1.0:
        raise ValidationError(f"mu must be >= 1, got {mu}")
    x = ch.eta * mu + (1.0 - ch.eta) * ch.omega
    z = math.sqrt(ch.eta * (mu * mu - 1.0))
    return XYZParams(x, mu, z)


def interferometer_rows(n: int) -> np.ndarray:
    """N x N orthogonal mixing matrix: row 1 is the uniform sum, row k the k-th difference."""
    if int(n) != n or n < 2:
        raise ValidationError(f"interferometer needs N >= 2, got {n}")
    R = np.zeros((n, n))
    R[0, :] = 1.0 / math.sqrt(n)
    for k in range(2, n + 1):
        norm = math.sqrt(k * (k - 1))
        R[k - 1, : k - 1] = -1.0 / norm
        R[k - 1, k - 1] = (k - 1) / norm
    return R


def interferometer_matrix(n: int) -> np.ndarray:
    """2N x 2N symplectic orthogonal matrix acting identically on q and p."""
    return np.kron(interferometer_rows(n), g.I2)


class UserLayout(NamedTuple):
    x: np.ndarray
    z: np.ndarray
    mu: np.ndarray
    group: np.ndarray  # group index per user
    cooperating: np.ndarray  # bool per user
    channels: tuple[ChannelParams, ...]


def user_layout(cfg: ProtocolConfig) -> UserLayout:
    """Per-user parameters in interferometer order. Dummies carry vacuum (mu = 1)."""
    located = sum(gr.located for gr in cfg.groups)
    if located != cfg.n_users:
        raise ValidationError(
            f"{cfg.n_users - located} dummy users have no group channel; "
            "place them with GroupSpec.dummies to build the full state"
        )
    xs, zs, mus, grp, coop, chans = [], [], [], [], [], []
    for j, gr in enumerate(cfg.groups):
        for k in range(gr.located):
            is_member = k < gr.members
            m = cfg.mu if is_member else 1.0
            p = channel_params(m, gr.channel)
            xs.append(p.x)
            zs.append(p.z)
            mus.append(m)
            grp.append(j)
            coop.append(is_member)
            chans.append(gr.channel)
    return UserLayout(np.array(xs), np.array(zs), np.array(mus), np.array(grp),
                      np.array(coop, dtype=bool), tuple(chans))


def full_input_cm(cfg: ProtocolConfig) -> np.ndarray:
    """Global 2N-mode CM after the interferometer, built entry by entry.

    Block form ``[[diag(y_k) I, Upsilon], [Upsilon^T, Xi]]``. With prefix sums
    ``P_m = x_1 + ... + x_m``:
    ``<B_i A_1> = z_i/sqrt(N)``; for ``k >= 2``: ``<B_i A_k> = -z_i/sqrt(k(k-1))``
    if ``i < k``, ``sqrt((k-1)/k) z_i`` if ``i = k``, else 0 (all times Z);
    ``<A_1^2> = P_N/N``, ``<A_k^2> = (P_{k-1} + (k-1)^2 x_k)/(k(k-1))``,
    ``<A_1 A_k> = ((k-1) x_k - P_{k-1})/sqrt(N k(k-1))``,
    ``<A_l A_k> = (P_{l-1} - (l-1) x_l)/sqrt(l(l-1) k(k-1))`` for ``2 <= l < k``.
    """
    lay = user_layout(cfg)
    n = cfg.n_users
    x, z = lay.x, lay.z
    P = np.concatenate([[0.0], np.cumsum(x)])  # P[m] = x_1 + ... + x_m

    ups = np.zeros((n, n))
    ups[:, 0] = z / math.sqrt(n)
    for k in range(2, n + 1):
        norm = math.sqrt(k * (k - 1))
        ups[: k - 1, k - 1] = -z[: k - 1] / norm
        ups[k - 1, k - 1] = math.sqrt((k - 1) / k) * z[k - 1]

    xi = np.zeros((n, n))
    xi[0, 0] = P[n] / n
    for k in range(2, n + 1):
        nk = k * (k - 1)
        xi[k - 1, k - 1] = (P[k - 1] + (k - 1) ** 2 * x[k - 1]) / nk
        xi[0, k - 1] = xi[k - 1, 0] = ((k - 1) * x[k - 1] - P[k - 1]) / math.sqrt(n * nk)
        for l in range(2, k):
            v = (P[l - 1] - (l - 1) * x[l - 1]) / math.sqrt(l * (l - 1) * nk)
            xi[l - 1, k - 1] = xi[k - 1, l - 1] = v

    return np.block([
        [np.kron(np.diag(lay.mu), g.I2), np.kron(ups, g.Z2)],
        [np.kron(ups.T, g.Z2), np.kron(xi, g.I2)],
    ])


def _unit_vector(size: int) -> np.ndarray:
    return np.full(size, 1.0 / math.sqrt(size))


def _householder_completion(size: int) -> np.ndarray:
    v = _unit_vector(size)
    if size == 1:
        return np.ones((1, 1))
    u = np.zeros(size)
    u[-1] = 1.0
    u = u - v
    H = np.eye(size) - 2.0 * np.outer(u, u) / (u @ u)
    # H maps e_N to v; flip the first column to make it a rotation
    if np.linalg.det(H) < 0:
        H[:, 0] = -H[:, 0]
    return H


def _gram_schmidt_completion(size: int) -> np.ndarray:
    v = _unit_vector(size)
    cols = []
    for e in np.eye(size):
        w = e - sum((c @ e) * c for c in cols) - (v @ e) * v
        norm = np.linalg.norm(w)
        if norm > 1e-8 and len(cols) < size - 1:
            cols.append(w / norm)
    return np.column_stack(cols + [v])


_COMPLETIONS = {"householder": _householder_completion, "gram-schmidt": _gram_schmidt_completion}


def localization_rotation(group_sizes: Sequence[int], method: str = "householder") -> np.ndarray:
    """Block-diagonal orthogonal matrix (q and p interleaved).

    Each block's last column is the uniform vector of its group, so
    ``R^T V R`` puts the group's collective mode last in the block.
    """
    if method not in _COMPLETIONS:
        raise ValidationError(f"unknown completion {method!r}; use one of {sorted(_COMPLETIONS)}")
    if any(int(s) != s or s < 1 for s in group_sizes):
        raise ValidationError(f"group sizes must be positive integers, got {list(group_sizes)}")
    total = int(sum(group_sizes))
    R = np.zeros((total, total))
    start = 0
    for s in group_sizes:
        R[start:start + s, start:start + s] = _COMPLETIONS[method](int(s))
        start += s
    return np.kron(R, g.I2)


class LossShift(NamedTuple):
    """Effective parameters after folding detector inefficiency into the x's."""

    x: tuple[float, ...]
    lambda_q: float | None
    lambda_p: float | None


def detector_loss_transform(cfg: ProtocolConfig) -> LossShift:
    """Full house: ``x_j -> x_j + (1-tau)/tau``. Bipartite with dummies:
    the two Lambda combinations shift by ``N (1-tau)/tau`` instead."""
    shift = (1.0 - cfg.tau) / cfg.tau
    xs = [channel_params(cfg.mu, gr.channel).x for gr in cfg.groups]
    if cfg.full_house:
        return LossShift(tuple(x + shift for x in xs), None, None)
    if cfg.n_groups != 2:
        raise ValidationError("dummy users are only modelled for two groups")
    n = cfg.n_users
    n1, n2 = cfg.members
    lam_q = (n - n1) * xs[0] + (n - n2) * xs[1] + n * shift
    lam_p = (n - n2) * xs[0] + (n - n1) * xs[1] + n * shift
    return LossShift(tuple(xs), lam_q, lam_p)


def _check_physical(V: np.ndarray, what: str) -> np.ndarray:
    nu = g.symplectic_eigenvalues(V)
    if nu.min() < 1.0 - g.nu_tolerance(V, PHYSICALITY_TOL):
        raise ConsistencyError(f"{what} is unphysical (min symplectic eigenvalue {nu.min():.12g})")
    return V


def _conditional_gap(mu: float, ch: ChannelParams, shift: float) -> float:
    """``y x' - z^2`` with ``x' = x + shift``, free of the ``mu^2`` cancellation."""
    return mu * (1.0 - ch.eta) * ch.omega + ch.eta + mu * shift


def bipartite_cm(cfg: ProtocolConfig) -> np.ndarray:
    """Two-mode effective CM for two groups, with or without dummy users.

    With ``Lq = (N-N1) x1 + (N-N2) x2`` and ``Lp = (N-N2) x1 + (N-N1) x2``
    (both shifted for detector loss):
    ``Delta_l = diag(y - (N-N_l) z_l^2/Lq, y - N_l z_l^2/Lp)`` and
    ``Gamma' = z1 z2 sqrt(N1 N2) diag(1/Lq, -1/Lp)``.
    """
    if cfg.n_groups != 2:
        raise ValidationError(f"bipartite CM needs exactly 2 groups, got {cfg.n_groups}")
    n = cfg.n_users
    n1, n2 = cfg.members
    y = cfg.mu
    z1, z2 = (channel_params(cfg.mu, gr.channel).z for gr in cfg.groups)
    shift = detector_loss_transform(cfg)
    if cfg.full_house:
        xs1, xs2 = shift.x
        lam_q = n2 * xs1 + n1 * xs2
        lam_p = n1 * xs1 + n2 * xs2
    else:
        lam_q, lam_p = shift.lambda_q, shift.lambda_p
    # y*L - w*z^2 regrouped as non-negative terms using gap_j = y x_j - z_j^2
    ch1, ch2 = (gr.channel for gr in cfg.groups)
    x1, x2 = (channel_params(cfg.mu, ch).x for ch in (ch1, ch2))
    gap1, gap2 = _conditional_gap(y, ch1, 0.0), _conditional_gap(y, ch2, 0.0)
    extra = y * n * (1.0 - cfg.tau) / cfg.tau
    dum = n - n1 - n2
    d1 = np.diag([((n - n1) * gap1 + (n - n2) * y * x2 + extra) / lam_q,
                  (n1 * gap1 + dum * y * x1 + (n - n1) * y * x2 + extra) / lam_p])
    d2 = np.diag([((n - n2) * gap2 + (n - n1) * y * x1 + extra) / lam_q,
                  (n2 * gap2 + dum * y * x2 + (n - n2) * y * x1 + extra) / lam_p])
    c = z1 * z2 * math.sqrt(n1 * n2)
    gam = np.diag([c / lam_q, -c / lam_p])
    V = np.block([[d1, gam], [gam.T, d2]])
    return _check_physical(V, "bipartite CM")


def _full_house_cm(members: Sequence[int], xs: Sequence[float], zs: Sequence[float], y: float,
                   gaps: Sequence[float]) -> np.ndarray:
    """M-mode effective CM for the full-house case.

    q block: ``y delta_ij - z_i z_j [delta_ij/x_i - sqrt(N_i N_j)/(x_i x_j s)]``
    with ``s = sum_k N_k/x_k``; p block: ``y delta_ij - z_i z_j sqrt(N_i N_j)/T``
    with ``T = sum_k N_k x_k``. This is the product-of-x form divided through
    by ``prod_k x_k``, which keeps large M free of overflow. The q diagonal
    uses ``y - z_i^2/x_i = gap_i/x_i`` to avoid cancellation at large mu.
    """
    N = np.asarray(members, dtype=float)
    x = np.asarray(xs, dtype=float)
    z = np.asarray(zs, dtype=float)
    s = np.sum(N / x)
    T = np.sum(N * x)
    w = z * np.sqrt(N)
    vq = np.diag(np.asarray(gaps) / x) + np.outer(w / x, w / x) / s
    vp = y * np.eye(len(N)) - np.outer(w, w) / T
    m = len(N)
    V = np.zeros((2 * m, 2 * m))
    V[0::2, 0::2] = vq
    V[1::2, 1::2] = vp
    return V


def reduced_cm_multipartite(cfg: ProtocolConfig) -> np.ndarray:
    """Effective M-mode CM shared by the group representatives after detection."""
    if not cfg.full_house:
        if cfg.n_groups == 2:
            return bipartite_cm(cfg)
        raise ValidationError("dummy users are only modelled for two groups")
    xs = detector_loss_transform(cfg).x
    zs = [channel_params(cfg.mu, gr.channel).z for gr in cfg.groups]
    shift = (1.0 - cfg.tau) / cfg.tau
    gaps = [_conditional_gap(cfg.mu, gr.channel, shift) for gr in cfg.groups]
    V = _full_house_cm(cfg.members, xs, zs, cfg.mu, gaps)
    return _check_physical(V, "reduced CM")
