"""Secret-key rates: R = xi I - chi for two groups, worst case over groups
for M > 2, closed-form infinite-modulation limits, and the modulation
optimizer."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from . import gaussian as g
from .errors import DomainError, ValidationError
from .protocol import PHYSICALITY_TOL, ProtocolConfig, bipartite_cm, reduced_cm_multipartite

SYMMETRIC_ETA_TOL = 1e-9
GRID_POINTS = 64
MU_FLOOR = 1.0 + 1e-6
GOLDEN_TOL = 1e-6
DEFAULT_DECODER = 1  # zero-based: the second group decodes


@dataclass(frozen=True)
class RateReport:
    """Rate and its decomposition, all in bits per use.

    In ``asymptotic_fh`` mode ``mu_used`` is ``inf`` and the mutual
    information and Holevo terms are their finite parts after subtracting
    the common ``log2(mu)`` divergence; the rate identity still holds.
    For M > 2, ``nu_plus``/``nu_minus`` are the extreme symplectic
    eigenvalues of the M-mode state and ``nu_cond`` the largest one of the
    worst-case conditional state.
    """

    rate: float
    mutual_information: float
    holevo: float
    nu_plus: float
    nu_minus: float
    nu_cond: float
    mu_used: float
    xi: float = 1.0
    mode: str = "exact"
    status: str = "ok"
    conditioning: int | None = None
    pair: tuple[int, int] | None = None


def _make_report(I: float, chi: float, xi: float, nus: tuple[float, float, float], mu: float,
                 mode: str = "exact", **extra) -> RateReport:
    rate = xi * I - chi
    status = "ok" if rate > 0.0 else "no_positive_rate"
    return RateReport(rate, I, chi, nus[0], nus[1], nus[2], mu, xi, mode, status, **extra)


def _physical_nu(nu: np.ndarray, V: np.ndarray | None = None) -> np.ndarray:
    tol = PHYSICALITY_TOL if V is None else g.nu_tolerance(V, PHYSICALITY_TOL)
    if nu.min() < 1.0 - tol:
        raise DomainError(f"unphysical state: symplectic eigenvalue {nu.min():.12g}")
    return np.maximum(nu, 1.0)


def _entropy(V: np.ndarray) -> tuple[float, np.ndarray]:
    nu = _physical_nu(g.symplectic_eigenvalues(V), V)
    return float(np.sum(g.entropic_h(nu))), nu


def _check_two_mode(V2) -> np.ndarray:
    V2 = g.validate_cm(V2)
    if V2.shape != (4, 4):
        raise ValidationError(f"expected a two-mode CM, got shape {V2.shape}")
    return V2


def holevo_bipartite(V2, decoder: int = DEFAULT_DECODER) -> tuple[float, float, float, float]:
    """``(chi, nu_plus, nu_minus, nu_cond)`` with ``decoder`` (0 or 1) heterodyned."""
    V2 = _check_two_mode(V2)
    if decoder not in (0, 1):
        raise ValidationError(f"decoder must be 0 or 1, got {decoder}")
    s_tot, nu = _entropy(V2)
    vc = g.heterodyne_condition(V2, decoder)
    nu_cond = float(_physical_nu(np.array([math.sqrt(max(np.linalg.det(vc), 0.0))]), V2)[0])
    chi = s_tot - g.entropic_h(nu_cond)
    return float(chi), float(nu[0]), float(nu[1]), nu_cond


def mutual_information_bipartite(V2, decoder: int = DEFAULT_DECODER) -> float:
    """``0.5 log2 [det(Delta + I) / det(V_cond + I)]`` for the non-decoding group."""
    V2 = _check_two_mode(V2)
    if decoder not in (0, 1):
        raise ValidationError(f"decoder must be 0 or 1, got {decoder}")
    other = 1 - decoder
    delta = g.select_modes(V2, [other])
    vc = g.heterodyne_condition(V2, decoder)
    num = 1.0 + np.linalg.det(delta) + np.trace(delta)
    den = 1.0 + np.linalg.det(vc) + np.trace(vc)
    return float(0.5 * math.log2(num / den))


def _bipartite_report(V2: np.ndarray, xi: float, mu: float, decoder: int = DEFAULT_DECODER) -> RateReport:
    chi, nup, num, nuc = holevo_bipartite(V2, decoder)
    I = mutual_information_bipartite(V2, decoder)
    return _make_report(I, chi, xi, (nup, num, nuc), mu)


def secret_key_rate(cfg: ProtocolConfig) -> RateReport:
    """Exact rate at the configured modulation."""
    if cfg.n_groups > 2:
        return multipartite_rate(cfg, cfg.switch)
    return _bipartite_report(bipartite_cm(cfg), cfg.xi, cfg.mu)


def asymptotic_rate_fh(cfg: ProtocolConfig) -> RateReport:
    """Infinite-modulation rate for two full-house groups (detector loss included).

    Per group ``a_j = 1 - tau + tau omega_j (1 - eta_j)`` and
    ``b_j = a_j + tau eta_j``; with
    ``S_ij = N_i a_1 + N_j a_2``, ``R_ij = N_i a_1 + N_j b_2``,
    ``L_ij = N_i b_1 + N_j b_2``:

    ``R = log2[2 tau eta1 eta2 / (e |d_eta|) sqrt(N1 N2/(L12 L21))]
    - h(sqrt(S12 S21/(N1 N2)) / (tau |d_eta|)) + h(sqrt(R12 R21/(N1 N2)) / (tau eta1))``.

    For ``|eta1 - eta2| < 1e-9`` the removable singularity is replaced by its
    limit ``log2[4 tau^2 eta1 eta2 N1 N2 / (e^2 sqrt(L12 L21 S12 S21))] + h(...)``.
    """
    if cfg.n_groups != 2:
        raise ValidationError("asymptotic rate needs exactly two groups")
    if not cfg.full_house:
        raise ValidationError("asymptotic rate exists only without dummy users")
    if cfg.xi != 1.0:
        raise ValidationError("with xi < 1 the rate diverges to -inf as mu grows; optimize mu instead")
    (n1, n2), tau, xi = cfg.members, cfg.tau, cfg.xi
    e1, e2 = (gr.eta for gr in cfg.groups)
    w1, w2 = (gr.omega for gr in cfg.groups)
    inf = math.inf
    if e1 == 0.0 or e2 == 0.0:
        return RateReport(-inf, -inf, 0.0, inf, inf, inf, inf, xi, "asymptotic_fh", "no_positive_rate")

    a1 = 1.0 - tau + tau * w1 * (1.0 - e1)
    a2 = 1.0 - tau + tau * w2 * (1.0 - e2)
    b1, b2 = a1 + tau * e1, a2 + tau * e2
    s12, s21 = n1 * a1 + n2 * a2, n2 * a1 + n1 * a2
    r12, r21 = n1 * a1 + n2 * b2, n2 * a1 + n1 * b2
    l12, l21 = n1 * b1 + n2 * b2, n2 * b1 + n1 * b2
    nn = n1 * n2
    nq, np_ = n2 * e1 + n1 * e2, n1 * e1 + n2 * e2
    nu_ss = max(math.sqrt(r12 * r21 / nn) / (tau * e1), 1.0)
    h_ss = g.entropic_h(nu_ss)
    log2e = math.log2(math.e)
    d_eta = abs(e1 - e2)

    if s12 * s21 == 0.0:
        # lossless, noiseless links: the key grows without bound with mu
        return RateReport(inf, inf, 0.0, inf, 1.0, nu_ss, inf, xi, "asymptotic_fh", "ok")

    if d_eta < SYMMETRIC_ETA_TOL:
        rate = (math.log2(4.0 * tau * tau * e1 * e2 * nn) - 2.0 * log2e
                - 0.5 * math.log2(l12 * l21 * s12 * s21) + h_ss)
        chi = 2.0 * log2e - 2.0 + 0.5 * math.log2(s12 * s21 / (nq * np_)) - math.log2(tau) - h_ss
        nu_minus = inf
    else:
        nu_minus = max(math.sqrt(s12 * s21 / nn) / (tau * d_eta), 1.0)
        h_minus = g.entropic_h(nu_minus)
        rate = (math.log2(2.0 * tau * e1 * e2 / d_eta) - log2e
                + 0.5 * math.log2(nn / (l12 * l21)) - h_minus + h_ss)
        c_plus = d_eta * math.sqrt(nn / (nq * np_))
        chi = log2e - 1.0 + math.log2(c_plus) + h_minus - h_ss
    I = rate + chi
    status = "ok" if rate > 0.0 else "no_positive_rate"
    return RateReport(rate, I, chi, inf, nu_minus, nu_ss, inf, xi, "asymptotic_fh", status)


def holevo_multipartite(VM, condition_on: int) -> float:
    """``S(V_M) - S(V_M conditioned on heterodyning group condition_on)``."""
    VM = g.validate_cm(VM)
    m = g.n_modes(VM)
    if m < 2:
        raise ValidationError("need at least two groups")
    if not 0 <= condition_on < m:
        raise ValidationError(f"conditioning index {condition_on} out of range for {m} groups")
    s_tot, _ = _entropy(VM)
    s_cond, _ = _entropy(g.heterodyne_condition(VM, condition_on))
    return s_tot - s_cond


def _multipartite_report(VM: np.ndarray, xi: float, mu: float) -> RateReport:
    m = g.n_modes(VM)
    s_tot, nu = _entropy(VM)
    best = None
    for c in range(m):
        s_cond, nu_c = _entropy(g.heterodyne_condition(VM, c))
        chi = s_tot - s_cond
        if best is None or chi > best[0]:
            best = (chi, c, float(nu_c.max()))
    chi, c_star, nu_cond = best
    I_min, pair = min(
        (mutual_information_bipartite(g.select_modes(VM, [a, b]), 1), (a, b))
        for a, b in itertools.combinations(range(m), 2)
    )
    return _make_report(I_min, chi, xi, (float(nu.max()), float(nu.min()), nu_cond), mu,
                        conditioning=c_star, pair=pair)


def _switch_report(cfg: ProtocolConfig) -> RateReport:
    worst = None
    for a, b in itertools.combinations(range(cfg.n_groups), 2):
        sub = replace(cfg, groups=(cfg.groups[a], cfg.groups[b]), total_users=None, switch=False)
        V2 = bipartite_cm(sub)
        # worst case over which group of the pair decodes
        reports = [_bipartite_report(V2, cfg.xi, cfg.mu, dec) for dec in (0, 1)]
        rep = min(reports, key=lambda r: r.rate)
        dec = reports.index(rep)
        rep = replace(rep, conditioning=(a, b)[dec], pair=(a, b))
        if worst is None or rep.rate < worst.rate:
            worst = rep
    return worst


def multipartite_rate(cfg: ProtocolConfig, switch: bool = False) -> RateReport:
    """Worst-case rate over groups.

    Without the switch: largest Holevo term over every heterodyne
    conditioning and smallest pairwise mutual information. With the switch
    the relay runs a two-group detection for each pair; the lowest pair
    rate is reported. Two groups reduce to ``secret_key_rate``.
    """
    if cfg.n_groups < 2:
        raise ValidationError("need at least two groups")
    if cfg.n_groups == 2:
        return _bipartite_report(bipartite_cm(cfg), cfg.xi, cfg.mu)
    if switch:
        if not cfg.full_house:
            raise ValidationError("dummy users are only modelled for two groups")
        return _switch_report(cfg)
    return _multipartite_report(reduced_cm_multipartite(cfg), cfg.xi, cfg.mu)


def uses_asymptote(cfg: ProtocolConfig) -> bool:
    """Whether the rate grows monotonically with mu (two groups, full house, xi = 1)."""
    return cfg.n_groups == 2 and cfg.full_house and cfg.xi == 1.0


def optimize_modulation(cfg: ProtocolConfig, mu_max: float = 1e6) -> tuple[float, RateReport]:
    """Best modulation and its report.

    Full-house pairs with perfect reconciliation return the infinite-mu
    limit. Everything else: 64-point log grid on ``[1 + 1e-6, mu_max]``,
    then golden-section refinement inside the bracket around the best point.
    """
    if uses_asymptote(cfg):
        rep = asymptotic_rate_fh(cfg)
        return math.inf, rep
    if not mu_max > MU_FLOOR:
        raise ValidationError(f"mu_max must exceed {MU_FLOOR}, got {mu_max}")

    def rate_at(mu: float) -> float:
        r = secret_key_rate(cfg.with_mu(mu)).rate
        return r if np.isfinite(r) else -math.inf

    grid = np.geomspace(MU_FLOOR, mu_max, GRID_POINTS)
    values = np.array([rate_at(float(m)) for m in grid])
    i = int(np.argmax(values))
    mu_star = float(grid[i])
    if 0 < i < GRID_POINTS - 1:
        try:
            xmin, fmin, _ = optimize.golden(
                lambda m: -rate_at(m), brack=(grid[i - 1], grid[i], grid[i + 1]),
                tol=GOLDEN_TOL, full_output=True,
            )
            if -fmin >= values[i]:
                mu_star = float(xmin)
        except ValueError:
            pass  # flat bracket; keep the grid point
    return mu_star, secret_key_rate(cfg.with_mu(mu_star))
