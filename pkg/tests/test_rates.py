import math

import numpy as np
import pytest
from conftest import two_groups
from hypothesis import given, settings
from hypothesis import strategies as st

from qssrate import gaussian as g
from qssrate.errors import DomainError, ValidationError
from qssrate.fiber import distance_to_transmissivity as eta_of
from qssrate.protocol import ChannelParams, GroupSpec, ProtocolConfig, bipartite_cm, reduced_cm_multipartite
from qssrate.rates import (
    asymptotic_rate_fh,
    holevo_bipartite,
    holevo_multipartite,
    multipartite_rate,
    mutual_information_bipartite,
    optimize_modulation,
    secret_key_rate,
)
from qssrate.schemes import build_scheme


def sigma_n(V2):
    vc = g.heterodyne_condition(V2, 1)
    return 1.0 + np.linalg.det(vc) + np.trace(vc)


def reference_asymptote(n1, n2, e1, e2, w1, w2):
    """Infinite-modulation rate for ideal detectors written with lambda and script-N sums."""
    lam = n1 * w2 * (1 - e2) + n2 * w1 * (1 - e1)
    lam_t = n1 * w1 * (1 - e1) + n2 * w2 * (1 - e2)
    cn = n1 * e2 + n2 * e1
    cn_t = n1 * e1 + n2 * e2
    d = abs(e1 - e2)
    nn = n1 * n2
    first = math.log2(2 * e1 * e2 / (math.e * d) * math.sqrt(nn / ((lam + cn) * (lam_t + cn_t))))
    return (first - g.entropic_h(math.sqrt(lam * lam_t / nn) / d)
            + g.entropic_h(math.sqrt((lam + n1 * e2) * (lam_t + n2 * e2) / nn) / e1))


class TestHolevo:
    def test_uncorrelated(self):
        chi, *_ = holevo_bipartite(bipartite_cm(two_groups(2, 2, eta=(0.5, 0.8), mu=1.0)))
        assert chi == pytest.approx(0.0, abs=1e-12)

    def test_symmetric_large_mu_eigenvalues(self):
        eta, w, mu = 0.6, 1.1, 1e6
        _, nup, num, _ = holevo_bipartite(bipartite_cm(two_groups(3, 3, eta=(eta, eta), omega=(w, w), mu=mu)))
        ref = math.sqrt(((1 - eta) * mu * w + eta) * mu / ((1 - eta) * w + eta * mu))
        assert nup == pytest.approx(ref, rel=1e-3)
        assert num == pytest.approx(ref, rel=1e-3)

    def test_lossless_decoder_gives_pure_minus_mode(self):
        _, _, num, _ = holevo_bipartite(bipartite_cm(two_groups(4, 4, eta=(0.5, 1.0), mu=1e6)))
        assert num == pytest.approx(1.0, abs=1e-4)
        assert g.entropic_h(num) < 1e-3

    def test_conditional_eigenvalue_is_sqrt_det(self):
        V = bipartite_cm(two_groups(6, 6, eta=(eta_of(20), 1.0), mu=300.0))
        _, _, _, nuc = holevo_bipartite(V)
        assert nuc ** 2 == pytest.approx(np.linalg.det(g.heterodyne_condition(V, 1)), rel=1e-10)

    def test_asymmetric_asymptotic_eigenvalues(self):
        n1, n2, e1, e2, w1, w2, mu = 3, 5, 0.4, 0.9, 1.1, 1.05, 1e7
        V = bipartite_cm(two_groups(n1, n2, eta=(e1, e2), omega=(w1, w2), mu=mu))
        _, nup, num, nuc = holevo_bipartite(V)
        lam = n1 * w2 * (1 - e2) + n2 * w1 * (1 - e1)
        lam_t = n1 * w1 * (1 - e1) + n2 * w2 * (1 - e2)
        cn, cn_t = n1 * e2 + n2 * e1, n1 * e1 + n2 * e2
        assert nup == pytest.approx(abs(e1 - e2) * math.sqrt(n1 * n2 / (cn * cn_t)) * mu, rel=1e-3)
        assert num == pytest.approx(math.sqrt(lam * lam_t / (n1 * n2)) / abs(e1 - e2), rel=1e-3)
        nss = math.sqrt((lam + n1 * e2) * (lam_t + n2 * e2) / (n1 * n2)) / e1
        assert nuc == pytest.approx(nss, rel=1e-3)

    def test_rejects_unphysical(self):
        with pytest.raises(DomainError):
            holevo_bipartite(0.5 * np.eye(4))

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValidationError):
            holevo_bipartite(np.eye(6))


class TestMutualInformation:
    def test_uncorrelated(self):
        assert mutual_information_bipartite(bipartite_cm(two_groups(2, 2, mu=1.0))) == pytest.approx(0.0, abs=1e-14)

    def test_full_house_denominator_saturates(self):
        e1, e2 = eta_of(1.0), eta_of(0.1)
        vals = [sigma_n(bipartite_cm(two_groups(6, 6, eta=(e1, e2), mu=m))) for m in (1e5, 1e6)]
        assert vals[1] == pytest.approx(vals[0], rel=1e-3)
        n1 = n2 = 6
        lam = n1 * (1 - e2) + n2 * (1 - e1)
        lam_t = n1 * (1 - e1) + n2 * (1 - e2)
        ref = (lam + n1 * e2 + n2 * e1) * (lam_t + n1 * e1 + n2 * e2) / (n1 * n2 * e1 ** 2)
        assert vals[1] == pytest.approx(ref, rel=1e-3)

    def test_dummy_mutual_information_saturates(self):
        e1, e2 = eta_of(1.0), eta_of(0.1)
        I5, I6 = (mutual_information_bipartite(bipartite_cm(two_groups(5, 6, eta=(e1, e2), mu=m, total=12)))
                  for m in (1e5, 1e6))
        assert abs(I6 - I5) < 1e-2
        s5, s6 = (sigma_n(bipartite_cm(two_groups(5, 6, eta=(e1, e2), mu=m, total=12))) for m in (1e5, 1e6))
        assert s6 / s5 == pytest.approx(100.0, rel=1e-2)

    def test_non_negative(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            cfg = two_groups(int(rng.integers(1, 5)), int(rng.integers(1, 5)),
                             eta=tuple(rng.uniform(0.01, 1, 2)), omega=tuple(rng.uniform(1, 1.5, 2)),
                             mu=float(rng.uniform(1, 1e4)))
            assert mutual_information_bipartite(bipartite_cm(cfg)) >= -1e-12


class TestSecretKeyRate:
    def test_unit_mu(self):
        rep = secret_key_rate(two_groups(6, 6, eta=(0.5, 1.0), mu=1.0))
        assert rep.rate == pytest.approx(0.0, abs=1e-12)

    def test_170_km_rate(self):
        rep = secret_key_rate(two_groups(6, 6, eta=(eta_of(170), 1.0), mu=1e6))
        assert 1e-4 <= rep.rate <= 4e-4

    def test_report_identity(self):
        rng = np.random.default_rng(6)
        for _ in range(40):
            cfg = two_groups(int(rng.integers(1, 6)), int(rng.integers(1, 6)),
                             eta=tuple(rng.uniform(0.05, 1, 2)), omega=tuple(rng.uniform(1, 1.3, 2)),
                             mu=float(rng.uniform(1, 1e3)), xi=float(rng.uniform(0.9, 1.0)),
                             tau=float(rng.choice([1.0, 0.95])))
            rep = secret_key_rate(cfg)
            assert rep.rate == pytest.approx(rep.xi * rep.mutual_information - rep.holevo, abs=1e-12)
            assert rep.holevo >= -1e-9
            assert rep.status == ("ok" if rep.rate > 0 else "no_positive_rate")

    def test_cross_path_near_zero_distance(self):
        cfg = two_groups(6, 6, eta=(eta_of(1.0), 1.0), mu=1e6)
        assert secret_key_rate(cfg).rate == pytest.approx(asymptotic_rate_fh(cfg).rate, abs=1e-3)

    def test_lossless_pair_asymptote_is_unbounded(self):
        assert asymptotic_rate_fh(two_groups(6, 6)).rate == math.inf


class TestAsymptote:
    def test_matches_reference_form_at_unit_tau(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            n1, n2 = (int(v) for v in rng.integers(1, 20, 2))
            e1, e2 = rng.uniform(0.05, 1.0, 2)
            w1, w2 = rng.uniform(1.0, 1.3, 2)
            rep = asymptotic_rate_fh(two_groups(n1, n2, eta=(e1, e2), omega=(w1, w2)))
            assert rep.rate == pytest.approx(reference_asymptote(n1, n2, e1, e2, w1, w2), abs=1e-12)

    def test_lossless_decoder_pure_loss_special_case(self):
        e1, n1, n2 = 0.5, 6, 6
        n = n1 + n2
        nss = math.sqrt((n1 + n2 * (1 - e1)) * (n2 + n1 * (1 - e1)) / (n1 * n2)) / e1
        ref = math.log2(2 * e1 / (math.e * (1 - e1)) * math.sqrt(n1 * n2) / n) + g.entropic_h(nss)
        cfg = two_groups(n1, n2, eta=(e1, 1.0))
        assert asymptotic_rate_fh(cfg).rate == pytest.approx(ref, abs=1e-12)
        assert secret_key_rate(cfg.with_mu(1e8)).rate == pytest.approx(ref, abs=1e-3)

    def test_lossless_decoder_thermal_special_case(self):
        e1, w1, n1, n2 = 0.3, 1.2, 4, 8
        k = w1 * (1 - e1) + e1
        first = math.log2(2 * e1 / (math.e * (1 - e1)) * math.sqrt(n1 * n2 / ((n1 + n2 * k) * (n2 + n1 * k))))
        nss = math.sqrt((n1 + n2 * w1 * (1 - e1)) * (n2 + n1 * w1 * (1 - e1)) / (n1 * n2)) / e1
        ref = first - g.entropic_h(w1) + g.entropic_h(nss)
        assert asymptotic_rate_fh(two_groups(n1, n2, eta=(e1, 1.0), omega=(w1, 1.0))).rate == pytest.approx(ref, abs=1e-12)

    def test_non_ideal_detector_against_exact(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            cfg = two_groups(int(rng.integers(1, 8)), int(rng.integers(1, 8)),
                             eta=tuple(rng.uniform(0.1, 1.0, 2)), omega=tuple(rng.uniform(1, 1.2, 2)),
                             tau=float(rng.uniform(0.8, 1.0)), mu=1e8)
            assert secret_key_rate(cfg).rate == pytest.approx(asymptotic_rate_fh(cfg).rate, abs=1e-3)

    def test_symmetric_branch_finite(self):
        cfg = two_groups(6, 6, eta=(0.5 - 1e-12, 0.5), omega=(1.1, 1.1))
        rep = asymptotic_rate_fh(cfg)
        assert math.isfinite(rep.rate)
        exact = secret_key_rate(two_groups(6, 6, eta=(0.5, 0.5), omega=(1.1, 1.1), mu=1e8)).rate
        assert rep.rate == pytest.approx(exact, abs=1e-3)

    def test_report_identity(self):
        rep = asymptotic_rate_fh(two_groups(3, 9, eta=(0.3, 0.8), omega=(1.1, 1.0), tau=0.97))
        assert rep.mode == "asymptotic_fh" and rep.mu_used == math.inf
        assert rep.rate == pytest.approx(rep.mutual_information - rep.holevo, abs=1e-12)

    def test_rejects_dummies_and_imperfect_reconciliation(self):
        with pytest.raises(ValidationError):
            asymptotic_rate_fh(two_groups(2, 2, eta=(0.5, 0.9), total=5))
        with pytest.raises(ValidationError):
            asymptotic_rate_fh(two_groups(2, 2, eta=(0.5, 0.9), xi=0.95))


class TestOptimizer:
    def test_full_house_uses_asymptote(self):
        cfg = two_groups(6, 6, eta=(eta_of(30), 1.0))
        mu, rep = optimize_modulation(cfg)
        assert mu == math.inf and rep.mode == "asymptotic_fh"

    def test_interior_optimum_with_dummies(self):
        cfg = two_groups(49, 50, eta=(eta_of(1.0), eta_of(0.01)), total=100)
        mu, rep = optimize_modulation(cfg)
        assert 1.0 < mu < 1e6
        assert rep.rate > 0
        assert rep.rate > secret_key_rate(cfg.with_mu(1e6)).rate
        for f in (0.9, 1.1):
            assert secret_key_rate(cfg.with_mu(mu * f)).rate <= rep.rate + 1e-12

    def test_far_beyond_range(self):
        cfg = two_groups(6, 5, eta=(eta_of(500), 1.0), total=12)
        _, rep = optimize_modulation(cfg)
        assert rep.status == "no_positive_rate"

    def test_imperfect_reconciliation_finite_optimum(self):
        cfg = two_groups(6, 6, eta=(eta_of(20), eta_of(0.1)), xi=0.95)
        mu, rep = optimize_modulation(cfg)
        assert 1.0 < mu < 1e6 and rep.mode == "exact"


class TestMonotonicity:
    def test_fh_rate_grows_with_mu(self):
        cfg = two_groups(6, 6, eta=(eta_of(10), eta_of(0.1)), omega=(1.1, 1.0))
        rates = [secret_key_rate(cfg.with_mu(m)).rate for m in np.geomspace(2, 1e6, 30)]
        assert np.all(np.diff(rates) >= -1e-9)
        assert secret_key_rate(cfg.with_mu(1e8)).rate == pytest.approx(asymptotic_rate_fh(cfg).rate, abs=1e-3)

    def test_rate_decreases_with_distance(self):
        cfg = build_scheme("bipartite", N=12, distances=(0, 0), splitting="50/50", noises=(1.1, 1.0))
        rates = [optimize_modulation(cfg.with_group(0, cfg.groups[0].with_distance(d)))[1].rate
                 for d in np.linspace(0.5, 100, 25)]
        assert np.all(np.diff(rates) <= 1e-12)

    def test_rate_decreases_with_noise(self):
        base = two_groups(6, 6, eta=(eta_of(15), eta_of(0.1)), mu=1e4)
        rates = [secret_key_rate(base.with_group(0, base.groups[0].with_omega(w))).rate
                 for w in np.linspace(1.0, 1.3, 10)]
        assert np.all(np.diff(rates) <= 1e-12)

    def test_rate_increases_with_xi_and_tau(self):
        base = two_groups(6, 6, eta=(eta_of(15), eta_of(0.1)), mu=1e4)
        from dataclasses import replace
        r_xi = [secret_key_rate(replace(base, xi=x)).rate for x in np.linspace(0.9, 1.0, 6)]
        r_tau = [secret_key_rate(replace(base, tau=t)).rate for t in np.linspace(0.8, 1.0, 6)]
        assert np.all(np.diff(r_xi) >= 0) and np.all(np.diff(r_tau) >= -1e-12)

    def test_noise_and_detector_loss_cut_rate_by_more_than_half(self):
        ideal = build_scheme("bipartite", N=12, distances=(10.0, 0.0), splitting="50/50")
        noisy = build_scheme("bipartite", N=12, distances=(10.0, 0.0), splitting="50/50",
                             noises=(1.1, 1.0), tau=0.98)
        r_ideal, r_noisy = optimize_modulation(ideal)[1].rate, optimize_modulation(noisy)[1].rate
        assert r_noisy > 0 and r_ideal / r_noisy > 2


class TestSplittingSymmetry:
    @pytest.mark.parametrize("a,b", [(5, 95), (1, 99), (30, 70)])
    def test_pure_loss(self, a, b):
        e1, e2 = eta_of(1.0), eta_of(0.1)
        for mu in (10.0, 1e3, 1e6):
            r1 = secret_key_rate(two_groups(a, b, eta=(e1, e2), mu=mu)).rate
            r2 = secret_key_rate(two_groups(b, a, eta=(e1, e2), mu=mu)).rate
            assert r1 == pytest.approx(r2, abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 30), st.integers(1, 30), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
    def test_asymptote_pure_loss(self, a, b, e1, e2):
        if abs(e1 - e2) < 1e-6:
            return
        r1 = asymptotic_rate_fh(two_groups(a, b, eta=(e1, e2))).rate
        r2 = asymptotic_rate_fh(two_groups(b, a, eta=(e1, e2))).rate
        assert r1 == pytest.approx(r2, abs=1e-9)


class TestMultipartite:
    def test_two_groups_identical(self):
        cfg = two_groups(3, 4, eta=(0.4, 0.8), omega=(1.1, 1.0), mu=50.0)
        assert multipartite_rate(cfg) == secret_key_rate(cfg)

    def test_holevo_two_groups_matches_bipartite(self):
        V = bipartite_cm(two_groups(3, 4, eta=(0.4, 0.8), mu=50.0))
        assert holevo_multipartite(V, 1) == pytest.approx(holevo_bipartite(V, 1)[0], abs=1e-10)

    def test_holevo_zero_when_uncorrelated(self):
        gs = tuple(GroupSpec(2, ChannelParams(e)) for e in (0.3, 0.6, 0.9))
        VM = reduced_cm_multipartite(ProtocolConfig(gs, mu=1.0))
        for c in range(3):
            assert holevo_multipartite(VM, c) == pytest.approx(0.0, abs=1e-12)

    def test_conditioning_on_farthest_group(self):
        # distinct distances: the maximal Holevo term comes from heterodyning the farthest group
        gs = tuple(GroupSpec.at_distance(4, d) for d in (0.3, 0.8, 0.1))
        cfg = ProtocolConfig(gs, mu=40.0)
        VM = reduced_cm_multipartite(cfg)
        chis = [holevo_multipartite(VM, c) for c in range(3)]
        assert int(np.argmax(chis)) == 1
        assert multipartite_rate(cfg).conditioning == 1

    def test_y_scheme_far_groups_dominate(self):
        cfg = build_scheme("Y", 3, 12, (0.5, 0.1), mu=40.0)
        VM = reduced_cm_multipartite(cfg)
        chis = [holevo_multipartite(VM, c) for c in range(3)]
        assert max(chis[:2]) > chis[2]

    def test_switch_beats_joint_detection(self):
        for d in (0.2, 0.6, 1.0):
            y = build_scheme("Y", 3, 12, (d, 0.1))
            sw = build_scheme("switch", 3, 12, (d, 0.1))
            assert optimize_modulation(sw)[1].rate >= optimize_modulation(y)[1].rate

    def test_report_identity(self):
        rep = secret_key_rate(build_scheme("X", 4, 12, (0.3, 0.05), mu=30.0, xi=0.97))
        assert rep.rate == pytest.approx(rep.xi * rep.mutual_information - rep.holevo, abs=1e-12)
        assert rep.holevo >= -1e-9
