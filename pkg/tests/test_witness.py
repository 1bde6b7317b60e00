"""Moment extraction and nonclassicality criteria.

Oracles: binomial factorial moments in closed form; the single-photon
statistics (1-eta, eta, 0, ...) collapse everything to two entries; the
photon-added thermal state has the closed no-click expectation
E(s) = (1-c)/(1+c*nbar)^2 at c = s*eta/N (geometric series of the kernel
identity <n|:exp(-c nhat):|n> = (1-c)^n), which feeds an independent
mpmath matrix pipeline for minor values.
"""

import math

import mpmath as mp
import numpy as np
import pytest

from clickstats import (
    ClickStatistics,
    DetectorConfig,
    JointClickStatistics,
    Linear,
    NPhotonAbsorption,
    Power,
    click_statistics,
    coherent_distribution,
    fock_distribution,
    joint_click_statistics,
    mixture_joint,
    odd_coherent,
    product_joint,
    spats_distribution,
    thermal_distribution,
    tmsv_joint,
)
from clickstats.errors import (
    DegenerateMean,
    InsufficientOrder,
    NormalizationViolation,
    OrderExceedsDiodes,
)
from clickstats.witness import (
    MomentMatrix,
    PiMoments,
    cross_correlation_minor,
    factorial_moment,
    joint_moment_matrix,
    joint_pi_moments,
    leading_principal_minors,
    min_eigenvalue,
    moment_matrix,
    pi_moments,
    qb_parameter,
    witness_report,
)


def binomial_stats(N, p):
    probs = tuple(math.comb(N, k) * p**k * (1 - p) ** (N - k)
                  for k in range(N + 1))
    return ClickStatistics(N, probs)


def spats_pi_oracle(nbar, eta, N):
    """Independent moment pipeline from the closed-form E(s)."""
    with mp.workprec(300):
        def E(s):
            c = mp.mpf(s) * mp.mpf(eta) / N
            return (1 - c) / (1 + c * mp.mpf(nbar)) ** 2
        return [mp.fsum(math.comb(m, j) * (-1) ** j * E(j)
                        for j in range(m + 1)) for m in range(N + 1)]


def spats_minors_oracle(nbar, eta, N):
    vals = spats_pi_oracle(nbar, eta, N)
    d = N // 2 + 1
    with mp.workprec(300):
        M = mp.matrix(d, d)
        for i in range(d):
            for j in range(d):
                M[i, j] = vals[i + j]
        return [float(mp.det(M[:k, :k])) for k in range(1, d + 1)]


class TestFactorialMoment:
    def test_zeroth_is_one(self):
        stats = binomial_stats(6, 0.4)
        assert factorial_moment(stats, 0) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("m", [0, 1, 2, 3, 4])
    def test_binomial_closed_form(self, m):
        N, p = 8, 0.35
        stats = binomial_stats(N, p)
        expected = math.perm(N, m) * p**m
        assert abs(factorial_moment(stats, m) - expected) < 1e-12

    def test_single_photon_second_vanishes(self):
        stats = ClickStatistics(8, (0.1, 0.9) + (0.0,) * 7)
        assert factorial_moment(stats, 2) == 0.0

    def test_order_above_bank_size(self):
        with pytest.raises(OrderExceedsDiodes):
            factorial_moment(binomial_stats(4, 0.5), 5)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            factorial_moment(binomial_stats(4, 0.5), -1)


class TestPiMoments:
    def test_vacuum(self):
        stats = click_statistics(fock_distribution(0),
                                 DetectorConfig(6, Linear(0.9)))
        mom = pi_moments(stats)
        assert mom.values[0] == pytest.approx(1.0, abs=1e-14)
        assert all(abs(v) < 1e-14 for v in mom.values[1:])

    def test_single_photon_closed_form(self):
        N, eta = 8, 0.9
        stats = click_statistics(fock_distribution(1),
                                 DetectorConfig(N, Linear(eta)))
        mom = pi_moments(stats)
        assert abs(mom.values[1] - eta / N) < 1e-15
        assert all(abs(v) < 1e-15 for v in mom.values[2:])

    @pytest.mark.parametrize("m", range(9))
    def test_coherent_powers(self, m):
        N, eta, mu = 8, 0.9, 1.3
        stats = click_statistics(coherent_distribution(mu),
                                 DetectorConfig(N, Linear(eta)))
        mom = pi_moments(stats)
        expected = (1.0 - math.exp(-eta * mu / N)) ** m
        assert abs(mom.values[m] - expected) < 1e-12

    def test_physical_range(self):
        for state in (thermal_distribution(2.0), spats_distribution(1.1)):
            stats = click_statistics(state, DetectorConfig(8, Linear(0.8)))
            mom = pi_moments(stats)
            assert all(-1e-9 <= v <= 1 + 1e-9 for v in mom.values)

    def test_bad_zeroth_entry(self):
        with pytest.raises(NormalizationViolation):
            PiMoments((0.9, 0.1), 1)


class TestRoundTrip:
    """Forward statistics and direct state moments must agree.

    The direct side evaluates <:(1 - exp[-s f(n/N)])^m:> per state family:
    closed form for coherent light, intensity-weight integrals for thermal
    and photon-added thermal light, a two-term finite sum for Fock-1, and
    the two-amplitude bracket for the odd coherent state.
    """

    N = 8
    ETA = 0.9

    def _direct(self, kind, param, resp, m):
        N = self.N
        with mp.workprec(260):
            def G(x):
                if isinstance(resp, Linear):
                    fx = mp.mpf(resp.eta) * x / N
                elif isinstance(resp, Power):
                    fx = (x / N) ** resp.n0
                else:
                    part = mp.fsum((x / N) ** j / mp.factorial(j)
                                   for j in range(resp.n0))
                    fx = x / N - mp.log(part)
                return (1 - mp.exp(-fx)) ** m
            if kind == "coherent":
                return float(G(mp.mpf(param)))
            if kind == "thermal":
                nb = mp.mpf(param)
                return float(mp.quad(lambda x: mp.exp(-x / nb) * G(x),
                                     [0, nb, 10 * nb, mp.inf]) / nb)
            if kind == "spats":
                nb = mp.mpf(param)
                return float(mp.quad(
                    lambda x: mp.exp(-x / nb) * ((1 + nb) * x - nb) * G(x),
                    [0, nb, 10 * nb, mp.inf]) / nb ** 3)
            if kind == "fock1":
                # <1|:exp(-s f(n/N)):|1> = 1 - s f'(0)/N
                fp = resp.eta if isinstance(resp, Linear) else 0.0
                return float(mp.fsum(
                    math.comb(m, j) * (-1) ** j * (1 - j * mp.mpf(fp) / N)
                    for j in range(m + 1)))
            if kind == "odd":
                mu = mp.mpf(param)
                return float((G(mu) - mp.exp(-2 * mu) * G(-mu))
                             / (1 - mp.exp(-2 * mu)))
            raise AssertionError(kind)

    @pytest.mark.parametrize("resp", [Linear(0.9), Power(3),
                                      NPhotonAbsorption(3)],
                             ids=["linear", "cubic", "nabs3"])
    @pytest.mark.parametrize("kind,param,state_of", [
        ("coherent", 1.7, lambda p: coherent_distribution(p)),
        ("thermal", 1.2, lambda p: thermal_distribution(p)),
        ("spats", 0.8, lambda p: spats_distribution(p)),
        ("fock1", None, lambda p: fock_distribution(1)),
        ("odd", 2.0, lambda p: odd_coherent(math.sqrt(p))),
    ], ids=["coherent", "thermal", "spats", "fock1", "odd"])
    def test_moment_round_trip(self, resp, kind, param, state_of):
        det = DetectorConfig(self.N, resp)
        stats = click_statistics(state_of(param), det)
        mom = pi_moments(stats)
        for m in range(self.N + 1):
            direct = self._direct(kind, param, resp, m)
            assert abs(mom.values[m] - direct) < 1e-10, (m, kind)


class TestMomentMatrix:
    def test_hankel_shape_n8(self):
        stats = click_statistics(thermal_distribution(1.0),
                                 DetectorConfig(8, Linear(0.9)))
        M = moment_matrix(pi_moments(stats), 8)
        assert M.entries.shape == (5, 5)
        assert M.index_basis == (0, 1, 2, 3, 4)
        mom = pi_moments(stats)
        for i in range(5):
            for j in range(5):
                assert M.entries[i, j] == mom.values[i + j]

    def test_small_banks_give_two_by_two(self):
        for N in (2, 3):
            stats = click_statistics(coherent_distribution(0.5),
                                     DetectorConfig(N, Linear(0.8)))
            M = moment_matrix(pi_moments(stats), N)
            assert M.entries.shape == (2, 2)

    def test_vacuum_matrix(self):
        stats = click_statistics(fock_distribution(0),
                                 DetectorConfig(8, Linear(0.9)))
        M = moment_matrix(pi_moments(stats), 8)
        assert M.entries[0, 0] == pytest.approx(1.0)
        assert np.max(np.abs(M.entries)) == pytest.approx(1.0)
        minors = leading_principal_minors(M)
        assert minors[0] == pytest.approx(1.0)
        assert all(abs(v) < 1e-20 for v in minors[1:])

    def test_insufficient_order(self):
        stats = click_statistics(coherent_distribution(0.5),
                                 DetectorConfig(4, Linear(0.8)))
        mom = pi_moments(stats)
        with pytest.raises(InsufficientOrder):
            moment_matrix(mom, 8)

    def test_symmetry_enforced(self):
        with pytest.raises(ValueError):
            MomentMatrix(np.array([[1.0, 0.2], [0.3, 0.1]]), (0, 1))


class TestMinors:
    def test_identity(self):
        M = MomentMatrix(np.eye(3), (0, 1, 2))
        assert leading_principal_minors(M) == (1.0, 1.0, 1.0)

    def test_rank_one(self):
        # dyadic entries keep the outer product exactly rank one in floats
        v = np.array([1.0, 0.25, 0.0625])
        M = MomentMatrix(np.outer(v, v), (0, 1, 2))
        minors = leading_principal_minors(M)
        assert minors[0] == pytest.approx(1.0)
        assert all(abs(x) < 1e-25 for x in minors[1:])

    def test_single_photon_two_by_two(self):
        N, eta = 8, 0.9
        stats = click_statistics(fock_distribution(1),
                                 DetectorConfig(N, Linear(eta)))
        M = moment_matrix(pi_moments(stats), N)
        minors = leading_principal_minors(M)
        qb = qb_parameter(stats)
        mean = eta
        expected = mean * (N - mean) * qb / (N * N * (N - 1))
        assert abs(minors[1] - expected) < 1e-15
        assert abs(minors[1] - (-(eta / N) ** 2)) < 1e-15

    @pytest.mark.parametrize("nbar", [0.2, 1.0, 2.5])
    def test_spats_minors_pipeline_exact(self, nbar):
        # oracle rebuilt from the same stored probabilities, so this pins
        # the kernel + moment + determinant pipeline at working precision
        state = spats_distribution(nbar)
        stats = click_statistics(state, DetectorConfig(8, Linear(0.9)))
        minors = leading_principal_minors(moment_matrix(pi_moments(stats), 8))
        N, eta = 8, 0.9
        with mp.workprec(300):
            def E(s):
                c = mp.mpf(s) * mp.mpf(eta) / N
                return mp.fsum(pn * (1 - c) ** n
                               for n, pn in enumerate(state.probs))
            vals = [mp.fsum(math.comb(m, j) * (-1) ** j * E(j)
                            for j in range(m + 1)) for m in range(N + 1)]
            M = mp.matrix(5, 5)
            for i in range(5):
                for j in range(5):
                    M[i, j] = vals[i + j]
            oracle = [float(mp.det(M[:k, :k])) for k in range(1, 6)]
        for got, ref in zip(minors, oracle):
            assert abs(got - ref) < 1e-17 + 1e-12 * abs(ref)

    @pytest.mark.parametrize("nbar", [0.2, 1.0, 2.5])
    def test_spats_minors_family_fidelity(self, nbar):
        # against the untruncated family closed form; float construction of
        # the distribution bounds the agreement near 1e-14
        stats = click_statistics(spats_distribution(nbar),
                                 DetectorConfig(8, Linear(0.9)))
        minors = leading_principal_minors(moment_matrix(pi_moments(stats), 8))
        oracle = spats_minors_oracle(nbar, 0.9, 8)
        for got, ref in zip(minors[:3], oracle[:3]):
            assert abs(got - ref) < 1e-12
        for got, ref in zip(minors, oracle):
            assert abs(got - ref) < 1e-12 + 1e-6 * abs(ref)


class TestQbIdentity:
    """2x2 minor = <c>(N-<c>) Q_B / (N^2 (N-1)) for any statistics vector."""

    @pytest.mark.parametrize("N", [2, 4, 8, 16])
    def test_random_vectors(self, N):
        rng = np.random.default_rng(20240511 + N)
        for _ in range(50):
            c = rng.dirichlet(np.ones(N + 1))
            stats = ClickStatistics(N, tuple(c))
            minors = leading_principal_minors(
                moment_matrix(pi_moments(stats), N))
            qb = qb_parameter(stats)
            mean = math.fsum(k * ck for k, ck in enumerate(c))
            expected = mean * (N - mean) * qb / (N * N * (N - 1))
            assert abs(minors[1] - expected) < 1e-12


class TestQbParameter:
    def test_binomial_is_zero(self):
        for N, p in ((4, 0.3), (8, 0.62), (16, 0.05)):
            assert abs(qb_parameter(binomial_stats(N, p))) < 1e-12

    def test_single_photon_closed_form(self):
        N, eta = 8, 0.9
        stats = click_statistics(fock_distribution(1),
                                 DetectorConfig(N, Linear(eta)))
        expected = -eta * (N - 1) / (N - eta)
        assert abs(qb_parameter(stats) - expected) < 1e-12
        assert abs(expected - (-0.8873239436619718)) < 1e-15

    def test_thermal_is_super_binomial(self):
        stats = click_statistics(thermal_distribution(1.5),
                                 DetectorConfig(8, Linear(0.9)))
        assert qb_parameter(stats) > 0.0

    def test_vacuum_degenerate(self):
        with pytest.raises(DegenerateMean):
            qb_parameter(ClickStatistics(4, (1.0, 0.0, 0.0, 0.0, 0.0)))

    def test_saturated_degenerate(self):
        with pytest.raises(DegenerateMean):
            qb_parameter(ClickStatistics(4, (0.0, 0.0, 0.0, 0.0, 1.0)))


class TestMinEigenvalue:
    def test_identity(self):
        assert min_eigenvalue(MomentMatrix(np.eye(3), (0, 1, 2))) == 1.0

    def test_negative_minor_implies_negative_eigenvalue(self):
        stats = click_statistics(fock_distribution(1),
                                 DetectorConfig(8, Linear(0.9)))
        M = moment_matrix(pi_moments(stats), 8)
        assert leading_principal_minors(M)[1] < 0
        assert min_eigenvalue(M) < 0

    def test_spats_negative_region(self):
        stats = click_statistics(spats_distribution(0.2),
                                 DetectorConfig(8, Linear(0.9)))
        assert min_eigenvalue(moment_matrix(pi_moments(stats), 8)) < 0


class TestJointMoments:
    def test_zero_zero_is_one(self):
        state = tmsv_joint(0.6)
        det = DetectorConfig(4, Linear(0.8))
        mom = joint_pi_moments(joint_click_statistics(state, det, det))
        assert mom.values[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_product_statistics_factorize(self):
        s1 = coherent_distribution(0.8)
        s2 = thermal_distribution(0.5)
        d1 = DetectorConfig(4, Linear(0.9))
        d2 = DetectorConfig(4, Linear(0.7))
        joint = joint_click_statistics(product_joint(s1, s2), d1, d2)
        mom = joint_pi_moments(joint)
        m1 = pi_moments(click_statistics(s1, d1))
        m2 = pi_moments(click_statistics(s2, d2))
        for a in range(5):
            for b in range(5):
                assert abs(mom.values[a, b]
                           - m1.values[a] * m2.values[b]) < 1e-12

    def test_tmsv_positive_click_covariance(self):
        state = tmsv_joint(math.sqrt(0.5))
        det = DetectorConfig(4, Linear(0.8))
        mom = joint_pi_moments(joint_click_statistics(state, det, det))
        assert mom.values[1, 1] > mom.values[1, 0] * mom.values[0, 1]


class TestJointMatrix:
    def test_basis_order_n4(self):
        state = tmsv_joint(0.5)
        det = DetectorConfig(4, Linear(0.8))
        M = joint_moment_matrix(
            joint_pi_moments(joint_click_statistics(state, det, det)), 4, 4)
        assert M.index_basis == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1),
                                 (0, 2), (2, 1), (1, 2), (2, 2))
        assert M.entries.shape == (9, 9)
        assert M.entries[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_product_coherent_passes(self):
        state = product_joint(coherent_distribution(0.7),
                              coherent_distribution(1.1))
        det = DetectorConfig(4, Linear(0.8))
        M = joint_moment_matrix(
            joint_pi_moments(joint_click_statistics(state, det, det)), 4, 4)
        assert min_eigenvalue(M) >= -1e-10
        assert all(v >= -1e-10 for v in leading_principal_minors(M))

    def test_insufficient_order(self):
        state = tmsv_joint(0.5)
        det = DetectorConfig(2, Linear(0.8))
        mom = joint_pi_moments(joint_click_statistics(state, det, det))
        with pytest.raises(InsufficientOrder):
            joint_moment_matrix(mom, 4, 4)


class TestCrossCorrelationMinor:
    def test_product_coherent_vanishes(self):
        state = product_joint(coherent_distribution(0.9),
                              coherent_distribution(0.4))
        det = DetectorConfig(4, Linear(0.8))
        val = cross_correlation_minor(joint_click_statistics(state, det, det))
        assert abs(val) < 1e-10

    def test_tmsv_negative(self):
        state = tmsv_joint(math.sqrt(0.5))
        det = DetectorConfig(4, Linear(0.8))
        val = cross_correlation_minor(joint_click_statistics(state, det, det))
        assert val < 0.0

    def test_product_thermal_positive(self):
        state = product_joint(thermal_distribution(0.8),
                              thermal_distribution(1.3))
        det = DetectorConfig(4, Linear(0.8))
        val = cross_correlation_minor(joint_click_statistics(state, det, det))
        assert val > 0.0

    def test_needs_two_diodes(self):
        table = np.full((2, 2), 0.25)
        stats = JointClickStatistics(1, 1, table)
        with pytest.raises(OrderExceedsDiodes):
            cross_correlation_minor(stats)

    def test_cauchy_schwarz_on_separable_mixtures(self):
        det = DetectorConfig(4, Linear(0.8))
        rng = np.random.default_rng(7)
        for _ in range(5):
            parts = []
            weights = rng.dirichlet(np.ones(3))
            for _ in range(3):
                mu1, mu2 = rng.uniform(0.1, 2.0, size=2)
                parts.append(product_joint(coherent_distribution(mu1),
                                           coherent_distribution(mu2)))
            from clickstats import mixture_joint
            state = mixture_joint(tuple(weights), tuple(parts))
            val = cross_correlation_minor(
                joint_click_statistics(state, det, det))
            assert val >= -1e-10


class TestWitnessReport:
    def test_coherent_consistent(self):
        stats = click_statistics(coherent_distribution(1.5),
                                 DetectorConfig(8, Linear(0.9)))
        rep = witness_report(stats)
        assert rep.verdict == "consistent-with-classical"
        assert all(v >= -1e-10 for v in rep.leading_minors)
        assert rep.cross_minor is None

    def test_single_photon_nonclassical_via_qb(self):
        stats = click_statistics(fock_distribution(1),
                                 DetectorConfig(8, Linear(0.9)))
        rep = witness_report(stats)
        assert rep.verdict == "nonclassical"
        assert rep.qb < -0.88

    def test_spats_flagged_only_at_higher_order(self):
        # past the two-by-two crossover near nbar 0.877 only deeper minors dip
        stats = click_statistics(spats_distribution(2.5),
                                 DetectorConfig(8, Linear(0.9)))
        rep = witness_report(stats)
        assert rep.leading_minors[1] > 0
        assert min(rep.leading_minors[2:]) < 0
        assert rep.verdict == "nonclassical"

    def test_joint_tmsv_nonclassical(self):
        state = tmsv_joint(math.sqrt(0.5))
        det = DetectorConfig(4, Linear(0.8))
        rep = witness_report(joint_click_statistics(state, det, det))
        assert rep.verdict == "nonclassical"
        assert rep.cross_minor < 0
        assert rep.qb is None

    def test_threshold_semantics(self):
        # tiny numerical negatives stay classical at the default threshold
        stats = click_statistics(coherent_distribution(2.0),
                                 DetectorConfig(4, Linear(1.0)))
        rep = witness_report(stats, threshold=1e-9)
        assert rep.verdict == "consistent-with-classical"
        rep_strict = witness_report(stats, threshold=0.0)
        assert rep_strict.threshold == 0.0

    def test_scaling_never_flips_signs(self):
        stats = click_statistics(spats_distribution(0.4),
                                 DetectorConfig(8, Linear(0.9)))
        minors = np.array(leading_principal_minors(
            moment_matrix(pi_moments(stats), 8)))
        for scale in (1e2, 1e5, 1e8, 1e13):
            assert np.array_equal(np.sign(minors * scale), np.sign(minors))

    def test_to_dict(self):
        stats = click_statistics(coherent_distribution(1.0),
                                 DetectorConfig(4, Linear(0.9)))
        d = witness_report(stats).to_dict()
        assert set(d) == {"leading_minors", "min_eigenvalue", "qb",
                          "cross_minor", "verdict", "threshold"}
        assert isinstance(d["leading_minors"], list)
