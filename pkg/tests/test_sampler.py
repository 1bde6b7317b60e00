"""Tests for Monte Carlo sampling, estimation, and bootstrap witnesses."""

import math

import numpy as np
import pytest

from clickstats import (
    ClickHistogram,
    ClickStatistics,
    DetectorConfig,
    JointClickStatistics,
    Linear,
    RngSeed,
    bootstrap_witness,
    click_statistics,
    coherent_distribution,
    estimate_statistics,
    fock_distribution,
    joint_click_statistics,
    read_histogram_csv,
    sample_clicks,
    tmsv_joint,
    write_histogram_csv,
)
from clickstats.errors import EmptyHistogram


def binomial_stats(N: int, p: float) -> ClickStatistics:
    probs = tuple(math.comb(N, k) * p**k * (1 - p) ** (N - k)
                  for k in range(N + 1))
    return ClickStatistics(N=N, probs=probs)


class TestRngSeed:
    def test_valid(self):
        assert RngSeed(0).seed == 0
        assert RngSeed(2**64 - 1).seed == 2**64 - 1

    @pytest.mark.parametrize("bad", [-1, 2**64, 1.5, "7"])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            RngSeed(bad)


class TestClickHistogram:
    def test_single_properties(self):
        h = ClickHistogram(np.array([3, 1, 0, 2]))
        assert not h.is_joint
        assert h.N == 3
        assert h.total == 6

    def test_joint_properties(self):
        h = ClickHistogram(np.array([[1, 2], [3, 4]]))
        assert h.is_joint
        assert (h.N1, h.N2) == (1, 1)
        assert h.total == 10

    def test_counts_frozen(self):
        h = ClickHistogram(np.array([1, 2]))
        with pytest.raises(ValueError):
            h.counts[0] = 5

    def test_float_counts_must_be_integral(self):
        assert ClickHistogram(np.array([1.0, 2.0])).total == 3
        with pytest.raises(ValueError):
            ClickHistogram(np.array([1.5, 2.0]))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            ClickHistogram(np.array([1, -1]))

    def test_wrong_axis_access(self):
        single = ClickHistogram(np.array([1, 2]))
        joint = ClickHistogram(np.array([[1, 2], [3, 4]]))
        with pytest.raises(AttributeError):
            single.N1
        with pytest.raises(AttributeError):
            joint.N


class TestSampleClicks:
    def test_point_mass(self):
        stats = ClickStatistics(N=4, probs=(1.0, 0.0, 0.0, 0.0, 0.0))
        h = sample_clicks(stats, 1000, RngSeed(7))
        assert h.counts[0] == 1000
        assert h.total == 1000

    def test_deterministic(self):
        stats = binomial_stats(4, 0.3)
        a = sample_clicks(stats, 5000, RngSeed(123))
        b = sample_clicks(stats, 5000, RngSeed(123))
        assert np.array_equal(a.counts, b.counts)
        c = sample_clicks(stats, 5000, RngSeed(124))
        assert not np.array_equal(a.counts, c.counts)

    def test_plain_int_seed_matches_wrapper(self):
        stats = binomial_stats(4, 0.3)
        a = sample_clicks(stats, 500, 99)
        b = sample_clicks(stats, 500, RngSeed(99))
        assert np.array_equal(a.counts, b.counts)

    def test_binomial_frequencies(self):
        stats = binomial_stats(4, 0.5)
        n = 10**6
        h = sample_clicks(stats, n, RngSeed(2024))
        freq = h.counts / n
        for k, truth in enumerate(stats.probs):
            se = math.sqrt(truth * (1 - truth) / n)
            assert abs(freq[k] - truth) < 4 * se

    def test_joint_sampling(self):
        det = DetectorConfig(N=4, response=Linear(eta=0.8))
        stats = joint_click_statistics(tmsv_joint(0.5, tol=1e-14), det, det)
        h = sample_clicks(stats, 20000, RngSeed(5))
        assert h.is_joint
        assert h.counts.shape == (5, 5)
        assert h.total == 20000
        h2 = sample_clicks(stats, 20000, RngSeed(5))
        assert np.array_equal(h.counts, h2.counts)

    def test_invalid_sample_count(self):
        stats = binomial_stats(2, 0.5)
        with pytest.raises(ValueError):
            sample_clicks(stats, 0, RngSeed(1))
        with pytest.raises(ValueError):
            sample_clicks(stats, -5, RngSeed(1))

    def test_signed_statistics_refused(self):
        stats = ClickStatistics(N=2, probs=(0.7, 0.4, -0.1), formal=True)
        with pytest.raises(ValueError, match="signed"):
            sample_clicks(stats, 100, RngSeed(1))

    def test_roundoff_negatives_clipped(self):
        stats = ClickStatistics(N=2, probs=(0.6, 0.4 + 5e-10, -5e-10),
                                formal=True)
        h = sample_clicks(stats, 1000, RngSeed(3))
        assert h.counts[2] == 0
        assert h.total == 1000


class TestEstimateStatistics:
    def test_point_mass(self):
        h = ClickHistogram(np.array([5, 0, 0]))
        est = estimate_statistics(h)
        assert est.probs[0] == 1.0
        assert est.stderr[0] == 0.0

    def test_half_split_stderr(self):
        # multinomial formula sqrt(p(1-p)/total), exact at p = 1/2
        h = ClickHistogram(np.array([500000, 500000]))
        est = estimate_statistics(h)
        assert est.probs == (0.5, 0.5)
        want = math.sqrt(0.25 / 10**6)
        assert abs(est.stderr[0] - want) < 1e-12
        assert abs(want - 5.0e-4) < 1e-15

    def test_empty_histogram(self):
        h = ClickHistogram(np.array([0, 0, 0]))
        with pytest.raises(EmptyHistogram):
            estimate_statistics(h)

    def test_joint_estimate(self):
        h = ClickHistogram(np.array([[10, 20], [30, 40]]))
        est = estimate_statistics(h)
        assert isinstance(est, JointClickStatistics)
        assert abs(est.probs[1, 1] - 0.4) < 1e-15
        assert abs(est.stderr[1, 1] - math.sqrt(0.4 * 0.6 / 100)) < 1e-15

    def test_kl_divergence_shrinks(self):
        stats = binomial_stats(4, 0.5)
        truth = np.array(stats.probs)

        def kl(n, seed):
            freq = sample_clicks(stats, n, seed).counts / n
            mask = freq > 0
            return float(np.sum(freq[mask] * np.log(freq[mask] / truth[mask])))

        coarse = kl(10**3, RngSeed(11))
        fine = kl(10**5, RngSeed(11))
        assert fine < coarse

    def test_estimator_consistency(self):
        # errors should shrink about 10x when samples grow 100x;
        # averaged over seeds, checked with factor-3 slack
        stats = binomial_stats(4, 0.5)
        truth = np.array(stats.probs)

        def mean_err(n):
            errs = []
            for s in range(10):
                freq = sample_clicks(stats, n, RngSeed(300 + s)).counts / n
                errs.append(np.max(np.abs(freq - truth)))
            return float(np.mean(errs))

        ratio = mean_err(10**4) / mean_err(10**6)
        assert 10 / 3 < ratio < 30


class TestBootstrapWitness:
    def test_parameter_validation(self):
        h = ClickHistogram(np.array([50, 50, 0]))
        with pytest.raises(ValueError):
            bootstrap_witness(h, 99, RngSeed(1))
        with pytest.raises(ValueError):
            bootstrap_witness(h, 200, RngSeed(1), threshold_sigmas=0.0)
        empty = ClickHistogram(np.array([0, 0, 0]))
        with pytest.raises(EmptyHistogram):
            bootstrap_witness(empty, 200, RngSeed(1))

    def test_fock_one_flagged(self):
        det = DetectorConfig(N=8, response=Linear(eta=0.9))
        stats = click_statistics(fock_distribution(1), det)
        h = sample_clicks(stats, 10**6, RngSeed(42))
        report = bootstrap_witness(h, 400, RngSeed(43))
        assert report.verdict == "nonclassical"
        qb_true = -0.9 * 7 / (8 - 0.9)
        se = report.uncertainties["qb"]
        assert abs(report.qb - qb_true) < 3 * se
        assert se < 0.01

    def test_coherent_consistent(self):
        det = DetectorConfig(N=8, response=Linear(eta=0.9))
        stats = click_statistics(coherent_distribution(1.0, tol=1e-14), det)
        h = sample_clicks(stats, 10**6, RngSeed(77))
        report = bootstrap_witness(h, 400, RngSeed(78))
        assert report.verdict == "consistent-with-classical"
        assert abs(report.qb) < 3 * report.uncertainties["qb"]

    def test_tmsv_joint_flagged(self):
        det = DetectorConfig(N=4, response=Linear(eta=0.8))
        stats = joint_click_statistics(tmsv_joint(0.5, tol=1e-14), det, det)
        h = sample_clicks(stats, 10**6, RngSeed(90))
        report = bootstrap_witness(h, 400, RngSeed(91))
        assert report.verdict == "nonclassical"
        se = report.uncertainties["cross_minor"]
        assert report.cross_minor < -3 * se

    def test_uncertainties_shape(self):
        det = DetectorConfig(N=8, response=Linear(eta=0.9))
        stats = click_statistics(coherent_distribution(1.0, tol=1e-14), det)
        h = sample_clicks(stats, 10**5, RngSeed(7))
        report = bootstrap_witness(h, 150, RngSeed(8))
        unc = report.uncertainties
        assert len(unc["leading_minors"]) == len(report.leading_minors)
        assert unc["resamples"] == 150
        assert report.threshold == 3.0
        d = report.to_dict()
        assert "uncertainties" in d

    def test_deterministic(self):
        det = DetectorConfig(N=8, response=Linear(eta=0.9))
        stats = click_statistics(coherent_distribution(1.0, tol=1e-14), det)
        h = sample_clicks(stats, 10**5, RngSeed(7))
        a = bootstrap_witness(h, 150, RngSeed(8))
        b = bootstrap_witness(h, 150, RngSeed(8))
        assert a.uncertainties["leading_minors"] == b.uncertainties["leading_minors"]
        assert a.verdict == b.verdict

    def test_coverage_on_classical_input(self):
        # over many independent runs the 3 sigma interval for the Q
        # parameter of coherent data must cover its true value 0 almost
        # always; a miss rate above 5 percent would mean broken errors
        det = DetectorConfig(N=4, response=Linear(eta=0.8))
        stats = click_statistics(coherent_distribution(1.2, tol=1e-14), det)
        hits = 0
        runs = 200
        for i in range(runs):
            h = sample_clicks(stats, 20000, RngSeed(1000 + i))
            report = bootstrap_witness(h, 120, RngSeed(50000 + i))
            if abs(report.qb) <= 3 * report.uncertainties["qb"]:
                hits += 1
        assert hits >= 0.95 * runs


class TestHistogramCsv:
    def test_single_round_trip(self, tmp_path):
        h = ClickHistogram(np.array([5, 0, 3, 2]))
        path = tmp_path / "single.csv"
        write_histogram_csv(h, path)
        text = path.read_text(encoding="utf-8")
        assert text.splitlines()[0] == "k,count"
        back = read_histogram_csv(path)
        assert np.array_equal(back.counts, h.counts)

    def test_joint_round_trip(self, tmp_path):
        h = ClickHistogram(np.array([[1, 2, 0], [0, 4, 5]]))
        path = tmp_path / "joint.csv"
        write_histogram_csv(h, path)
        text = path.read_text(encoding="utf-8")
        assert text.splitlines()[0] == "k1,k2,count"
        back = read_histogram_csv(path)
        assert back.is_joint
        assert np.array_equal(back.counts, h.counts)

    def test_sparse_and_shuffled_rows(self, tmp_path):
        path = tmp_path / "sparse.csv"
        path.write_text("k,count\n3,7\n0,1\n", encoding="utf-8")
        h = read_histogram_csv(path)
        assert np.array_equal(h.counts, np.array([1, 0, 0, 7]))

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("clicks,count\n0,1\n", encoding="utf-8")
        with pytest.raises(ValueError, match="header"):
            read_histogram_csv(path)

    def test_duplicate_rows(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("k,count\n0,1\n0,2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="duplicate"):
            read_histogram_csv(path)

    def test_non_integer_rows(self, tmp_path):
        path = tmp_path / "nonint.csv"
        path.write_text("k,count\n0,1.5\n", encoding="utf-8")
        with pytest.raises(ValueError):
            read_histogram_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ValueError):
            read_histogram_csv(path)
