"""Monte Carlo click sampling, estimation, and bootstrap witnesses.

Simulates finite measurement runs of a diode bank: draws i.i.d. click
outcomes from exact statistics by inverse CDF, tallies them into
histograms, converts histograms back into estimated statistics with
multinomial standard errors, and wraps the witness criteria in a
multinomial bootstrap so verdicts carry uncertainties.

The random number generator is numpy's PCG64 (a permuted congruential
generator) with a 64-bit seed, fixed for the lifetime of this package:
identical seeds and request sequences reproduce histograms bit for bit.

Point estimates of minors are computed through the standard witness
path (extended precision); the bootstrap resamples use batched float
determinants, which is adequate because sampling noise dominates float
rounding by many orders of magnitude at any realistic sample size.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detector import ClickStatistics, JointClickStatistics
from .errors import EmptyHistogram
from .witness import WitnessReport, _joint_basis, witness_report

__all__ = [
    "RngSeed",
    "ClickHistogram",
    "sample_clicks",
    "estimate_statistics",
    "bootstrap_witness",
    "write_histogram_csv",
    "read_histogram_csv",
]

_SEED_LIMIT = 2 ** 64
# entries below this are treated as roundoff and clipped before sampling;
# anything more negative is a genuinely signed quasi-distribution
_SIGNED_TOL = 1e-9


@dataclass(frozen=True)
class RngSeed:
    """64-bit unsigned seed for the PCG64 stream."""

    seed: int

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or not 0 <= self.seed < _SEED_LIMIT:
            raise ValueError("seed must be an integer in [0, 2^64)")


def _as_seed(seed) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    return RngSeed(seed)


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_as_seed(seed).seed))


@dataclass(frozen=True)
class ClickHistogram:
    """Tallied click outcomes of a finite measurement run.

    counts is a 1-D array over k = 0..N for a single bank, or a 2-D
    array over (k1, k2) for two banks in coincidence.  Entries are
    non-negative integers; `total` is their sum.
    """

    counts: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.counts)
        if arr.ndim not in (1, 2):
            raise ValueError("counts must be a 1-D or 2-D array")
        if any(s < 2 for s in arr.shape):
            raise ValueError("each bank needs outcomes 0..N with N >= 1")
        if not np.issubdtype(arr.dtype, np.integer):
            rounded = np.rint(arr)
            if not np.all(np.isfinite(arr)) or np.any(rounded != arr):
                raise ValueError("counts must be integers")
            arr = rounded
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("counts must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def is_joint(self) -> bool:
        return self.counts.ndim == 2

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def N(self) -> int:
        if self.is_joint:
            raise AttributeError("joint histogram has N1 and N2, not N")
        return self.counts.shape[0] - 1

    @property
    def N1(self) -> int:
        if not self.is_joint:
            raise AttributeError("single-bank histogram has N, not N1")
        return self.counts.shape[0] - 1

    @property
    def N2(self) -> int:
        if not self.is_joint:
            raise AttributeError("single-bank histogram has N, not N2")
        return self.counts.shape[1] - 1


def _sampling_weights(stats) -> tuple:
    """Flattened outcome probabilities, cleaned for sampling."""
    if isinstance(stats, ClickStatistics):
        flat = np.array(stats.probs, dtype=float)
        shape = (stats.N + 1,)
    elif isinstance(stats, JointClickStatistics):
        flat = np.asarray(stats.probs, dtype=float).ravel()
        shape = (stats.N1 + 1, stats.N2 + 1)
    else:
        raise TypeError(f"unsupported statistics type {type(stats).__name__}")
    if np.min(flat) < -_SIGNED_TOL:
        raise ValueError(
            "statistics carry negative entries beyond roundoff; a signed "
            "quasi-distribution cannot be sampled")
    flat = np.clip(flat, 0.0, None)
    return flat / flat.sum(), shape


def sample_clicks(stats, n_samples: int, seed) -> ClickHistogram:
    """Draw i.i.d. click outcomes and tally them into a histogram.

    Sampling is inverse-CDF over the flattened outcome list in index
    order (row-major for joint statistics), so a fixed seed fixes the
    histogram.  `seed` may be an RngSeed or a plain integer.
    """
    if not isinstance(n_samples, int) or n_samples < 1:
        raise ValueError("n_samples must be a positive integer")
    weights, shape = _sampling_weights(stats)
    rng = _generator(seed)
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    draws = rng.random(n_samples)
    idx = np.searchsorted(cdf, draws, side="right")
    np.clip(idx, 0, weights.size - 1, out=idx)
    counts = np.bincount(idx, minlength=weights.size)
    return ClickHistogram(counts.reshape(shape))


def estimate_statistics(hist: ClickHistogram):
    """Empirical click statistics with multinomial standard errors.

    Returns ClickStatistics or JointClickStatistics with probs set to
    counts/total and stderr to sqrt(p(1-p)/total) entrywise.
    """
    total = hist.total
    if total < 1:
        raise EmptyHistogram("histogram holds no events")
    freq = hist.counts / total
    se = np.sqrt(freq * (1.0 - freq) / total)
    if hist.is_joint:
        return JointClickStatistics(N1=hist.N1, N2=hist.N2, probs=freq,
                                    stderr=se)
    return ClickStatistics(N=hist.N, probs=tuple(freq), stderr=tuple(se))


# --- bootstrap ------------------------------------------------------------------


def _perm_matrix(N: int) -> np.ndarray:
    """F[m, k] = k!/(k-m)! / (N!/(N-m)!), the click-to-moment map."""
    return np.array([[math.perm(k, m) / math.perm(N, m)
                      for k in range(N + 1)] for m in range(N + 1)])


def _batched_minors(mats: np.ndarray) -> np.ndarray:
    """Leading principal minors of a stack of symmetric matrices.

    mats has shape (R, d, d); the result (R, d) holds det of the k x k
    top-left block in column k-1.  Float precision only: used for
    bootstrap spread, not for point estimates.
    """
    d = mats.shape[-1]
    cols = [np.linalg.det(mats[:, :k, :k]) for k in range(1, d + 1)]
    return np.stack(cols, axis=1)


def _single_bank_resamples(freqs: np.ndarray, N: int) -> dict:
    """Minor and Q_B replicas for resampled single-bank frequencies."""
    F = _perm_matrix(N)
    moms = freqs @ F.T
    d = N // 2 + 1
    idx = np.add.outer(np.arange(d), np.arange(d))
    mats = moms[:, idx]
    minors = _batched_minors(mats)

    k = np.arange(N + 1, dtype=float)
    mean = freqs @ k
    second = freqs @ (k * k)
    denom = mean * (N - mean)
    ok = denom > 0
    qb = np.full(freqs.shape[0], np.nan)
    qb[ok] = N * (second[ok] - mean[ok] ** 2) / denom[ok] - 1.0
    return {"minors": minors, "qb": qb[ok] if ok.sum() >= 2 else None}


def _joint_resamples(freqs: np.ndarray, N1: int, N2: int, basis: tuple) -> dict:
    """Minor and cross-minor replicas for resampled joint frequencies."""
    F1 = _perm_matrix(N1)
    F2 = _perm_matrix(N2)
    vals = np.einsum("ma,rab,nb->rmn", F1, freqs, F2)
    rows1 = np.array([[a[0] + b[0] for b in basis] for a in basis])
    rows2 = np.array([[a[1] + b[1] for b in basis] for a in basis])
    mats = vals[:, rows1, rows2]
    minors = _batched_minors(mats)

    v1 = vals[:, 2, 0] - vals[:, 1, 0] ** 2
    v2 = vals[:, 0, 2] - vals[:, 0, 1] ** 2
    cov = vals[:, 1, 1] - vals[:, 1, 0] * vals[:, 0, 1]
    return {"minors": minors, "cross": v1 * v2 - cov ** 2}


def bootstrap_witness(hist: ClickHistogram, resamples: int, seed,
                      threshold_sigmas: float = 3.0) -> WitnessReport:
    """Witness report with bootstrap uncertainties from a histogram.

    Point estimates come from the standard witness path on the
    empirical statistics.  `resamples` multinomial resamples of the
    histogram give empirical standard errors, and the verdict flags
    nonclassicality when any leading minor beyond the first, the Q
    parameter, or the cross-correlation minor satisfies

        point estimate < -threshold_sigmas * stderr.

    The minimum eigenvalue is reported but kept out of the sampled
    verdict: for data compatible with a semidefinite matrix its
    estimate is biased to the negative side, so a sigma rule on it
    over-rejects.
    """
    if not isinstance(resamples, int) or resamples < 100:
        raise ValueError("resamples must be an integer >= 100")
    if not threshold_sigmas > 0:
        raise ValueError("threshold_sigmas must be > 0")
    total = hist.total
    if total < 1:
        raise EmptyHistogram("histogram holds no events")

    stats = estimate_statistics(hist)
    base = witness_report(stats)

    weights = hist.counts.ravel() / total
    weights = weights / weights.sum()
    rng = _generator(seed)
    draws = rng.multinomial(total, weights, size=resamples) / total

    if hist.is_joint:
        freqs = draws.reshape(resamples, hist.N1 + 1, hist.N2 + 1)
        # same basis the point-estimate matrix was built on
        basis = _joint_basis(hist.N1 // 2, hist.N2 // 2)
        rep = _joint_resamples(freqs, hist.N1, hist.N2, basis)
        cross_se = float(np.std(rep["cross"], ddof=1))
        qb_se = None
    else:
        rep = _single_bank_resamples(draws, hist.N)
        cross_se = None
        qb_se = (float(np.std(rep["qb"], ddof=1))
                 if rep["qb"] is not None else None)

    minor_se = tuple(float(s) for s in np.std(rep["minors"], axis=0, ddof=1))

    criteria = [(m, s) for m, s in zip(base.leading_minors[1:], minor_se[1:])]
    if base.qb is not None and qb_se is not None:
        criteria.append((base.qb, qb_se))
    if base.cross_minor is not None and cross_se is not None:
        criteria.append((base.cross_minor, cross_se))
    flagged = any(value < -threshold_sigmas * se for value, se in criteria)
    verdict = "nonclassical" if flagged else "consistent-with-classical"

    uncertainties = {"leading_minors": minor_se, "resamples": resamples}
    if qb_se is not None:
        uncertainties["qb"] = qb_se
    if cross_se is not None:
        uncertainties["cross_minor"] = cross_se

    return WitnessReport(leading_minors=base.leading_minors,
                         min_eigenvalue=base.min_eigenvalue,
                         verdict=verdict, threshold=threshold_sigmas,
                         qb=base.qb, cross_minor=base.cross_minor,
                         uncertainties=uncertainties)


# --- histogram files -------------------------------------------------------------


def write_histogram_csv(hist: ClickHistogram, path) -> None:
    """Write a histogram as CSV: header k,count or k1,k2,count."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if hist.is_joint:
            writer.writerow(["k1", "k2", "count"])
            for k1 in range(hist.N1 + 1):
                for k2 in range(hist.N2 + 1):
                    writer.writerow([k1, k2, int(hist.counts[k1, k2])])
        else:
            writer.writerow(["k", "count"])
            for k in range(hist.N + 1):
                writer.writerow([k, int(hist.counts[k])])


def read_histogram_csv(path) -> ClickHistogram:
    """Read a histogram CSV written by write_histogram_csv.

    Rows may arrive in any order; outcomes absent from the file count
    as zero.  Duplicate outcome rows are rejected.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path} is empty") from None
        header = [h.strip().lower() for h in header]
        if header == ["k", "count"]:
            joint = False
        elif header == ["k1", "k2", "count"]:
            joint = True
        else:
            raise ValueError(
                f"unrecognized histogram header {header!r}; expected "
                "k,count or k1,k2,count")
        entries = {}
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"malformed histogram row {row!r}")
            try:
                nums = [int(cell) for cell in row]
            except ValueError:
                raise ValueError(f"non-integer histogram row {row!r}") from None
            key = tuple(nums[:-1])
            if any(k < 0 for k in key) or nums[-1] < 0:
                raise ValueError(f"negative value in histogram row {row!r}")
            if key in entries:
                raise ValueError(f"duplicate outcome {key} in {path}")
            entries[key] = nums[-1]
    if not entries:
        raise ValueError(f"{path} holds no histogram rows")
    if joint:
        n1 = max(k for k, _ in entries) + 1
        n2 = max(k for _, k in entries) + 1
        counts = np.zeros((max(n1, 2), max(n2, 2)), dtype=np.int64)
        for (k1, k2), c in entries.items():
            counts[k1, k2] = c
    else:
        n = max(k for (k,) in entries) + 1
        counts = np.zeros(max(n, 2), dtype=np.int64)
        for (k,), c in entries.items():
            counts[k] = c
    return ClickHistogram(counts)
