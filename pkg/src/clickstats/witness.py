"""Inverse path: click statistics to moments, moment matrices and verdicts.

The click-fraction observable of one diode has normally ordered moments
that are plain linear combinations of the click numbers,

    <:pi^m:> = (N-m)!/N! * sum_k k(k-1)...(k-m+1) c_k,

so empirical and exact statistics share one code path.  Arranging the
moments into a Hankel matrix (or its two-bank generalization over a graded
basis) gives a matrix that is positive semidefinite for every classical
state; any negative leading principal minor, negative eigenvalue, negative
cross-correlation minor, or negative binomial Q parameter certifies
nonclassicality.  Minors are evaluated by pivoted elimination in extended
precision because they sit many orders below the matrix entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .detector import ClickStatistics, JointClickStatistics
from .errors import (
    DegenerateMean,
    InsufficientOrder,
    NormalizationViolation,
    OrderExceedsDiodes,
)

__all__ = [
    "PiMoments",
    "JointPiMoments",
    "MomentMatrix",
    "WitnessReport",
    "factorial_moment",
    "pi_moments",
    "joint_pi_moments",
    "moment_matrix",
    "joint_moment_matrix",
    "leading_principal_minors",
    "min_eigenvalue",
    "qb_parameter",
    "cross_correlation_minor",
    "witness_report",
]

_WITNESS_PREC = 220
DEFAULT_THRESHOLD = 1e-9


@dataclass(frozen=True)
class PiMoments:
    """Normally ordered click-fraction moments, orders 0..max_order."""

    values: tuple
    max_order: int
    exact: tuple | None = None
    formal: bool = False

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if len(values) != self.max_order + 1:
            raise ValueError(f"expected {self.max_order + 1} values, "
                             f"got {len(values)}")
        if abs(values[0] - 1.0) > 1e-12:
            raise NormalizationViolation(
                f"zeroth moment is {values[0]!r}, not 1")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class JointPiMoments:
    """Two-bank moments values[m1, m2], orders 0..N_d per mode."""

    values: np.ndarray
    max_orders: tuple
    exact: tuple | None = None
    formal: bool = False

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        expected = (self.max_orders[0] + 1, self.max_orders[1] + 1)
        if arr.shape != expected:
            raise ValueError(f"expected shape {expected}, got {arr.shape}")
        if abs(arr[0, 0] - 1.0) > 1e-12:
            raise NormalizationViolation(
                f"(0,0) moment is {arr[0, 0]!r}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "max_orders",
                           (int(self.max_orders[0]), int(self.max_orders[1])))


@dataclass(frozen=True)
class MomentMatrix:
    """Symmetric matrix of moments over an ordered exponent basis."""

    entries: np.ndarray
    index_basis: tuple
    exact: tuple | None = None

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"matrix must be square, got shape {arr.shape}")
        if arr.shape[0] != len(self.index_basis):
            raise ValueError("basis length does not match matrix dimension")
        if np.max(np.abs(arr - arr.T)) > 1e-12:
            raise ValueError("matrix of moments must be symmetric")
        if abs(arr[0, 0] - 1.0) > 1e-12:
            raise NormalizationViolation(
                f"top-left entry is {arr[0, 0]!r}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "index_basis", tuple(self.index_basis))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class WitnessReport:
    """Nonclassicality certificate assembled from one statistics object.

    verdict is "nonclassical" when any reported criterion (leading minors
    beyond the trivial 1x1, minimum eigenvalue, cross-correlation minor,
    binomial Q parameter) falls below -threshold; with bootstrap
    uncertainties attached the rule is value < -k*stderr instead.
    """

    leading_minors: tuple
    min_eigenvalue: float
    verdict: str
    threshold: float
    qb: float | None = None
    cross_minor: float | None = None
    uncertainties: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "leading_minors": list(self.leading_minors),
            "min_eigenvalue": self.min_eigenvalue,
            "qb": self.qb,
            "cross_minor": self.cross_minor,
            "verdict": self.verdict,
            "threshold": self.threshold,
        }
        if self.uncertainties is not None:
            out["uncertainties"] = {
                k: (list(v) if isinstance(v, (list, tuple)) else v)
                for k, v in self.uncertainties.items()
            }
        return out


# --- single-bank moments --------------------------------------------------------

def factorial_moment(stats: ClickStatistics, m: int) -> float:
    """sum_k k(k-1)...(k-m+1) c_k."""
    if not isinstance(m, int) or m < 0:
        raise ValueError("moment order must be a non-negative integer")
    if m > stats.N:
        raise OrderExceedsDiodes(
            f"order {m} exceeds the {stats.N}-diode bank")
    if stats.exact is not None:
        with mp.workprec(_WITNESS_PREC):
            return float(mp.fsum(math.perm(k, m) * stats.exact[k]
                                 for k in range(m, stats.N + 1)))
    return math.fsum(math.perm(k, m) * c
                     for k, c in enumerate(stats.probs) if k >= m)


def pi_moments(stats: ClickStatistics) -> PiMoments:
    """All normally ordered click-fraction moments, orders 0..N."""
    N = stats.N
    exact = None
    if stats.exact is not None:
        with mp.workprec(_WITNESS_PREC):
            exact = tuple(
                mp.fsum(math.perm(k, m) * stats.exact[k]
                        for k in range(m, N + 1)) / math.perm(N, m)
                for m in range(N + 1))
        values = tuple(float(v) for v in exact)
    else:
        values = tuple(
            math.fsum(math.perm(k, m) * c
                      for k, c in enumerate(stats.probs) if k >= m)
            / math.perm(N, m)
            for m in range(N + 1))
    return PiMoments(values, N, exact=exact, formal=stats.formal)


def joint_pi_moments(stats: JointClickStatistics) -> JointPiMoments:
    """Two-bank moments values[m1, m2] for m_d = 0..N_d."""
    N1, N2 = stats.N1, stats.N2
    exact = None
    if stats.exact is not None:
        with mp.workprec(_WITNESS_PREC):
            rows = []
            for m1 in range(N1 + 1):
                row = []
                for m2 in range(N2 + 1):
                    acc = mp.fsum(
                        math.perm(k1, m1) * math.perm(k2, m2)
                        * stats.exact[k1][k2]
                        for k1 in range(m1, N1 + 1)
                        for k2 in range(m2, N2 + 1))
                    row.append(acc / (math.perm(N1, m1) * math.perm(N2, m2)))
                rows.append(tuple(row))
            exact = tuple(rows)
        values = np.array([[float(v) for v in row] for row in exact])
    else:
        F1 = np.array([[math.perm(k, m) / math.perm(N1, m)
                        for k in range(N1 + 1)] for m in range(N1 + 1)])
        F2 = np.array([[math.perm(k, m) / math.perm(N2, m)
                        for k in range(N2 + 1)] for m in range(N2 + 1)])
        values = F1 @ stats.probs @ F2.T
    return JointPiMoments(values, (N1, N2), exact=exact, formal=stats.formal)


# --- moment matrices -------------------------------------------------------------

def moment_matrix(mom: PiMoments, N: int) -> MomentMatrix:
    """Hankel matrix M[i,j] = <:pi^(i+j):> of size floor(N/2)+1."""
    half = N // 2
    if mom.max_order < 2 * half:
        raise InsufficientOrder(
            f"need moments through order {2 * half}, have {mom.max_order}")
    d = half + 1
    entries = np.array([[mom.values[i + j] for j in range(d)]
                        for i in range(d)])
    exact = None
    if mom.exact is not None:
        exact = tuple(tuple(mom.exact[i + j] for j in range(d))
                      for i in range(d))
    return MomentMatrix(entries, tuple(range(d)), exact=exact)


def _joint_basis(b1: int, b2: int) -> tuple:
    """Exponent pairs ordered by total degree, first mode first."""
    basis = []
    for deg in range(b1 + b2 + 1):
        for m1 in range(min(deg, b1), -1, -1):
            m2 = deg - m1
            if m2 <= b2:
                basis.append((m1, m2))
    return tuple(basis)


def joint_moment_matrix(mom: JointPiMoments, N1: int, N2: int) -> MomentMatrix:
    """Matrix M[a,b] = <:pi1^(m1a+m1b) pi2^(m2a+m2b):> over the graded basis."""
    b1, b2 = N1 // 2, N2 // 2
    if mom.max_orders[0] < 2 * b1 or mom.max_orders[1] < 2 * b2:
        raise InsufficientOrder(
            f"need moments through orders ({2 * b1}, {2 * b2}), "
            f"have {mom.max_orders}")
    basis = _joint_basis(b1, b2)
    entries = np.array([[mom.values[a[0] + b[0], a[1] + b[1]] for b in basis]
                        for a in basis])
    exact = None
    if mom.exact is not None:
        exact = tuple(tuple(mom.exact[a[0] + b[0]][a[1] + b[1]]
                            for b in basis) for a in basis)
    return MomentMatrix(entries, basis, exact=exact)


# --- minors, eigenvalues, verdicts ------------------------------------------------

def _det_pivoted(a) -> "mp.mpf":
    """Determinant by partial-pivoted elimination; mutates its argument."""
    n = len(a)
    det = mp.mpf(1)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            return mp.mpf(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = 1 / a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] * inv
            if f:
                row_r, row_c = a[r], a[col]
                for c in range(col + 1, n):
                    row_r[c] -= f * row_c[c]
    return det


def leading_principal_minors(M: MomentMatrix) -> tuple:
    """Determinants of the k x k top-left blocks, k = 1..dim.

    The minors cancel many orders below the entries, so each block is
    eliminated in extended precision (exact entries are used when the
    matrix carries them).
    """
    if M.exact is not None:
        rows = [list(r) for r in M.exact]
    else:
        rows = [[mp.mpf(float(x)) for x in r] for r in M.entries]
    out = []
    with mp.workprec(_WITNESS_PREC):
        for k in range(1, M.dim + 1):
            block = [row[:k] for row in rows[:k]]
            out.append(float(_det_pivoted(block)))
    return tuple(out)


def min_eigenvalue(M: MomentMatrix) -> float:
    """Smallest eigenvalue of the (symmetric) matrix of moments."""
    return float(np.linalg.eigvalsh(M.entries)[0])


def qb_parameter(stats: ClickStatistics) -> float:
    """Binomial Q parameter N Var(c)/(<c>(N - <c>)) - 1.

    Zero for binomial statistics; negative values certify nonclassicality,
    positive values mark super-binomial spread.
    """
    N = stats.N
    if stats.exact is not None:
        with mp.workprec(_WITNESS_PREC):
            mean = mp.fsum(k * c for k, c in enumerate(stats.exact))
            second = mp.fsum(k * k * c for k, c in enumerate(stats.exact))
            denom = mean * (N - mean)
            if denom <= 0:
                raise DegenerateMean(
                    f"mean click number {float(mean)!r} leaves no spread")
            return float(N * (second - mean ** 2) / denom - 1)
    mean = math.fsum(k * c for k, c in enumerate(stats.probs))
    second = math.fsum(k * k * c for k, c in enumerate(stats.probs))
    denom = mean * (N - mean)
    if denom <= 0:
        raise DegenerateMean(
            f"mean click number {mean!r} leaves no spread")
    return N * (second - mean ** 2) / denom - 1


def cross_correlation_minor(stats: JointClickStatistics) -> float:
    """det of the centered second-moment block of two banks,

        <:(d pi1)^2:> <:(d pi2)^2:> - <:(d pi1)(d pi2):>^2,

    non-negative for every classically correlated pair of fields.
    """
    if stats.N1 < 2 or stats.N2 < 2:
        raise OrderExceedsDiodes(
            "cross-correlation minor needs at least two diodes per bank")
    mom = joint_pi_moments(stats)
    if mom.exact is not None:
        with mp.workprec(_WITNESS_PREC):
            v1 = mom.exact[2][0] - mom.exact[1][0] ** 2
            v2 = mom.exact[0][2] - mom.exact[0][1] ** 2
            cov = mom.exact[1][1] - mom.exact[1][0] * mom.exact[0][1]
            return float(v1 * v2 - cov ** 2)
    v = mom.values
    v1 = v[2, 0] - v[1, 0] ** 2
    v2 = v[0, 2] - v[0, 1] ** 2
    cov = v[1, 1] - v[1, 0] * v[0, 1]
    return v1 * v2 - cov ** 2


def witness_report(stats, threshold: float = DEFAULT_THRESHOLD) -> WitnessReport:
    """Assemble all nonclassicality criteria for one statistics object."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if isinstance(stats, ClickStatistics):
        M = moment_matrix(pi_moments(stats), stats.N)
        minors = leading_principal_minors(M)
        mineig = min_eigenvalue(M)
        try:
            qb = qb_parameter(stats)
        except DegenerateMean:
            qb = None
        cross = None
    elif isinstance(stats, JointClickStatistics):
        M = joint_moment_matrix(joint_pi_moments(stats), stats.N1, stats.N2)
        minors = leading_principal_minors(M)
        mineig = min_eigenvalue(M)
        cross = cross_correlation_minor(stats)
        qb = None
    else:
        raise TypeError(f"unsupported statistics type {type(stats).__name__}")
    criteria = list(minors[1:]) + [mineig]
    if qb is not None:
        criteria.append(qb)
    if cross is not None:
        criteria.append(cross)
    verdict = ("nonclassical" if min(criteria) < -threshold
               else "consistent-with-classical")
    return WitnessReport(leading_minors=minors, min_eigenvalue=mineig,
                         verdict=verdict, threshold=threshold, qb=qb,
                         cross_minor=cross)
