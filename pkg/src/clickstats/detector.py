"""Forward model: state plus detector bank to exact click-counting statistics.

A bank of N on-off diodes splits the field evenly, so the no-click
probability operator of one diode is the normally ordered exp[-f(nhat/N)],
with f fixed by the detector physics (linear loss, dark counts, multi-photon
absorption, ...).  The probability of exactly k clicks is the binomial
combination

    c_k = C(N,k) sum_j C(k,j) (-1)^j <:exp[-(N-k+j) f(nhat/N)]:>.

For Fock-diagonal states everything reduces to per-level click kernels
t_k(n) -- the probability of k clicks given exactly n photons -- assembled
once per detector at extended precision and cached; statistics are then a
single non-negative contraction with the state's probabilities, so state
sweeps against a fixed detector are cheap.  Joint banks factor into a kernel
table per mode contracted with the two-mode probability table.

The alternating sums above cancel catastrophically (see the series module);
every kernel carries a certified absolute error below 1e-40, far under any
tolerance exposed to callers, with the working precision raised automatically
when a response's growth demands it.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import (
    DescriptorError,
    LengthMismatch,
    NegativeResponse,
    NonHermitianResult,
    NormalizationViolation,
    OrderTooLow,
    PrecisionLoss,
    UnboundedKernel,
)
from .series import PowerSeries, _exp_neg_lists, _log_series, auto_precision
from .states import (
    CoherentSuperposition,
    JointPhotonDistribution,
    PhotonNumberDistribution,
)

__all__ = [
    "Linear",
    "Affine",
    "Power",
    "PolynomialSeries",
    "NPhotonAbsorption",
    "DetectorConfig",
    "ClickStatistics",
    "JointClickStatistics",
    "response_series",
    "click_statistics",
    "joint_click_statistics",
    "generating_function",
    "multimode_effective_intensity",
    "detector_from_descriptor",
]

logger = logging.getLogger(__name__)

_CLAMP = 1e-12
_NORM_TOL = 1e-10
_KERNEL_TARGET = mp.mpf("1e-40")


# --- response functions -------------------------------------------------------

@dataclass(frozen=True)
class Linear:
    """f(x) = eta * x: ideal diodes with quantum efficiency eta."""

    eta: float

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"efficiency {self.eta!r} outside (0, 1]")

    def evaluate(self, x):
        return self.eta * x


@dataclass(frozen=True)
class Affine:
    """f(x) = eta * x + nu: linear response with a dark-count offset nu."""

    eta: float
    nu: float

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"efficiency {self.eta!r} outside (0, 1]")
        if self.nu < 0.0:
            raise ValueError(f"dark-count rate {self.nu!r} must be >= 0")

    def evaluate(self, x):
        return self.eta * x + self.nu


@dataclass(frozen=True)
class Power:
    """f(x) = x^n0: an idealized n0-th order absorber."""

    n0: int

    def __post_init__(self):
        if not isinstance(self.n0, int) or self.n0 < 1:
            raise ValueError("power exponent must be a positive integer")

    def evaluate(self, x):
        return x ** self.n0


@dataclass(frozen=True)
class PolynomialSeries:
    """f given by raw polynomial coefficients (constant term first).

    The constant term acts as a dark-count offset and must be >= 0; the
    polynomial must stay non-negative on the sampled domain (checked on a
    log-spaced grid when kernels are built, plus a leading-coefficient sign
    check here).
    """

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("polynomial response needs coefficients")
        object.__setattr__(self, "coefficients", coeffs)
        if coeffs[0] < 0.0:
            raise NegativeResponse(f"f(0) = {coeffs[0]!r} is negative")
        lead = next((c for c in reversed(coeffs) if c != 0.0), 0.0)
        if lead < 0.0:
            raise NegativeResponse("negative leading coefficient: response "
                                   "goes negative for large arguments")

    def evaluate(self, x):
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc


@dataclass(frozen=True)
class NPhotonAbsorption:
    """f(x) = x - log(sum_{j<n0} x^j/j!): diode fires only once n0 photons
    arrive together; n0 = 1 reduces to the ideal linear response."""

    n0: int

    def __post_init__(self):
        if not isinstance(self.n0, int) or self.n0 < 1:
            raise ValueError("absorption order must be a positive integer")

    def evaluate(self, x):
        partial = sum(x**j / math.factorial(j) for j in range(self.n0))
        if isinstance(x, complex):
            return x - cmath.log(partial)
        return x - math.log(partial)


RESPONSE_TYPES = (Linear, Affine, Power, PolynomialSeries, NPhotonAbsorption)


def _superlinear(resp) -> bool:
    """True when f grows faster than linearly.

    Then :exp[-s f(nhat/N)]: is an unbounded operator; its Fock-level
    kernels outgrow any geometric tail, so truncated photon-number tables
    cannot be contracted against them and analytic representations take over.
    The n-photon absorber is linear-growth: f(x) = x - log(poly) there.
    """
    if isinstance(resp, Power):
        return resp.n0 >= 2
    if isinstance(resp, PolynomialSeries):
        return any(c != 0.0 for c in resp.coefficients[2:])
    return False


def _evaluate_mp(resp, x):
    """resp.evaluate at mpf arguments, under the current working precision."""
    if isinstance(resp, Linear):
        return mp.mpf(resp.eta) * x
    if isinstance(resp, Affine):
        return mp.mpf(resp.eta) * x + mp.mpf(resp.nu)
    if isinstance(resp, Power):
        return x ** resp.n0
    if isinstance(resp, PolynomialSeries):
        acc = mp.mpf(0)
        for c in reversed(resp.coefficients):
            acc = acc * x + mp.mpf(c)
        return acc
    if isinstance(resp, NPhotonAbsorption):
        partial = mp.fsum(x ** j / mp.factorial(j) for j in range(resp.n0))
        return x - mp.log(partial)
    raise TypeError(f"unsupported response {type(resp).__name__}")


@dataclass(frozen=True)
class DetectorConfig:
    """A bank of N identical on-off diodes sharing one response function."""

    N: int
    response: object

    def __post_init__(self):
        if not isinstance(self.N, int) or self.N < 1:
            raise ValueError("diode count must be a positive integer")
        if not isinstance(self.response, RESPONSE_TYPES):
            raise TypeError(f"unsupported response {type(self.response).__name__}")


def _scaled_response_coeffs(resp, N: int, order: int):
    """Coefficients of f(x/N) as mpf values, at the current precision."""
    invN = mp.mpf(1) / N
    out = [mp.mpf(0)] * (order + 1)
    if isinstance(resp, Linear):
        if order >= 1:
            out[1] = mp.mpf(resp.eta) * invN
    elif isinstance(resp, Affine):
        out[0] = mp.mpf(resp.nu)
        if order >= 1:
            out[1] = mp.mpf(resp.eta) * invN
    elif isinstance(resp, Power):
        if order >= resp.n0:
            out[resp.n0] = invN ** resp.n0
    elif isinstance(resp, PolynomialSeries):
        _check_poly_positive(resp, 10.0 * max(order, 1) / N)
        for j, c in enumerate(resp.coefficients[:order + 1]):
            out[j] = mp.mpf(c) * invN ** j
    elif isinstance(resp, NPhotonAbsorption):
        p = [invN ** j / mp.factorial(j) for j in range(resp.n0)]
        ell = _log_series(p, order)
        if order >= 1:
            out[1] = invN
        for k in range(1, order + 1):
            out[k] -= ell[k]
    else:
        raise TypeError(f"unsupported response {type(resp).__name__}")
    return out


def _check_poly_positive(resp: PolynomialSeries, xmax: float):
    grid = np.geomspace(1e-9, max(xmax, 1e-6), 96)
    for x in grid:
        if resp.evaluate(float(x)) < 0.0:
            raise NegativeResponse(
                f"response dips to {resp.evaluate(float(x))!r} at x = {float(x)!r}")


def response_series(resp, N: int, s, order: int, prec: int | None = None) -> PowerSeries:
    """Series of exp[-s*f(x/N)] in the photon number x, truncated at `order`."""
    if order < 0:
        raise ValueError("order must be >= 0")
    if N < 1:
        raise ValueError("diode count must be >= 1")
    p = prec if prec is not None else auto_precision(order)
    with mp.workprec(p):
        fc = _scaled_response_coeffs(resp, N, order)
        if fc[0] < 0:
            # unreachable for built-in variants; poly constant is checked >= 0
            raise NegativeResponse(f"f(0) = {fc[0]} is negative")
        h, _ = _exp_neg_lists(fc, s, order)
    return PowerSeries(tuple(h))


# --- click statistics containers ----------------------------------------------

def _validate_probs(flat, total_slack: float, what: str, formal: bool = False):
    """Clamp tiny negatives to zero; reject material ones; check the total.

    `formal` statistics (superlinear response models) are signed by nature,
    so only their total is checked.
    """
    cleaned = []
    for c in flat:
        if not formal:
            if c < -_CLAMP:
                raise PrecisionLoss(f"{what} probability {c!r} below -{_CLAMP}")
            if c < 0.0:
                logger.debug("%s: clamping %r to 0", what, c)
                c = 0.0
        cleaned.append(float(c))
    total = math.fsum(cleaned)
    if abs(total - 1.0) > _NORM_TOL + total_slack:
        raise NormalizationViolation(
            f"{what} probabilities sum to {total!r} "
            f"(allowed slack {_NORM_TOL + total_slack:.3e})")
    return cleaned


@dataclass(frozen=True)
class ClickStatistics:
    """Click-number distribution c_0..c_N of a single bank.

    `exact` optionally carries the extended-precision values behind `probs`
    (present when produced by the forward model; absent for empirical data).
    `stderr` carries per-entry standard errors when estimated from counts.
    `norm_slack` is the extra normalization deficit allowed for truncated
    input states (their tail bound).  `formal` marks statistics of a
    superlinear response model, which are signed in general; only their
    total is constrained.
    """

    N: int
    probs: tuple
    exact: tuple | None = None
    stderr: tuple | None = None
    norm_slack: float = 0.0
    formal: bool = False

    def __post_init__(self):
        if not isinstance(self.N, int) or self.N < 1:
            raise ValueError("diode count must be a positive integer")
        if len(self.probs) != self.N + 1:
            raise ValueError(
                f"expected {self.N + 1} entries, got {len(self.probs)}")
        cleaned = _validate_probs(self.probs, self.norm_slack, "click",
                                  self.formal)
        object.__setattr__(self, "probs", tuple(cleaned))
        if self.stderr is not None:
            object.__setattr__(self, "stderr", tuple(float(s) for s in self.stderr))


@dataclass(frozen=True)
class JointClickStatistics:
    """Joint click table c_{k1,k2} of two banks measured in coincidence."""

    N1: int
    N2: int
    probs: np.ndarray
    exact: tuple | None = None
    stderr: np.ndarray | None = None
    norm_slack: float = 0.0
    formal: bool = False

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float)
        if arr.shape != (self.N1 + 1, self.N2 + 1):
            raise ValueError(f"expected shape {(self.N1 + 1, self.N2 + 1)}, "
                             f"got {arr.shape}")
        cleaned = _validate_probs(arr.ravel(), self.norm_slack, "joint click",
                                  self.formal)
        arr = np.array(cleaned).reshape(arr.shape)
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)


# --- kernel tables --------------------------------------------------------------

def _bucket(order: int) -> int:
    """Round the series order up so sweeps with drifting cutoffs share tables."""
    if order <= 128:
        return 32 * math.ceil(max(order, 1) / 32)
    if order <= 512:
        return 64 * math.ceil(order / 64)
    return 128 * math.ceil(order / 128)


_KERNEL_CACHE: dict = {}
_KERNEL_CACHE_LIMIT = 64


def _click_kernels(det: DetectorConfig, order: int, prec: int | None = None):
    """Cached per-Fock-level click kernels.

    Returns (prec_used, T) with T[k][n] = probability of k clicks among
    det.N diodes given exactly n photons, as mpf values with certified
    absolute error below 1e-40.
    """
    key = (det, order, prec)
    hit = _KERNEL_CACHE.get(key)
    if hit is not None:
        return hit
    N = det.N
    resp = det.response
    if isinstance(resp, (Linear, Affine)):
        # the diagonal is an exact power:
        #   :exp(-s (eta nhat/N + nu)): -> exp(-s nu) (1 - s eta/N)^n,
        # so the table is built by repeated multiplication with no series
        # and no cancellation beyond the binomial assembly, whose weight
        # sum 3^N is covered by the extra 2N guard bits
        p = max(prec or 0, 240 + 2 * N + order.bit_length())
        with mp.workprec(p):
            nu = getattr(resp, "nu", 0.0)
            K = []
            for s in range(N + 1):
                base = 1 - mp.mpf(s) * mp.mpf(resp.eta) / N
                val = mp.e ** (-mp.mpf(s) * mp.mpf(nu))
                row = [val]
                for _ in range(order):
                    val *= base
                    row.append(val)
                K.append(row)
            T = _assemble_click_kernels(N, K, order)
        result = (p, T)
        if len(_KERNEL_CACHE) >= _KERNEL_CACHE_LIMIT:
            _KERNEL_CACHE.clear()
        _KERNEL_CACHE[key] = result
        return result
    forced = prec is not None
    p = prec if forced else auto_precision(order)
    guard = 50 + 2 * N + order.bit_length()
    for _ in range(5):
        with mp.workprec(p):
            fc = _scaled_response_coeffs(det.response, N, order)
            pairs = [_exp_neg_lists(fc, s, order, want_majorant=True)
                     for s in range(N + 1)]
            # cancellation severity peaks at the deepest Fock level; a
            # majorant bound there covers the whole table
            ff_top = [1]
            for k in range(1, order + 1):
                ff_top.append(ff_top[-1] * (order - k + 1))
            worst = mp.mpf(0)
            for _, hmaj in pairs:
                m = mp.mpf(0)
                for k in range(order + 1):
                    m += hmaj[k] * ff_top[k]
                worst = max(worst, m)
            bound = worst * mp.mpf(2) ** (guard - p)
            if forced or bound <= _KERNEL_TARGET:
                K = _diag_table([h for h, _ in pairs], order)
                T = _assemble_click_kernels(N, K, order)
                result = (p, T)
                if len(_KERNEL_CACHE) >= _KERNEL_CACHE_LIMIT:
                    _KERNEL_CACHE.clear()
                _KERNEL_CACHE[key] = result
                return result
            needed = int(mp.log(worst / _KERNEL_TARGET, 2)) + guard + 80
        p = max(2 * p, needed)
    raise PrecisionLoss(f"click kernels for {det} unstable at {p} bits")


def _diag_table(h_lists, order: int):
    """K[s][n] = sum_k h_s[k] * n^(k), at the current precision."""
    S = len(h_lists)
    K = [[None] * (order + 1) for _ in range(S)]
    for n in range(order + 1):
        ffs = [1]
        for k in range(1, n + 1):
            ffs.append(ffs[-1] * (n - k + 1))
        for s in range(S):
            h = h_lists[s]
            K[s][n] = mp.fsum(h[k] * ffs[k] for k in range(n + 1))
    return K


def _assemble_click_kernels(N: int, K, order: int):
    """t_k(n) = C(N,k) sum_j C(k,j)(-1)^j K[N-k+j][n]."""
    T = []
    for k in range(N + 1):
        weights = [(N - k + j, mp.mpf(math.comb(N, k) * math.comb(k, j))
                    * (-1) ** j) for j in range(k + 1)]
        row = []
        for n in range(order + 1):
            row.append(mp.fsum(w * K[s][n] for s, w in weights))
        T.append(tuple(row))
    return tuple(T)


# --- forward model ---------------------------------------------------------------

def click_statistics(state, det: DetectorConfig,
                     prec: int | None = None) -> ClickStatistics:
    """Exact click-counting statistics of one bank for the given state."""
    if isinstance(state, PhotonNumberDistribution):
        return _click_from_distribution(state, det, prec)
    if isinstance(state, CoherentSuperposition):
        return _click_from_superposition(state, det, prec)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _click_from_distribution(state, det, prec):
    formal = _superlinear(det.response)
    if formal and state.tail_bound > 0.0:
        # truncated table of an infinite-tail state: the kernel sum does not
        # converge, so fall back to the family's exact representation
        if state.analytic is None:
            raise UnboundedKernel(
                f"{type(det.response).__name__} response on a truncated "
                "photon-number distribution with no analytic family tag")
        E = [_analytic_E(state.analytic, det, s, prec)
             for s in range(det.N + 1)]
        return _click_from_E(det.N, E, prec, norm_slack=0.0, formal=True)
    order = _bucket(state.cutoff)
    used_prec, T = _click_kernels(det, order, prec)
    with mp.workprec(used_prec):
        exact = [mp.fsum(pn * T[k][n] for n, pn in enumerate(state.probs)
                         if pn != 0.0)
                 for k in range(det.N + 1)]
    return ClickStatistics(det.N, tuple(float(c) for c in exact),
                           exact=tuple(exact), norm_slack=state.tail_bound,
                           formal=formal)


def _click_from_E(N, E, prec, norm_slack, formal):
    """Assemble c_k from the no-click expectations E[s], s = 0..N."""
    with mp.workprec(max(240, prec or 0)):
        exact = []
        for k in range(N + 1):
            exact.append(mp.fsum(
                math.comb(N, k) * math.comb(k, j) * (-1) ** j * E[N - k + j]
                for j in range(k + 1)))
    return ClickStatistics(N, tuple(float(c) for c in exact),
                           exact=tuple(exact), norm_slack=norm_slack,
                           formal=formal)


def _click_from_superposition(state, det, prec):
    E = [_superposition_E(state, det, s, prec) for s in range(det.N + 1)]
    return _click_from_E(det.N, E, prec, norm_slack=0.0,
                         formal=_superlinear(det.response))


_ANALYTIC_CACHE: dict = {}


def _analytic_E(tag, det: DetectorConfig, s: int, prec: int | None):
    """<:exp[-s f(nhat/N)]:> from the family's exact representation.

    Coherent states evaluate the response in closed form; thermal and
    single-photon-added thermal states integrate it against their known
    quasiprobability weight on intensities,

        thermal: w(x) = exp(-x/nbar)/nbar,
        spats:   w(x) = exp(-x/nbar) ((1+nbar) x - nbar)/nbar^3,

    both of which decay fast enough for any response.
    """
    key = (tag, det, s, prec)
    hit = _ANALYTIC_CACHE.get(key)
    if hit is not None:
        return hit
    kind, param = tag
    p = prec if prec is not None else 220
    N = det.N
    resp = det.response
    if isinstance(resp, PolynomialSeries):
        _check_poly_positive(resp, 10.0 * max(1.0, float(param)) / N)
    with mp.workprec(p):
        if kind == "coherent":
            val = mp.exp(-s * _evaluate_mp(resp, mp.mpf(param) / N))
        elif kind in ("thermal", "spats"):
            nb = mp.mpf(param)

            def g(x):
                return mp.exp(-x / nb - s * _evaluate_mp(resp, x / N))

            if kind == "thermal":
                f = g
                scale = nb
            else:
                f = lambda x: ((1 + nb) * x - nb) * g(x)
                scale = nb ** 3
            val, err = mp.quad(f, [0, nb, 8 * nb, mp.inf], error=True)
            if err > mp.mpf("1e-25") * max(1, abs(val)):
                val, err = mp.quad(f, [0, nb, 8 * nb, mp.inf],
                                   maxdegree=10, error=True)
                if err > mp.mpf("1e-20") * max(1, abs(val)):
                    raise PrecisionLoss(
                        f"quadrature for E({s}) stalled at error {float(err)!r}")
            val = val / scale
        else:
            raise UnboundedKernel(f"no analytic representation for "
                                  f"family {kind!r}")
    if len(_ANALYTIC_CACHE) >= 4096:
        _ANALYTIC_CACHE.clear()
    _ANALYTIC_CACHE[key] = val
    return val


_EXP_SERIES_CACHE: dict = {}


def _exp_series(det: DetectorConfig, s: int, order: int, prec: int):
    key = (det, s, order, prec)
    hit = _EXP_SERIES_CACHE.get(key)
    if hit is None:
        with mp.workprec(prec):
            fc = _scaled_response_coeffs(det.response, det.N, order)
            h, _ = _exp_neg_lists(fc, s, order)
        if len(_EXP_SERIES_CACHE) >= 512:
            _EXP_SERIES_CACHE.clear()
        _EXP_SERIES_CACHE[key] = h
        hit = h
    return hit


def _superposition_E(state: CoherentSuperposition, det: DetectorConfig,
                     s: int, prec: int | None):
    """<:exp[-s f(nhat/N)]:> for a coherent superposition, as mpf.

    The response series is evaluated at the cross amplitudes conj(a_i)*a_j;
    the truncation order is doubled until the evaluation's own tail terms are
    negligible, and the precision raised if the evaluation loses digits.
    """
    forced = prec is not None
    p = prec if forced else 240
    order = 64
    while True:
        h = _exp_series(det, s, order, p)
        with mp.workprec(p):
            acc = mp.mpc(0)
            pos = mp.mpf(0)
            tail_ok = True
            for ci, ai in state.terms:
                for cj, aj in state.terms:
                    z = mp.conj(mp.mpc(ai)) * mp.mpc(aj)
                    val, pos_ij, tail = _eval_forward(h, z)
                    pos += abs(mp.mpc(ci)) * abs(mp.mpc(cj)) * pos_ij
                    if tail > mp.mpf("1e-33") * (1 + abs(val)):
                        tail_ok = False
                    ov = mp.exp(-abs(mp.mpc(ai)) ** 2 / 2
                                - abs(mp.mpc(aj)) ** 2 / 2
                                + mp.conj(mp.mpc(ai)) * mp.mpc(aj))
                    acc += mp.conj(mp.mpc(ci)) * mp.mpc(cj) * val * ov
            lost = pos * mp.mpf(2) ** (12 - p)
            if tail_ok and (forced or lost <= mp.mpf("1e-33")):
                if abs(mp.im(acc)) > mp.mpf("1e-10") * max(1, abs(acc)):
                    raise NonHermitianResult(
                        f"imaginary residue {float(mp.im(acc))!r} in E({s})")
                return mp.re(acc)
            if not tail_ok:
                order *= 2
                if order > 8192:
                    raise OrderTooLow(
                        f"response series did not converge by order {order // 2}")
            if not forced and lost > mp.mpf("1e-33"):
                p = max(2 * p, int(mp.log(pos / mp.mpf("1e-33"), 2)) + 80)


def _eval_forward(h, z):
    """Forward power-sum evaluation returning (value, magnitude sum, max of
    the last eight term magnitudes) for convergence and conditioning checks."""
    acc = mp.mpc(0)
    power = mp.mpc(1)
    pos = mp.mpf(0)
    tail = mp.mpf(0)
    last = len(h) - 8
    for k, c in enumerate(h):
        t = c * power
        acc += t
        a = abs(t)
        pos += a
        if k >= last:
            tail = max(tail, a)
        power *= z
    return acc, pos, tail


def joint_click_statistics(state: JointPhotonDistribution, det1: DetectorConfig,
                           det2: DetectorConfig,
                           prec: int | None = None) -> JointClickStatistics:
    """Joint click statistics of two banks on a two-mode state."""
    if not isinstance(state, JointPhotonDistribution):
        raise TypeError(f"unsupported state type {type(state).__name__}")
    formal = _superlinear(det1.response) or _superlinear(det2.response)
    if formal and state.tail_bound > 0.0:
        raise UnboundedKernel(
            "superlinear response on a truncated two-mode distribution")
    c1, c2 = state.cutoffs
    p1, T1 = _click_kernels(det1, _bucket(c1), prec)
    p2, T2 = _click_kernels(det2, _bucket(c2), prec)
    N1, N2 = det1.N, det2.N
    nz_n, nz_m = np.nonzero(state.probs)
    exact = None
    if len(nz_n) * (N1 + 1) * (N2 + 1) <= 2_000_000:
        with mp.workprec(max(p1, p2)):
            acc = [[mp.mpf(0)] * (N2 + 1) for _ in range(N1 + 1)]
            for n, m in zip(nz_n.tolist(), nz_m.tolist()):
                pnm = float(state.probs[n, m])
                for k1 in range(N1 + 1):
                    w = pnm * T1[k1][n]
                    row = acc[k1]
                    for k2 in range(N2 + 1):
                        row[k2] += w * T2[k2][m]
            exact = tuple(tuple(row) for row in acc)
        table = np.array([[float(v) for v in row] for row in exact])
    else:
        # kernels are probabilities (non-negative), so a float contraction
        # loses nothing material once the cancellations are already resolved
        f1 = np.array([[float(T1[k][n]) for n in range(state.probs.shape[0])]
                       for k in range(N1 + 1)])
        f2 = np.array([[float(T2[k][m]) for m in range(state.probs.shape[1])]
                       for k in range(N2 + 1)])
        table = f1 @ state.probs @ f2.T
    return JointClickStatistics(N1, N2, table, exact=exact,
                                norm_slack=state.tail_bound, formal=formal)


def generating_function(stats: ClickStatistics, z) -> float:
    """g(z) = sum_k c_k z^k."""
    acc = 0.0
    for c in reversed(stats.probs):
        acc = acc * z + c
    return acc


def multimode_effective_intensity(etas, intensities) -> float:
    """Effective single-mode intensity eta*|beta|^2 = sum_mu eta_mu |alpha_mu|^2.

    A bank of on-off diodes cannot distinguish a multimode coherent input
    from a single mode carrying this weighted intensity.
    """
    etas = [float(e) for e in etas]
    intensities = [float(i) for i in intensities]
    if len(etas) != len(intensities):
        raise LengthMismatch(
            f"{len(etas)} efficiencies vs {len(intensities)} intensities")
    if any(i < 0.0 for i in intensities):
        raise ValueError("intensities must be >= 0")
    return math.fsum(e * i for e, i in zip(etas, intensities))


def detector_from_descriptor(desc: dict) -> DetectorConfig:
    """Build a DetectorConfig from a JSON-style descriptor."""
    if not isinstance(desc, dict):
        raise DescriptorError("detector descriptor must be a JSON object")
    try:
        N = int(desc["N"])
        r = desc["response"]
        kind = r.get("kind") if isinstance(r, dict) else None
        if kind == "linear":
            resp = Linear(float(r["eta"]))
        elif kind == "affine":
            resp = Affine(float(r["eta"]), float(r["nu"]))
        elif kind == "power":
            resp = Power(int(r["n0"]))
        elif kind == "poly":
            resp = PolynomialSeries(tuple(float(c) for c in r["coefficients"]))
        elif kind == "nabs":
            resp = NPhotonAbsorption(int(r["n0"]))
        else:
            raise DescriptorError(f"unknown response kind {kind!r}")
        return DetectorConfig(N, resp)
    except KeyError as exc:
        raise DescriptorError(f"detector descriptor missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise DescriptorError(f"bad detector parameter: {exc}") from exc
