"""Quantum states of light, reduced to what click counting can see.

Every observable in this package is a normally ordered function of the photon
number (single mode) or of two photon numbers (joint).  Two representations
therefore cover every supported state exactly:

* ``PhotonNumberDistribution`` -- phase-insensitive states given by their
  Fock-basis probabilities p_n, truncated with an explicit analytic tail
  bound.  Normally ordered expectations reduce to sums of diagonal matrix
  elements.
* ``CoherentSuperposition`` -- finite superpositions of coherent states.
  Normally ordered functions act on coherent amplitudes directly:
  <a| :h(nhat): |b> = h(conj(a)*b) <a|b>, so expectations close over the
  cross-amplitude matrix without any Fock sum.

Truncation is never silent: constructors take a tail tolerance (default
1e-14), stop once the analytic tail estimate is below it, and store the
actual missing mass so downstream normalization checks can account for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import (
    DescriptorError,
    NonHermitianResult,
    NormalizationViolation,
    OrderTooLow,
    PrecisionLoss,
    SqueezingOutOfRange,
    ZeroAmplitude,
    ZeroMeanPhotonNumber,
)
from .series import MIN_PRECISION, PowerSeries, _diag_sum, auto_precision

__all__ = [
    "PhotonNumberDistribution",
    "CoherentSuperposition",
    "JointPhotonDistribution",
    "coherent_distribution",
    "thermal_distribution",
    "spats_distribution",
    "fock_distribution",
    "odd_coherent",
    "tmsv_joint",
    "product_joint",
    "mixture_joint",
    "nom_expectation",
    "mandel_q",
    "state_from_descriptor",
]

DEFAULT_TAIL_TOL = 1e-14

_NORM_SLACK = 1e-12


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Fock-diagonal state: probs[n] = p_n for n = 0..cutoff.

    tail_bound is an upper bound on the probability mass beyond the cutoff;
    constructors record the actual missing mass so that
    sum(probs) + tail_bound stays within 1e-12 of one.

    `analytic` optionally names the untruncated family behind the numbers,
    as a ("family", parameter) pair.  Forward models that cannot work from a
    truncated table (responses growing faster than linearly) fall back to
    closed-form representations keyed by this tag.
    """

    probs: tuple
    tail_bound: float = 0.0
    analytic: tuple | None = None

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise ValueError("distribution needs at least the vacuum entry")
        if any(p < 0.0 for p in probs):
            raise ValueError("negative probability in photon-number distribution")
        if self.tail_bound < 0.0:
            raise ValueError("tail bound must be non-negative")
        total = math.fsum(probs) + self.tail_bound
        if abs(total - 1.0) > _NORM_SLACK:
            raise NormalizationViolation(
                f"probabilities plus tail sum to {total!r}, not 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_bound", float(self.tail_bound))

    @property
    def cutoff(self) -> int:
        return len(self.probs) - 1


@dataclass(frozen=True)
class CoherentSuperposition:
    """Finite superposition sum_i c_i |alpha_i> given as (c_i, alpha_i) pairs."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((complex(c), complex(a)) for c, a in self.terms)
        if not terms:
            raise ValueError("superposition needs at least one term")
        object.__setattr__(self, "terms", terms)
        norm = self.overlap_norm()
        if abs(norm - 1.0) > _NORM_SLACK:
            raise NormalizationViolation(
                f"superposition norm is {norm!r}, not 1")

    def overlap_norm(self) -> float:
        acc = 0.0 + 0.0j
        for ci, ai in self.terms:
            for cj, aj in self.terms:
                acc += ci.conjugate() * cj * coherent_overlap(ai, aj)
        return acc.real

    @property
    def max_intensity(self) -> float:
        return max(abs(a) ** 2 for _, a in self.terms)


def coherent_overlap(a: complex, b: complex) -> complex:
    """<a|b> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b) for coherent states."""
    return complex(
        np.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + np.conj(a) * b))


@dataclass(frozen=True)
class JointPhotonDistribution:
    """Two-mode Fock-diagonal-basis state: probs[n1, n2] = p_{n1,n2}."""

    probs: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float)
        if arr.ndim != 2:
            raise ValueError("joint distribution needs a 2-D probability table")
        if (arr < 0.0).any():
            raise ValueError("negative probability in joint distribution")
        total = float(arr.sum()) + self.tail_bound
        if abs(total - 1.0) > _NORM_SLACK:
            raise NormalizationViolation(
                f"joint probabilities plus tail sum to {total!r}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "tail_bound", float(self.tail_bound))

    @property
    def cutoffs(self) -> tuple[int, int]:
        return self.probs.shape[0] - 1, self.probs.shape[1] - 1

    def marginal(self, mode: int) -> PhotonNumberDistribution:
        p = self.probs.sum(axis=1 - mode)
        return PhotonNumberDistribution(tuple(p), self.tail_bound)


def _check_tol(tol: float):
    if not (0.0 < tol < 1.0):
        raise ValueError(f"truncation tolerance {tol!r} outside (0,1)")


def coherent_distribution(mean_photons: float,
                          tol: float = DEFAULT_TAIL_TOL) -> PhotonNumberDistribution:
    """Poisson photon statistics of a coherent state with <n> = mean_photons."""
    _check_tol(tol)
    mu = float(mean_photons)
    if mu < 0.0:
        raise ValueError("mean photon number must be >= 0")
    if mu == 0.0:
        return PhotonNumberDistribution((1.0,), 0.0)
    # successive term ratios p_{m+1}/p_m = mu/(m+1) only decrease, so the
    # tail beyond n is majorized by the geometric sum p_n * r/(1-r) with
    # r = mu/(n+1); the exact missing mass is tracked in extended precision
    with mp.workprec(MIN_PRECISION):
        p = mp.exp(-mp.mpf(mu))
        probs = [p]
        acc = p
        n = 0
        while True:
            r = mu / (n + 1)
            if r < 1.0 and float(probs[-1]) * r / (1.0 - r) <= tol:
                break
            n += 1
            p = p * mu / n
            probs.append(p)
            acc += p
            if n > 100000:
                raise RuntimeError("coherent cutoff runaway")
        tail = float(1 - acc)
    return PhotonNumberDistribution(tuple(float(q) for q in probs), max(tail, 0.0),
                                   analytic=("coherent", mu))


def thermal_distribution(nbar: float,
                         tol: float = DEFAULT_TAIL_TOL) -> PhotonNumberDistribution:
    """Geometric photon statistics p_n = nbar^n/(nbar+1)^{n+1}."""
    _check_tol(tol)
    nb = float(nbar)
    if nb < 0.0:
        raise ValueError("mean photon number must be >= 0")
    if nb == 0.0:
        return PhotonNumberDistribution((1.0,), 0.0)
    q = nb / (nb + 1.0)
    # tail beyond cutoff M is exactly q^{M+1}
    cutoff = 0
    while q ** (cutoff + 1) > tol:
        cutoff += 1
    probs = [(q ** n) / (nb + 1.0) for n in range(cutoff + 1)]
    return PhotonNumberDistribution(tuple(probs), q ** (cutoff + 1),
                                   analytic=("thermal", nb))


def spats_distribution(nbar: float,
                       tol: float = DEFAULT_TAIL_TOL) -> PhotonNumberDistribution:
    """Single photon added to a thermal state of mean nbar.

    p_0 = 0 and p_n = n q^{n-1}/(nbar+1)^2 with q = nbar/(nbar+1); the tail
    beyond cutoff M is exactly q^M (M+1+nbar)/(nbar+1).
    """
    _check_tol(tol)
    nb = float(nbar)
    if nb < 0.0:
        raise ValueError("mean photon number must be >= 0")
    if nb == 0.0:
        return PhotonNumberDistribution((0.0, 1.0), 0.0)
    q = nb / (nb + 1.0)
    cutoff = 1
    def tail(m):
        return q ** m * (m + 1.0 + nb) / (nb + 1.0)
    while tail(cutoff) > tol:
        cutoff += 1
    pref = 1.0 / (nb + 1.0) ** 2
    probs = [0.0] + [pref * n * q ** (n - 1) for n in range(1, cutoff + 1)]
    return PhotonNumberDistribution(tuple(probs), tail(cutoff),
                                   analytic=("spats", nb))


def fock_distribution(n: int) -> PhotonNumberDistribution:
    """Photon-number eigenstate |n>."""
    if not isinstance(n, int) or n < 0:
        raise ValueError("Fock level must be a non-negative integer")
    return PhotonNumberDistribution((0.0,) * n + (1.0,), 0.0)


def odd_coherent(alpha: complex) -> CoherentSuperposition:
    """Normalized superposition of |alpha> and -|-alpha> (odd Fock support)."""
    a = complex(alpha)
    if abs(a) ** 2 < 1e-150:
        raise ZeroAmplitude("odd superposition is undefined at zero amplitude")
    mu = abs(a) ** 2
    norm = 1.0 / math.sqrt(2.0 * (1.0 - math.exp(-2.0 * mu)))
    return CoherentSuperposition(((norm, a), (-norm, -a)))


def tmsv_joint(xi: complex, tol: float = DEFAULT_TAIL_TOL) -> JointPhotonDistribution:
    """Two-mode squeezed vacuum: perfectly photon-number-correlated,
    p_{n,n} = (1-|xi|^2)|xi|^{2n}."""
    _check_tol(tol)
    x = complex(xi)
    r = abs(x) ** 2
    if r >= 1.0:
        raise SqueezingOutOfRange(f"|xi| = {abs(x)!r} must be < 1")
    if r == 0.0:
        return JointPhotonDistribution(np.array([[1.0]]), 0.0)
    cutoff = 0
    while r ** (cutoff + 1) > tol:
        cutoff += 1
    table = np.zeros((cutoff + 1, cutoff + 1))
    table[np.arange(cutoff + 1), np.arange(cutoff + 1)] = \
        (1.0 - r) * r ** np.arange(cutoff + 1)
    return JointPhotonDistribution(table, r ** (cutoff + 1))


def product_joint(d1: PhotonNumberDistribution,
                  d2: PhotonNumberDistribution) -> JointPhotonDistribution:
    """Uncorrelated two-mode state from two single-mode distributions."""
    table = np.outer(d1.probs, d2.probs)
    tail = d1.tail_bound + d2.tail_bound - d1.tail_bound * d2.tail_bound
    return JointPhotonDistribution(table, tail)


def mixture_joint(weights, components) -> JointPhotonDistribution:
    """Convex mixture of joint distributions (weights must sum to 1)."""
    weights = [float(w) for w in weights]
    components = list(components)
    if len(weights) != len(components):
        raise ValueError("one weight per component required")
    if not components:
        raise ValueError("mixture needs at least one component")
    if any(w < 0.0 for w in weights) or abs(math.fsum(weights) - 1.0) > 1e-12:
        raise ValueError("weights must be non-negative and sum to 1")
    shape = (max(c.probs.shape[0] for c in components),
             max(c.probs.shape[1] for c in components))
    table = np.zeros(shape)
    tail = 0.0
    for w, c in zip(weights, components):
        s = c.probs.shape
        table[:s[0], :s[1]] += w * c.probs
        tail += w * c.tail_bound
    return JointPhotonDistribution(table, tail)


def _superposition_expectation(terms, h: PowerSeries, hermitian_tol: float = 1e-10):
    """sum_ij conj(c_i) c_j h(conj(a_i) a_j) <a_i|a_j> at the current precision.

    Returns the real part; a large imaginary residue means the evaluation
    lost accuracy and is rejected rather than silently truncated.
    """
    acc = mp.mpc(0)
    for ci, ai in terms:
        for cj, aj in terms:
            z = mp.conj(mp.mpc(ai)) * mp.mpc(aj)
            val = h.evaluate(z)
            ov = mp.exp(-abs(mp.mpc(ai)) ** 2 / 2 - abs(mp.mpc(aj)) ** 2 / 2
                        + mp.conj(mp.mpc(ai)) * mp.mpc(aj))
            acc += mp.conj(mp.mpc(ci)) * mp.mpc(cj) * val * ov
    scale = max(1.0, abs(acc))
    if abs(mp.im(acc)) > hermitian_tol * scale:
        raise NonHermitianResult(
            f"imaginary residue {float(mp.im(acc))!r} exceeds {hermitian_tol}")
    return mp.re(acc)


def nom_expectation(state, h: PowerSeries, prec: int | None = None) -> float:
    """Normally ordered expectation <:h(nhat):> for the given state.

    Distributions: sum of p_n times the diagonal Fock matrix element, which
    requires h to resolve every retained Fock level (h.order >= cutoff).
    Superpositions: the cross-amplitude rule; h is evaluated as given, so the
    caller is responsible for carrying enough orders for convergence at the
    relevant amplitudes.
    """
    if isinstance(state, PhotonNumberDistribution):
        if h.order < state.cutoff:
            raise OrderTooLow(
                f"series order {h.order} below state cutoff {state.cutoff}")
        forced = prec is not None
        p = prec if forced else auto_precision(state.cutoff)
        guard = 20 + state.cutoff.bit_length()
        for _ in range(4):
            with mp.workprec(p):
                parts, weights = [], mp.mpf(0)
                for n, pn in enumerate(state.probs):
                    if pn == 0.0:
                        continue
                    value, abs_sum = _diag_sum(h.coefficients, n)
                    parts.append(pn * value)
                    weights += pn * abs_sum
                total = mp.fsum(parts)
                bound = weights * mp.mpf(2) ** (guard - p)
                if forced or bound <= mp.mpf("1e-35"):
                    return float(total)
                needed = int(mp.log(max(weights, mp.mpf(1)) * mp.mpf("1e35"), 2)) + 80
            p = max(p * 2, needed)
        raise PrecisionLoss(f"Fock sum still uncertain at {p} bits")
    if isinstance(state, CoherentSuperposition):
        p = prec if prec is not None else auto_precision(h.order)
        with mp.workprec(p):
            return float(_superposition_expectation(state.terms, h))
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _moments(dist: PhotonNumberDistribution) -> tuple[float, float]:
    mean = math.fsum(n * p for n, p in enumerate(dist.probs))
    second = math.fsum(n * n * p for n, p in enumerate(dist.probs))
    return mean, second


def mandel_q(state) -> float:
    """Photon-number variance excess over Poisson: <(dn)^2>/<n> - 1."""
    if isinstance(state, PhotonNumberDistribution):
        mean, second = _moments(state)
        if mean <= 0.0:
            raise ZeroMeanPhotonNumber("Mandel Q undefined at zero mean")
        return (second - mean * mean) / mean - 1.0
    if isinstance(state, CoherentSuperposition):
        mean = nom_expectation(state, PowerSeries((0.0, 1.0)))
        nom2 = nom_expectation(state, PowerSeries((0.0, 0.0, 1.0)))
        if mean <= 0.0:
            raise ZeroMeanPhotonNumber("Mandel Q undefined at zero mean")
        # <(dn)^2> = <:n^2:> + <n> - <n>^2
        return (nom2 + mean - mean * mean) / mean - 1.0
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _complex_param(value, what: str) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise DescriptorError(f"{what} as a pair must be [re, im]")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)):
        return complex(value)
    raise DescriptorError(f"{what} must be a number or an [re, im] pair")


def state_from_descriptor(desc: dict):
    """Build a state from a JSON-style descriptor; see the README for kinds."""
    if not isinstance(desc, dict):
        raise DescriptorError("state descriptor must be a JSON object")
    kind = desc.get("kind")
    tol = desc.get("tol", DEFAULT_TAIL_TOL)
    try:
        if kind == "coherent":
            return coherent_distribution(float(desc["mean_photons"]), tol)
        if kind == "thermal":
            return thermal_distribution(float(desc["nbar"]), tol)
        if kind == "spats":
            return spats_distribution(float(desc["nbar"]), tol)
        if kind == "fock":
            return fock_distribution(int(desc["n"]))
        if kind == "odd_coherent":
            return odd_coherent(_complex_param(desc["alpha"], "alpha"))
        if kind == "tmsv":
            return tmsv_joint(_complex_param(desc["xi"], "xi"), tol)
    except KeyError as exc:
        raise DescriptorError(f"state descriptor missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise DescriptorError(f"bad state parameter: {exc}") from exc
    raise DescriptorError(f"unknown state kind {kind!r}")
