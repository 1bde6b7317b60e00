"""Regenerate tests/goldens.py from high-precision closed forms.

Every reference value is computed here from analytic expressions for
the test families (geometric photon-number series, added-photon
thermal intensity weights, coherent-pair brackets), independent of the
library's kernel pipeline, at 320 bits, then rounded to float for
freezing.  Run from the repository root:

    python3 tools/make_goldens.py

The script also recomputes each frozen quantity through the installed
library and prints the observed gaps, which is how the comparison
tolerances in the acceptance tests were chosen (with wide margins).
"""

import sys
from pathlib import Path

import mpmath as mp

mp.mp.prec = 320

# --- test-family parameters (shared with the acceptance tests) ---------------------

SPATS_N = 8
SPATS_ETA = mp.mpf("0.9")
TMSV_N = 4
TMSV_ETA = mp.mpf("0.8")
ODD_N = 8


# --- single-photon-added thermal state, linear response ---------------------------
#
# The intensity distribution of the family is
#     w(x) = ((1+nbar) x - nbar) / nbar^3 * exp(-x/nbar),  x >= 0,
# so <:exp(-c n):> integrates in closed form to (1-c)/(1+c*nbar)^2.


def spats_E(j, nbar):
    c = mp.mpf(j) * SPATS_ETA / SPATS_N
    return (1 - c) / (1 + c * nbar) ** 2


def spats_moments(nbar, mmax):
    out = []
    for m in range(mmax + 1):
        acc = mp.mpf(0)
        for j in range(m + 1):
            acc += (-1) ** j * mp.binomial(m, j) * spats_E(j, nbar)
        out.append(acc)
    return out


def hankel_minors(moments, d):
    minors = []
    for k in range(1, d + 1):
        M = mp.matrix(k, k)
        for i in range(k):
            for j in range(k):
                M[i, j] = moments[i + j]
        minors.append(mp.det(M))
    return minors


def spats_minor2(nbar):
    mom = spats_moments(nbar, 2)
    return mom[0] * mom[2] - mom[1] ** 2


def bisect(fn, lo, hi, steps=220):
    flo = fn(lo)
    for _ in range(steps):
        mid = (lo + hi) / 2
        fm = fn(mid)
        if mp.sign(fm) == mp.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


# --- two-mode squeezed vacuum, linear response -------------------------------------
#
# Diagonal Schmidt weights (1-r) r^n give
#     <:exp(-c1 n1) exp(-c2 n2):> = (1-r) / (1 - r (1-c1)(1-c2)).


def tmsv_E(j1, j2, r):
    c1 = mp.mpf(j1) * TMSV_ETA / TMSV_N
    c2 = mp.mpf(j2) * TMSV_ETA / TMSV_N
    return (1 - r) / (1 - r * (1 - c1) * (1 - c2))


def tmsv_cross_minor(r):
    mu = {}
    for a in range(3):
        for b in range(3):
            acc = mp.mpf(0)
            for j1 in range(a + 1):
                for j2 in range(b + 1):
                    acc += ((-1) ** (j1 + j2) * mp.binomial(a, j1)
                            * mp.binomial(b, j2) * tmsv_E(j1, j2, r))
            mu[a, b] = acc
    v1 = mu[2, 0] - mu[1, 0] ** 2
    v2 = mu[0, 2] - mu[0, 1] ** 2
    cov = mu[1, 1] - mu[1, 0] * mu[0, 1]
    return v1 * v2 - cov ** 2


# --- odd coherent superposition ----------------------------------------------------
#
# For the normalized odd superposition of +/- alpha with mu = |alpha|^2,
# a diagonal bracket evaluates any normally ordered function h(n):
#     <:h:> = [H(mu) - exp(-2 mu) H(-mu)] / (1 - exp(-2 mu)),
# where H(x) is h with the number operator replaced by x.


def odd_moment(m, mu, f):
    def H(x):
        return (1 - mp.e ** (-f(x / ODD_N))) ** m

    w = mp.e ** (-2 * mu)
    return (H(mu) - w * H(-mu)) / (1 - w)


def odd_minor2(mu, f):
    return odd_moment(2, mu, f) - odd_moment(1, mu, f) ** 2


F_LINEAR = ("linear", lambda x: x)
F_CUBIC = ("cubic", lambda x: x ** 3)
F_NABS3 = ("nabs3", lambda x: x - mp.log(1 + x + x ** 2 / 2))
ODD_RESPONSES = (F_LINEAR, F_CUBIC, F_NABS3)


def sign_ranges(fn, lo, hi, points=4001):
    """Roots and signs of fn over (lo, hi]; returns (roots, first_sign)."""
    xs = [lo + (hi - lo) * k / (points - 1) for k in range(1, points)]
    vals = [fn(x) for x in xs]
    roots = []
    for a, b, va, vb in zip(xs, xs[1:], vals, vals[1:]):
        if mp.sign(va) != mp.sign(vb) and vb != 0:
            roots.append(bisect(fn, a, b))
    return roots, int(mp.sign(vals[0]))


# --- freezing --------------------------------------------------------------------


def main() -> int:
    spats_nbars = ["0.2", "0.5", "1.0", "1.5", "2.0", "2.5", "3.0"]
    spats_rows = {}
    for s in spats_nbars:
        minors = hankel_minors(spats_moments(mp.mpf(s), 8), 5)
        spats_rows[s] = [float(v) for v in minors]
    crossover = bisect(spats_minor2, mp.mpf("0.5"), mp.mpf("1.2"))

    tmsv_xi2 = [mp.mpf(k) / 20 for k in range(1, 20)]
    tmsv_rows = {mp.nstr(r, 4): float(tmsv_cross_minor(r)) for r in tmsv_xi2}

    odd_roots = {}
    odd_spots = {}
    for name, f in ODD_RESPONSES:
        roots, first = sign_ranges(lambda x, f=f: odd_minor2(x, f),
                                   mp.mpf(0), mp.mpf(4))
        odd_roots[name] = ([float(r) for r in roots], first)
        odd_spots[name] = {s: float(odd_minor2(mp.mpf(s), f))
                           for s in ("0.5", "1.0", "2.0", "4.0")}

    lines = []
    lines.append('"""Frozen reference values for the acceptance tests.')
    lines.append("")
    lines.append("Generated by tools/make_goldens.py from closed-form")
    lines.append("expressions at 320 bits; do not edit by hand.")
    lines.append('"""')
    lines.append("")
    lines.append(f"SPATS_PARAMS = {{'N': {SPATS_N}, 'eta': 0.9}}")
    lines.append("")
    lines.append("# leading principal minors (1x1..5x5) per nbar")
    lines.append("SPATS_MINORS = {")
    for s, row in spats_rows.items():
        lines.append(f"    {s!r}: {row!r},")
    lines.append("}")
    lines.append("")
    lines.append("# nbar where the 2x2 minor changes sign")
    lines.append(f"SPATS_CROSSOVER = {float(crossover)!r}")
    lines.append("")
    lines.append(f"TMSV_PARAMS = {{'N1': {TMSV_N}, 'N2': {TMSV_N}, "
                 f"'eta': 0.8}}")
    lines.append("")
    lines.append("# cross-correlation minor per squared squeezing parameter")
    lines.append("TMSV_CROSS_MINORS = {")
    for s, v in tmsv_rows.items():
        lines.append(f"    {s!r}: {v!r},")
    lines.append("}")
    lines.append("")
    lines.append(f"ODD_PARAMS = {{'N': {ODD_N}}}")
    lines.append("")
    lines.append("# sign structure of the 2x2 minor over intensity (0, 4]:")
    lines.append("# (sign-change points, sign at small intensity)")
    lines.append("ODD_MINOR2_ROOTS = {")
    for name, pair in odd_roots.items():
        lines.append(f"    {name!r}: {pair!r},")
    lines.append("}")
    lines.append("")
    lines.append("# 2x2 minor at spot intensities")
    lines.append("ODD_MINOR2_SPOTS = {")
    for name, spots in odd_spots.items():
        lines.append(f"    {name!r}: {spots!r},")
    lines.append("}")
    lines.append("")

    out = Path(__file__).resolve().parent.parent / "tests" / "goldens.py"
    out.write_text("\n".join(lines), encoding="utf-8")
    print(f"wrote {out}")

    print(f"\ncrossover nbar* = {mp.nstr(crossover, 25)}")
    for name, (roots, first) in odd_roots.items():
        pts = ", ".join(mp.nstr(mp.mpf(r), 17) for r in roots)
        print(f"odd {name}: first sign {first}, roots [{pts}]")

    _print_pipeline_gaps(spats_rows, crossover, tmsv_rows, odd_spots)
    return 0


def _print_pipeline_gaps(spats_rows, crossover, tmsv_rows, odd_spots) -> None:
    """Observed library-vs-closed-form gaps, for tolerance calibration."""
    try:
        import math

        from clickstats import (
            DetectorConfig,
            Linear,
            NPhotonAbsorption,
            Power,
            click_statistics,
            cross_correlation_minor,
            joint_click_statistics,
            leading_principal_minors,
            moment_matrix,
            odd_coherent,
            pi_moments,
            spats_distribution,
            tmsv_joint,
        )
    except ImportError:
        print("library not importable; skipped gap report", file=sys.stderr)
        return

    det = DetectorConfig(N=SPATS_N, response=Linear(eta=0.9))

    def lib_minors(nbar):
        stats = click_statistics(spats_distribution(nbar, tol=1e-15), det)
        return leading_principal_minors(
            moment_matrix(pi_moments(stats), SPATS_N))

    print("\nspats minor gaps (library tol=1e-15 truncation):")
    worst = [0.0] * 5
    for s, row in spats_rows.items():
        got = lib_minors(float(s))
        for i, (a, b) in enumerate(zip(got, row)):
            worst[i] = max(worst[i], abs(a - b))
    print("  per-order worst:", ["%.3e" % w for w in worst])

    def lib_minor2(nbar):
        return lib_minors(nbar)[1]

    lo, hi = 0.5, 1.2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if lib_minor2(mid) < 0:
            lo = mid
        else:
            hi = mid
    print("  crossover gap: %.3e" % abs(0.5 * (lo + hi) - float(crossover)))

    det2 = DetectorConfig(N=TMSV_N, response=Linear(eta=0.8))
    worst_t = 0.0
    for s, v in tmsv_rows.items():
        stats = joint_click_statistics(
            tmsv_joint(math.sqrt(float(s)), tol=1e-15), det2, det2)
        worst_t = max(worst_t, abs(cross_correlation_minor(stats) - v))
    print("tmsv cross gap worst: %.3e" % worst_t)

    resp = {"linear": Linear(eta=1.0), "cubic": Power(n0=3),
            "nabs3": NPhotonAbsorption(n0=3)}
    worst_o = 0.0
    for name, spots in odd_spots.items():
        d = DetectorConfig(N=ODD_N, response=resp[name])
        for s, v in spots.items():
            stats = click_statistics(odd_coherent(math.sqrt(float(s))), d)
            minors = leading_principal_minors(
                moment_matrix(pi_moments(stats), ODD_N))
            worst_o = max(worst_o, abs(minors[1] - v))
    print("odd minor2 spot gap worst: %.3e" % worst_o)


if __name__ == "__main__":
    sys.exit(main())
