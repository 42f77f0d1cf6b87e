"""Distribution of the longest gap: exact counts, partial fractions and the double-exponential law.

Polynomials are stored as ascending coefficient lists (index = power of s).
For a recurrence with coefficients ``c_1 .. c_L`` put ``J = L - 1`` and

    M(s) = 1 - c_1 s - c_2 s^2 - ... - c_L s^L
    R(s) = c_1 + c_2 s + ... + (c_L - 1) s^J
    G(s) = -M(s) / (s - 1/lambda_1)

The number of ``m`` in ``[G_n, G_{n+1})`` whose longest gap is below ``f``
is the coefficient of ``s^n`` in ``s R(s) / T_f(s)`` with
``T_f(s) = M(s) + s^f R(s)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import RootValidationError, ZeckError
from .recurrence import Recurrence, SequenceTable, interval_bounds
from .spectral import char_roots, dominant_root
from .zeck import LegalityAutomaton

EULER_GAMMA = 0.57721566490153286061
ZETA2 = 1.6449340668482264365  # pi^2 / 6

DERIVATIVE_FLOOR = 1e-6
ROOT_SEPARATION = 1e-8
RESIDUAL_TOL = 1e-12
MAX_ROOT_DEGREE = 150


def _trim(coeffs: list) -> list:
    out = list(coeffs)
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def _roots_ok(coeffs: list) -> tuple[bool, list[complex]]:
    coeffs = _trim(coeffs)
    if len(coeffs) < 2:
        return True, []
    roots = list(P.polyroots(np.array(coeffs, dtype=float)))
    sep = min((abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1:]), default=np.inf)
    on_circle = any(abs(abs(z) - 1) < 1e-9 for z in roots)
    return sep > ROOT_SEPARATION and not on_circle, roots


@dataclass
class GapGrammarPolynomials:
    recurrence: Recurrence
    m_poly: list[int]
    r_poly: list[int]
    g_poly: list[float]
    j_last: int
    lambda1: float
    k_const: float
    lambda2_abs: float
    diagnostics: dict = field(default_factory=dict)

    def M(self, s):
        return P.polyval(s, self.m_poly)

    def R(self, s):
        return P.polyval(s, self.r_poly)

    def G(self, s):
        return P.polyval(s, self.g_poly)

    def tf_coeffs(self, f: int) -> list[int]:
        """Integer coefficients of ``T_f(s) = M(s) + s^f R(s)``."""
        size = max(len(self.m_poly), f + len(self.r_poly))
        out = [0] * size
        for i, c in enumerate(self.m_poly):
            out[i] += c
        for i, c in enumerate(self.r_poly):
            out[f + i] += c
        return _trim(out)

    def numerator(self) -> list[int]:
        """Integer coefficients of ``s R(s)``."""
        return [0] + list(self.r_poly)


def build_polynomials(rec: Recurrence, strict: bool = True) -> GapGrammarPolynomials:
    """Polynomials of the longest-gap generating function for ``rec``.

    With ``strict`` set, recurrences whose ``M`` or ``R`` has a repeated root
    or a root on the unit circle are refused; otherwise the violation is only
    recorded in the diagnostics.
    """
    c = rec.coeffs
    L = rec.L
    m_poly = [1] + [-x for x in c]
    r_poly = _trim(list(c[:-1]) + [c[-1] - 1])
    identity = [a + b for a, b in zip(m_poly, [0] + r_poly + [0] * L)]
    identity[L] += 1
    if identity[0] != 1 or any(identity[1:]):
        raise ZeckError("M(s) + s R(s) + s^L != 1; polynomial construction is inconsistent")
    m_ok, m_roots = _roots_ok(m_poly)
    r_ok, r_roots = _roots_ok(r_poly)
    diag = {
        "m_roots_simple_off_circle": m_ok,
        "r_roots_simple_off_circle": r_ok,
        "r_roots": [[z.real, z.imag] for z in r_roots],
    }
    if strict and not (m_ok and r_ok):
        bad = "M" if not m_ok else "R"
        roots = m_roots if not m_ok else r_roots
        raise ZeckError(
            f"{bad}(s) has a repeated root or a root of modulus 1 ({roots}); "
            "the partial-fraction analysis does not apply"
        )
    lam_mp = dominant_root(rec)
    lam = float(lam_mp)
    roots = char_roots(rec)
    lambda2 = max((abs(z) for z in roots[1:]), default=0.0)
    # synthetic division of M by (s - 1/lambda), highest power first
    r = 1 / lam
    desc = m_poly[::-1]
    q = [float(desc[0])]
    for coef in desc[1:-1]:
        q.append(coef + r * q[-1])
    remainder = desc[-1] + r * q[-1]
    g_poly = [-x for x in q[::-1]]
    if abs(remainder) > 1e-9:
        raise ZeckError(f"1/lambda_1 is not a root of M (remainder {remainder})")
    g_at = P.polyval(r, g_poly)
    k_const = lam * P.polyval(r, r_poly) / g_at
    diag["m_division_remainder"] = abs(remainder)
    return GapGrammarPolynomials(
        rec, m_poly, r_poly, g_poly, L - 1, lam, float(k_const), lambda2, diag
    )


# -- exact counts -------------------------------------------------------------

def count_less_than(table_or_rec, n: int, f: int, poly: GapGrammarPolynomials | None = None) -> int:
    """Exact number of ``m`` in ``[G_n, G_{n+1})`` with longest gap ``< f``.

    The coefficients of ``s R(s) / T_f(s)`` satisfy a linear recurrence read
    off the denominator, so this is ``O(n * nnz(T_f))`` big-integer work.
    Valid for ``f > J`` where ``J = L - 1``; smaller ``f`` raises.
    """
    rec = table_or_rec.recurrence if isinstance(table_or_rec, SequenceTable) else table_or_rec
    if n < 1:
        raise ZeckError("n must be positive")
    J = rec.L - 1
    if f <= J:
        raise ZeckError(f"generating-function counts need f > {J}; use count_by_automaton")
    if poly is None:
        poly = _integer_polys(rec)
    num = poly.numerator()
    den = poly.tf_coeffs(f)
    taps = [(i, -t) for i, t in enumerate(den) if i and t]
    seq = [0] * (n + 1)
    for k in range(n + 1):
        acc = num[k] if k < len(num) else 0
        for i, t in taps:
            if i > k:
                break
            acc += t * seq[k - i]
        seq[k] = acc
    return seq[n]


@dataclass
class _IntPolys:
    m_poly: list[int]
    r_poly: list[int]

    numerator = GapGrammarPolynomials.numerator
    tf_coeffs = GapGrammarPolynomials.tf_coeffs


def _integer_polys(rec: Recurrence) -> _IntPolys:
    c = rec.coeffs
    return _IntPolys([1] + [-x for x in c], _trim(list(c[:-1]) + [c[-1] - 1]))


def count_by_automaton(rec: Recurrence, n: int, f: int, include_trailing: bool = False) -> int:
    """Same count as `count_less_than`, by walking the legality automaton.

    Tracks the automaton state together with the zero run since the last
    non-zero digit.  Valid for every ``f >= 0`` and either trailing-gap
    convention, which makes it the cross-check for the generating function.
    """
    if f <= 0:
        return 0
    auto = LegalityAutomaton(rec)
    caps, steps = auto.caps, auto.table
    # state: (automaton state, zeros since last non-zero); runs that already
    # exceed f - 1 zeros may continue only with zeros
    limit = f - 1
    cur: dict[tuple[int, int], int] = {}
    for d in range(1, caps[0] + 1):
        key = (steps[0][d], 0)
        cur[key] = cur.get(key, 0) + 1
    for _ in range(n - 1):
        nxt: dict[tuple[int, int], int] = {}
        for (j, z), cnt in cur.items():
            zero_key = (steps[j][0], min(z + 1, limit + 1))
            nxt[zero_key] = nxt.get(zero_key, 0) + cnt
            if z + 1 <= limit:
                for d in range(1, caps[j] + 1):
                    key = (steps[j][d], 0)
                    nxt[key] = nxt.get(key, 0) + cnt
        cur = nxt
    if include_trailing:
        return sum(cnt for (j, z), cnt in cur.items() if z + 1 <= limit)
    return sum(cur.values())


def gf_count_candidate(rec: Recurrence, n: int, f: int, shift: int, numerator: str) -> int:
    """Coefficient of ``s^n`` under an alternative generating-function convention.

    ``shift`` adds to the exponent of ``s^f R(s)``; ``numerator`` is ``"sR"``
    or ``"1-s^J"``.  Used to confirm that only one convention matches brute force.
    """
    polys = _integer_polys(rec)
    J = rec.L - 1
    if numerator == "sR":
        num = polys.numerator()
    elif numerator == "1-s^J":
        num = [1] + [0] * J
        num[J] -= 1
    else:
        raise ValueError(numerator)
    den = polys.tf_coeffs(f + shift)
    seq = []
    for k in range(n + 1):
        acc = num[k] if k < len(num) else 0
        for i in range(1, min(k, len(den) - 1) + 1):
            acc -= den[i] * seq[k - i]
        seq.append(acc)
    return seq[n]


# -- roots of T_f -------------------------------------------------------------

@dataclass
class TfRoots:
    f: int
    roots: np.ndarray  # sorted by modulus
    derivatives: np.ndarray
    r_min: float
    r_max: float
    diagnostics: dict


def default_radii(poly: GapGrammarPolynomials) -> tuple[float, float]:
    inv_l1 = 1 / poly.lambda1
    upper = min(1.0, 1 / poly.lambda2_abs) if poly.lambda2_abs > 0 else 1.0
    r_min = 0.5 * (inv_l1 + upper)
    r_roots = [abs(complex(*z)) for z in poly.diagnostics.get("r_roots", [])]
    r_max = 1.5 * max([1.0] + r_roots)
    return r_min, r_max


def _polish_roots(coeffs: np.ndarray, roots: np.ndarray, steps: int = 4) -> np.ndarray:
    der = P.polyder(coeffs)
    z = roots.astype(complex)
    for _ in range(steps):
        dz = P.polyval(z, der)
        safe = np.where(dz == 0, 1, dz)
        z = z - np.where(dz == 0, 0, P.polyval(z, coeffs) / safe)
    return z


def tf_roots(
    poly: GapGrammarPolynomials,
    f: int,
    r_min: float | None = None,
    r_max: float | None = None,
    validate: bool = True,
) -> TfRoots:
    """All roots of ``T_f`` with the runtime checks the partial-fraction sum relies on."""
    if f < 1:
        raise ZeckError("f must be positive")
    coeffs = np.array(poly.tf_coeffs(f), dtype=float)
    degree = len(coeffs) - 1
    if degree > MAX_ROOT_DEGREE:
        raise RootValidationError(f"T_f has degree {degree} > {MAX_ROOT_DEGREE}")
    d_min, d_max = default_radii(poly)
    r_min = d_min if r_min is None else r_min
    r_max = d_max if r_max is None else r_max
    roots = _polish_roots(coeffs, P.polyroots(coeffs))
    roots = roots[np.argsort(np.abs(roots), kind="stable")]
    ders = P.polyval(roots, P.polyder(coeffs))
    # residual relative to the size of the terms being cancelled
    scale = P.polyval(np.abs(roots), np.abs(coeffs))
    residual = float(np.max(np.abs(P.polyval(roots, coeffs)) / scale)) if degree else 0.0
    if degree > 1:
        diff = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(diff, np.inf)
        separation = float(diff.min())
    else:
        separation = math.inf
    inside = int(np.sum(np.abs(roots) < r_min))
    diag = {
        "degree": degree,
        "max_residual": residual,
        "min_separation": separation,
        "min_abs_derivative": float(np.min(np.abs(ders))),
        "inside_r_min": inside,
        "max_modulus": float(np.max(np.abs(roots))),
    }
    checks = {
        "residual": residual < RESIDUAL_TOL,
        "separation": separation > ROOT_SEPARATION,
        "derivative": diag["min_abs_derivative"] > DERIVATIVE_FLOOR,
        "single_root_inside_r_min": inside == 1,
        "all_inside_r_max": diag["max_modulus"] < r_max,
        "radii_ordered": 1 / poly.lambda1 < r_min < r_max,
    }
    diag["checks"] = checks
    if validate and not all(checks.values()):
        failed = [k for k, v in checks.items() if not v]
        raise RootValidationError(f"T_f root validation failed for f={f}: {failed} ({diag})")
    return TfRoots(f, roots, ders, r_min, r_max, diag)


def alpha1(poly: GapGrammarPolynomials, f: int) -> float:
    """Smallest root of ``T_f`` by Newton from ``1/lambda_1``.

    Confirms the root satisfies ``a = 1/lambda_1 + a^f R(a) / G(a)`` and that
    this map contracts there; raises `RootValidationError` otherwise.
    """
    coeffs = np.array(poly.tf_coeffs(f), dtype=float)
    der = P.polyder(coeffs)
    a = 1 / poly.lambda1
    for _ in range(100):
        step = P.polyval(a, coeffs) / P.polyval(a, der)
        a -= step
        if abs(step) < 1e-17:
            break
    R, G = poly.R(a), poly.G(a)
    fixed = 1 / poly.lambda1 + a**f * R / G
    dR = P.polyval(a, P.polyder(poly.r_poly)) if len(poly.r_poly) > 1 else 0.0
    dG = P.polyval(a, P.polyder(poly.g_poly)) if len(poly.g_poly) > 1 else 0.0
    slope = a ** (f - 1) * (f * R * G + a * dR * G - a * R * dG) / G**2
    if abs(slope) >= 1:
        raise RootValidationError(f"fixed-point map does not contract at f={f} (slope {slope:.3g})")
    if abs(fixed - a) > 1e-12:
        raise RootValidationError(f"fixed-point residual {abs(fixed - a):.3g} at f={f}")
    return float(a)


# -- distribution functions ---------------------------------------------------

def _interval_width(table_or_rec, n: int) -> int:
    if isinstance(table_or_rec, SequenceTable) and len(table_or_rec) > n:
        return table_or_rec.width(n)
    rec = table_or_rec.recurrence if isinstance(table_or_rec, SequenceTable) else table_or_rec
    lo, hi = interval_bounds(rec, n)
    return int(hi - lo)


def cdf_exact(table_or_rec, poly: GapGrammarPolynomials, n: int, f: int, roots: TfRoots | None = None) -> float:
    """``P(n, f)`` from the partial-fraction expansion over the roots of ``T_f``.

    The sum is rescaled by the dominant term ``alpha_1^{-n}`` and divided by
    the interval width in log space, so large ``n`` does not overflow.
    """
    if f <= 0:
        return 0.0
    if f >= n and f + poly.j_last > MAX_ROOT_DEGREE:
        return 1.0  # every gap is at most n - 1
    if roots is None:
        roots = tf_roots(poly, f)
    alphas = roots.roots.astype(complex)
    weights = -P.polyval(alphas, poly.r_poly) / roots.derivatives
    a1 = alphas[0]
    log_ratio = np.log(a1) - np.log(alphas)  # log(alpha_1 / alpha_i)
    scaled = complex(np.sum(weights * np.exp(n * log_ratio)))
    width = _interval_width(table_or_rec, n)
    log_total = -n * cmath.log(a1) + cmath.log(scaled) - math.log(width)
    return float(cmath.exp(log_total).real)


def cdf_ratio(table_or_rec, n: int, f: int) -> float:
    """``P(n, f)`` as an exact big-integer ratio, converted at the end."""
    rec = table_or_rec.recurrence if isinstance(table_or_rec, SequenceTable) else table_or_rec
    if f > rec.L - 1:
        count = count_less_than(rec, n, f)
    else:
        count = count_by_automaton(rec, n, f)
    return float(Fraction(count, _interval_width(table_or_rec, n)))


def cdf_asymptotic(poly: GapGrammarPolynomials, n: int, f: float) -> float:
    return math.exp(-n * poly.k_const * poly.lambda1 ** (-f))


def truncation_window(poly: GapGrammarPolynomials, n: int) -> tuple[int, int]:
    """``(lo, hi)`` summation limits ``floor(c log nK)``, ``floor(C log nK)``."""
    log_lam = math.log(poly.lambda1)
    c = 0.5 / log_lam
    C = max(6.0, 4 * log_lam) + 1
    x = math.log(n * poly.k_const)
    return math.floor(c * x), math.floor(C * x)


def _moments(cdf_values: dict[int, float]) -> tuple[float, float]:
    # Y = longest gap + 1 has P(Y <= g) = P(n, g)
    gs = sorted(cdf_values)
    mean_y = second = 0.0
    for g in gs:
        mass = cdf_values[g] - cdf_values.get(g - 1, 0.0)
        mean_y += g * mass
        second += g * g * mass
    return mean_y - 1, second - mean_y**2


def mean_var(
    poly: GapGrammarPolynomials,
    n: int,
    mode: str = "closed-form",
    table: SequenceTable | None = None,
) -> tuple[float, float]:
    """Mean and variance of the longest gap over ``[G_n, G_{n+1})``.

    ``exact-sum`` sums the exact CDF over every ``g`` until it reaches 1 in
    double precision; ``asymptotic-sum`` sums the double-exponential CDF over
    the truncation window; ``closed-form`` uses the limiting expressions.
    """
    lam, K = poly.lambda1, poly.k_const
    log_lam = math.log(lam)
    if mode == "closed-form":
        mean = math.log(n * K) / log_lam + EULER_GAMMA / log_lam - 0.5
        return mean, ZETA2 / log_lam**2
    if mode == "asymptotic-sum":
        lo, hi = truncation_window(poly, n)
        if lo < 1 or hi <= lo:
            raise ZeckError(f"truncation window [{lo}, {hi}] is degenerate for n={n}")
        values = {g: cdf_asymptotic(poly, n, g) for g in range(lo - 1, hi + 1)}
        mean_y = second = 0.0
        for g in range(lo, hi + 1):
            mass = values[g] - values[g - 1]
            mean_y += g * mass
            second += g * g * mass
        return mean_y - 1, second - mean_y**2
    if mode == "exact-sum":
        source = table if table is not None else poly.recurrence
        values = exact_cdf_table(source, poly, n)
        return _moments(values)
    raise ZeckError(f"unknown mode {mode!r}")


def exact_cdf_table(table_or_rec, poly: GapGrammarPolynomials, n: int, tail: float = 1e-16) -> dict[int, float]:
    """``{f: P(n, f)}`` for ``f = 0, 1, ...`` until the CDF is within ``tail`` of 1.

    Partial fractions are used where the root checks pass, exact big-integer
    ratios elsewhere (small ``f``).
    """
    out = {0: 0.0}
    f = 1
    while f <= n + 1:
        value = None
        if f > poly.j_last:
            try:
                value = cdf_exact(table_or_rec, poly, n, f)
            except RootValidationError:
                value = None
        if value is None:
            value = cdf_ratio(table_or_rec, n, f)
        out[f] = min(1.0, max(0.0, value))
        if 1 - out[f] < tail:
            out[f] = 1.0
            break
        f += 1
    return out


def coin_run_baseline(n: int, p: float) -> tuple[float, float]:
    """Mean and variance of the longest run of heads in ``n`` tosses with ``P(heads) = p``."""
    if not 0 < p < 1:
        raise ZeckError("p must lie in (0, 1)")
    q = 1 - p
    log_inv = math.log(1 / p)
    mean = math.log(n * q) / log_inv + EULER_GAMMA / log_inv - 0.5
    var = ZETA2 / math.log(p) ** 2 + 1 / 12
    return mean, var


@dataclass
class LongestGapModel:
    n: int
    f_range: list[int]
    cdf_exact: dict[int, float]
    cdf_asymptotic: dict[int, float]
    k_const: float
    lambda1: float
    mean: float
    variance: float
    r_min: float
    r_max: float
    alpha1: dict[int, float]
    diagnostics: dict = field(default_factory=dict)


def longest_gap_model(
    rec: Recurrence,
    n: int,
    f_min: int = 1,
    f_max: int | None = None,
    mode: str = "closed-form",
    strict: bool = True,
) -> LongestGapModel:
    poly = build_polynomials(rec, strict=strict)
    if f_max is None:
        f_max = min(n + 1, truncation_window(poly, max(n, 2))[1] if n * poly.k_const > 1 else n + 1)
    f_range = list(range(max(f_min, 0), f_max + 1))
    exact: dict[int, float] = {}
    alphas: dict[int, float] = {}
    failures: dict[int, str] = {}
    for f in f_range:
        try:
            exact[f] = cdf_exact(rec, poly, n, f) if f > poly.j_last else cdf_ratio(rec, n, f)
        except RootValidationError as exc:
            failures[f] = str(exc).split(":")[0]
            exact[f] = cdf_ratio(rec, n, f)
        try:
            alphas[f] = alpha1(poly, f)
        except RootValidationError:
            pass
    asym = {f: cdf_asymptotic(poly, n, f) for f in f_range}
    mean, var = mean_var(poly, n, mode)
    r_min, r_max = default_radii(poly)
    return LongestGapModel(
        n, f_range, exact, asym, poly.k_const, poly.lambda1, mean, var, r_min, r_max, alphas,
        {"root_fallbacks": failures, "polynomials": poly.diagnostics, "mode": mode},
    )
