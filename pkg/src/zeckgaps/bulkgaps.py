"""Exact, closed-form and limiting distributions of gaps between summands."""
from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import IntervalTooLargeError, ZeckError
from .recurrence import Recurrence, SequenceTable
from .spectral import SpectralData, summand_totals
from .zeck import DEFAULT_ENUMERATION_CAP, Decomposition, LegalityAutomaton, gap_list


@dataclass
class GapHistogram:
    n: int
    counts: dict[int, int]
    total: int
    source: str  # enumeration | automaton | closed-form | sampled

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise ZeckError("histogram counts do not add up to its total")

    def probability(self, k: int) -> Fraction:
        return Fraction(self.counts.get(k, 0), self.total) if self.total else Fraction(0)

    def probabilities(self) -> dict[int, Fraction]:
        return {k: self.probability(k) for k in sorted(self.counts)}


def _G(table: SequenceTable, i: int) -> int:
    # G_0 = 1 is the boundary value that makes the prefix/suffix counts exact
    if i == 0:
        return 1
    if i < 0:
        raise ZeckError(f"negative sequence index {i} requested")
    return table.G(i)


def x_count(table: SequenceTable, n: int, i: int, k: int) -> int:
    """Number of ``m`` in ``[G_n, G_{n+1})`` with summands ``G_i`` and ``G_{i+k}`` adjacent.

    For ``k = 1`` this counts adjacent pairs at distance one, which for
    recurrences with all ``c_i >= 1`` can occur with several copies in play.
    """
    rec = table.recurrence
    if not rec.all_positive:
        raise ZeckError("gap counts need every coefficient c_i >= 1")
    if k < 1 or i < 1 or i > n - k:
        raise ZeckError(f"need k >= 1 and 1 <= i <= n - k (got n={n}, i={i}, k={k})")
    G = lambda j: _G(table, j)  # noqa: E731
    if k >= 2:
        left = G(i + 1) - G(i)
        right = G(n - i - k + 2) - 2 * G(n - i - k + 1) + G(n - i - k)
        return left * right
    return (
        (G(n + 1) - G(n))
        - G(i + 1) * (G(n - i) - G(n - i - 1))
        - G(i) * (G(n - i + 1) - 2 * G(n - i) + G(n - i - 1))
    )


def x_total(table: SequenceTable, n: int, k: int) -> int:
    """``sum_i x_count(n, i, k)``: all gaps of length ``k`` over the interval."""
    return sum(x_count(table, n, i, k) for i in range(1, n - k + 1))


def _histogram_walk(rec: Recurrence, n: int) -> Counter:
    # Visit every legal string; each node returns its number of leaves so a
    # gap fixed at that node is credited once per completion below it.
    auto = LegalityAutomaton(rec)
    caps, steps = auto.caps, auto.table
    hist: Counter = Counter()

    def walk(remaining, state, since):
        if remaining == 0:
            return 1
        leaves = 0
        for d in range(0, caps[state] + 1):
            if d == 0:
                leaves += walk(remaining - 1, steps[state][0], since + 1)
                continue
            below = walk(remaining - 1, steps[state][d], 0)
            if d > 1:
                hist[0] += (d - 1) * below
            hist[since + 1] += below
            leaves += below
        return leaves

    for d in range(1, caps[0] + 1):
        below = walk(n - 1, steps[0][d], 0)
        if d > 1:
            hist[0] += (d - 1) * below
    return hist


def exact_histogram(table: SequenceTable, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> GapHistogram:
    """Gap histogram over ``[G_n, G_{n+1})`` by visiting every decomposition."""
    width = table.width(n)
    if width > cap:
        raise IntervalTooLargeError(f"interval [G_{n}, G_{n + 1}) has {width} elements > cap {cap}")
    hist = _histogram_walk(table.recurrence, n)
    counts = {k: v for k, v in sorted(hist.items()) if v}
    return GapHistogram(n, counts, sum(counts.values()), "enumeration")


def histogram_from(decompositions: Iterable[Decomposition], n: int, source: str = "enumeration") -> GapHistogram:
    hist: Counter = Counter()
    for d in decompositions:
        hist.update(gap_list(d))
    counts = dict(sorted(hist.items()))
    return GapHistogram(n, counts, sum(counts.values()), source)


def automaton_histogram(rec: Recurrence, n: int) -> GapHistogram:
    """Exact gap histogram by counting paths through the legality automaton.

    Works for any recurrence (zero coefficients allowed) and costs
    ``O(n^2 L c)`` big-integer operations, so intervals far too wide to
    enumerate are still exact.
    """
    auto = LegalityAutomaton(rec)
    S = auto.n_states
    caps, steps = auto.caps, auto.table
    # tails[r][j]: legal completions of length r from state j
    tails = [[1] * S]
    for _ in range(n):
        prev = tails[-1]
        tails.append([sum(prev[steps[j][d]] for d in range(caps[j] + 1)) for j in range(S)])
    # before[p][j]: prefixes of length p (leading digit non-zero) in state j
    # ending[p][j]: the same, restricted to a non-zero digit at position p
    before = [[0] * S for _ in range(n + 1)]
    ending = [[0] * S for _ in range(n + 1)]
    for d in range(1, caps[0] + 1):
        before[1][steps[0][d]] += 1
        ending[1][steps[0][d]] += 1
    for p in range(1, n):
        for j in range(S):
            cnt = before[p][j]
            if not cnt:
                continue
            for d in range(caps[j] + 1):
                nxt = steps[j][d]
                before[p + 1][nxt] += cnt
                if d:
                    ending[p + 1][nxt] += cnt
    hist: Counter = Counter()
    # zero gaps: a digit d at position q contributes d - 1 of them
    for q in range(1, n + 1):
        r = n - q
        if q == 1:
            for d in range(2, caps[0] + 1):
                hist[0] += (d - 1) * tails[r][steps[0][d]]
            continue
        for j in range(S):
            cnt = before[q - 1][j]
            if cnt:
                for d in range(2, caps[j] + 1):
                    hist[0] += (d - 1) * cnt * tails[r][steps[j][d]]
    # positive gaps: non-zero digits at p < q with zeros strictly between
    for p in range(1, n):
        for j in range(S):
            cnt = ending[p][j]
            if not cnt:
                continue
            state = j
            for q in range(p + 1, n + 1):
                ways = sum(tails[n - q][steps[state][d]] for d in range(1, caps[state] + 1))
                hist[q - p] += cnt * ways
                state = steps[state][0]
    counts = {k: v for k, v in sorted(hist.items()) if v}
    return GapHistogram(n, counts, sum(counts.values()), "automaton")


def gaps_total(rec: Recurrence, n: int) -> int:
    """``N_gaps(n) = S(n) - (G_{n+1} - G_n)``, exactly."""
    width, s = summand_totals(rec, n)[-1]
    return s - width


def pn_closed_form(table: SequenceTable, n: int, k: int, total_gaps: int | None = None) -> Fraction:
    """Exact ``P_n(k)`` for ``k >= 1`` from the prefix/suffix count formulas."""
    if k < 1:
        raise ZeckError("closed-form counts cover k >= 1; P_n(0) follows by normalization")
    if total_gaps is None:
        total_gaps = gaps_total(table.recurrence, n)
    if k > n - 1:
        return Fraction(0)
    return Fraction(x_total(table, n, k), total_gaps)


def p_limit(spectrum: SpectralData, k: int) -> float:
    """Limiting probability of a gap of length ``k``; ``P(0)`` by normalization."""
    lam, a1, c = spectrum.lambda1, spectrum.a1, spectrum.c_lek
    if k < 0:
        raise ZeckError("gap length must be non-negative")
    if k >= 2:
        return (lam - 1) ** 2 * (a1 / c) * lam ** (-k)
    p1 = (1 / lam) * (1 / c) * (lam * (1 - 2 * a1) + a1)
    if k == 1:
        return p1
    tail = (lam - 1) * (a1 / c) / lam  # sum over k >= 2 of the geometric law
    return 1 - p1 - tail


def alternative_p0(spectrum: SpectralData) -> float:
    """The alternative closed expression for ``P(0)``; kept only as a diagnostic.

    It disagrees with normalization (Fibonacci gives 2.0 instead of 0).
    """
    lam, a1, c = spectrum.lambda1, spectrum.a1, spectrum.c_lek
    return 1 - (a1 / c) * (2 / lam + 1 / a1 - 3)


def base_b_candidates(B: int) -> dict[str, dict[str, float]]:
    """The two competing constant sets for base ``B``: ``P(0)`` and ``P(k) = coef * B^-k``."""
    return {
        "alternative": {"p0": (B - 1) * (B - 2) / B**2, "coef": (B - 1) * (3 * B - 2) / B**2},
        # geometric law with lambda = B, a1 = 1/B, C = (B-1)/2 extended to k = 1
        "derived": {"p0": 1 - 2 / B, "coef": 2 * (B - 1) / B},
    }


@dataclass
class BulkGapTheory:
    spectrum: SpectralData
    k_max: int = 200
    p: dict[int, float] = field(init=False)

    def __post_init__(self):
        self.p = {k: p_limit(self.spectrum, k) for k in range(self.k_max + 1)}

    def prob(self, k: int) -> float:
        return self.p[k] if k in self.p else p_limit(self.spectrum, k)

    def cdf(self, x: int) -> float:
        """``P(gap <= x)``, with the tail above ``x`` summed in closed form."""
        if x < 0:
            return 0.0
        if x < 2:
            return sum(self.prob(k) for k in range(x + 1))
        lam = self.spectrum.lambda1
        above = self.prob(x + 1) / (1 - 1 / lam)
        return 1 - above


def individual_measure(d: Decomposition) -> dict[int, Fraction]:
    """Gap distribution of a single decomposition (mass ``1/(k-1)`` per gap)."""
    gaps = gap_list(d)
    if not gaps:
        raise ZeckError("measure undefined for a single-summand decomposition")
    total = len(gaps)
    return {g: Fraction(c, total) for g, c in sorted(Counter(gaps).items())}


def kolmogorov_distance(measure: Mapping[int, float], theory: BulkGapTheory) -> float:
    """Sup distance between the CDFs of a finitely supported measure and the limit law.

    Both CDFs are step functions on the integers, so the supremum is attained
    at an integer; beyond the largest atom the empirical CDF is 1 and the gap
    only shrinks.
    """
    if not measure:
        raise ZeckError("empty measure")
    top = max(measure)
    acc = 0.0
    worst = 0.0
    for x in range(0, top + 1):
        acc += float(measure.get(x, 0))
        worst = max(worst, abs(acc - theory.cdf(x)))
    return worst


def concentration_statistic(samples: list[Decomposition], theory: BulkGapTheory) -> dict:
    """Kolmogorov distances of each sample's gap measure to the limit, with quartiles."""
    if not samples:
        raise ZeckError("no samples")
    dists = [kolmogorov_distance(individual_measure(d), theory) for d in samples]
    q1, med, q3 = (float(v) for v in np.quantile(dists, [0.25, 0.5, 0.75]))
    return {
        "distances": dists,
        "median": statistics.median(dists),
        "q1": q1,
        "q3": q3,
        "count": len(dists),
    }
