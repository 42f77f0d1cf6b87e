"""Legal (generalized Zeckendorf) decompositions and their gaps."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import IntervalTooLargeError, ZeckError
from .recurrence import Recurrence, SequenceTable

DEFAULT_ENUMERATION_CAP = 10**7


class LegalityAutomaton:
    """Deterministic reader for legal coefficient strings, most significant first.

    State ``j`` means the last ``j`` digits matched ``c_1 ... c_j`` inside the
    current block.  A digit equal to ``c_{j+1}`` extends the block (allowed only
    while ``j + 1 < L``); a smaller digit closes it and returns to state 0.
    Every state is accepting: stopping in state ``j`` leaves the terminal block
    ``c_1 ... c_j``.
    """

    def __init__(self, rec: Recurrence):
        self.rec = rec
        c, L = rec.coeffs, rec.L
        self.n_states = L
        self.caps = tuple(c[j] if j + 1 < L else c[j] - 1 for j in range(L))
        self.table = tuple(
            tuple((j + 1) if (d == c[j] and j + 1 < L) else 0 for d in range(self.caps[j] + 1))
            for j in range(L)
        )

    def cap(self, state: int) -> int:
        return self.caps[state]

    def step(self, state: int, digit: int) -> int | None:
        if digit < 0 or digit > self.caps[state]:
            return None
        return self.table[state][digit]

    def accepts(self, digits: Sequence[int]) -> bool:
        state = 0
        for d in digits:
            state = self.step(state, d)
            if state is None:
                return False
        return True

    def zero_walk(self, state: int, zeros: int) -> int:
        for _ in range(zeros):
            state = self.table[state][0]
        return state


@dataclass(frozen=True)
class Decomposition:
    """A legal decomposition ``m = sum a_j G_{r_j}`` of some ``m`` in ``[G_n, G_{n+1})``.

    ``terms`` holds ``(index, multiplicity)`` pairs with strictly decreasing
    indices; the first index is ``n``.
    """

    n: int
    terms: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.terms:
            raise ZeckError("a decomposition needs at least one summand")
        if self.terms[0][0] != self.n:
            raise ZeckError("leading summand must be G_n")
        prev = None
        for idx, mult in self.terms:
            if mult < 1 or idx < 1 or (prev is not None and idx >= prev):
                raise ZeckError(f"malformed terms {self.terms}")
            prev = idx

    @property
    def k(self) -> int:
        """Number of summands counted with multiplicity."""
        return sum(a for _, a in self.terms)

    def digits(self) -> list[int]:
        """Dense coefficients ``a_1 ... a_n`` (``a_1`` multiplies ``G_n``)."""
        out = [0] * self.n
        for idx, mult in self.terms:
            out[self.n - idx] = mult
        return out

    @classmethod
    def from_digits(cls, digits: Sequence[int]) -> "Decomposition":
        n = len(digits)
        terms = tuple((n - p, a) for p, a in enumerate(digits) if a)
        return cls(n, terms)

    def to_json(self) -> list[list[int]]:
        return [[i, a] for i, a in self.terms]

    def pretty(self) -> str:
        parts = [f"G_{i}" if a == 1 else f"{a}*G_{i}" for i, a in self.terms]
        return " + ".join(parts)


@lru_cache(maxsize=64)
def automaton_for(rec: Recurrence) -> LegalityAutomaton:
    return LegalityAutomaton(rec)


def is_legal(rec: Recurrence, coeffs: Sequence[int]) -> bool:
    """Check a dense coefficient list against the two legality conditions.

    Parses the list as blocks ``c_1 .. c_{s-1}, a_s`` (``a_s < c_s``), each
    followed by zeros, possibly ending in a terminal block equal to a proper
    prefix ``c_1 .. c_m`` with ``m < L``.
    """
    a = list(coeffs)
    if not a or a[0] <= 0:
        raise ZeckError("coefficient list must start with a positive entry")
    if any(x < 0 for x in a):
        raise ZeckError("coefficients must be non-negative")
    c, L = rec.coeffs, rec.L
    pos, size = 0, len(a)
    while pos < size:
        rest = size - pos
        s = 0
        while s < min(L, rest) and a[pos + s] == c[s]:
            s += 1
        if s == rest and rest < L:
            return True  # terminal block c_1 .. c_rest
        if s == L:
            return False  # a full copy of c_1 .. c_L is never legal
        if a[pos + s] > c[s]:
            return False
        pos += s + 1
        while pos < size and a[pos] == 0:
            pos += 1
    return True


def decompose(table: SequenceTable, m: int) -> Decomposition:
    """Legal decomposition of ``m`` by greedy descent through the automaton.

    Plain floor-greedy is wrong for recurrences like ``[2, 4]``; each step
    here is capped by the digit the automaton allows in its current state.
    """
    if m < 1:
        raise ZeckError("m must be a positive integer")
    n = table.index_of(m)
    auto = automaton_for(table.recurrence)
    values = table.values
    caps, steps = auto.caps, auto.table
    state = 0
    rem = m
    terms = []
    for idx in range(n, 0, -1):
        g = values[idx - 1]
        if rem >= g:
            d = rem // g
            cap = caps[state]
            if d > cap:
                d = cap
            if d:
                rem -= d * g
                terms.append((idx, d))
        else:
            d = 0
        state = steps[state][d]
    if rem:
        raise ZeckError(f"greedy descent left remainder {rem} for m={m}")
    return Decomposition(n, tuple(terms))


def reconstruct(table: SequenceTable, d: Decomposition) -> int:
    return sum(a * table.G(i) for i, a in d.terms)


def gap_list(d: Decomposition, include_trailing: bool = False) -> list[int]:
    """Gaps between adjacent summands, top-down, zero gaps counted with multiplicity.

    A summand used ``a`` times contributes ``a - 1`` gaps of length 0.  The
    distance from the smallest summand down to index 0 is left out unless
    ``include_trailing`` is set.
    """
    out = []
    terms = d.terms
    for t, (idx, a) in enumerate(terms):
        out.extend([0] * (a - 1))
        if t + 1 < len(terms):
            out.append(idx - terms[t + 1][0])
    if include_trailing:
        out.append(terms[-1][0])
    return out


def gap_counts(d: Decomposition, include_trailing: bool = False) -> Counter:
    return Counter(gap_list(d, include_trailing))


def longest_gap(d: Decomposition, include_trailing: bool = False) -> int:
    """Largest gap; 0 when there is none (a single summand)."""
    best = 0
    terms = d.terms
    for t in range(len(terms) - 1):
        g = terms[t][0] - terms[t + 1][0]
        if g > best:
            best = g
    if include_trailing and terms[-1][0] > best:
        best = terms[-1][0]
    return best


def legal_strings(rec: Recurrence, n: int) -> Iterator[tuple[int, ...]]:
    """All legal digit strings of length ``n`` with a non-zero leading digit.

    Strings come out in lexicographic order, which is ascending numeric order
    of the represented integers.
    """
    auto = LegalityAutomaton(rec)
    caps, steps = auto.caps, auto.table
    prefix = [0] * n

    def walk(pos, state):
        if pos == n:
            yield tuple(prefix)
            return
        for d in range(1 if pos == 0 else 0, caps[state] + 1):
            prefix[pos] = d
            yield from walk(pos + 1, steps[state][d])

    if n >= 1:
        yield from walk(0, 0)


def enumerate_interval(
    table: SequenceTable, n: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[Decomposition]:
    """Every legal decomposition of length ``n`` in ascending order of value.

    Built from the automaton alone, without calling `decompose`, so it can
    serve as an independent oracle for it.
    """
    width = table.width(n)
    if width > cap:
        raise IntervalTooLargeError(f"interval [G_{n}, G_{n + 1}) has {width} elements > cap {cap}")
    for s in legal_strings(table.recurrence, n):
        yield Decomposition.from_digits(s)
