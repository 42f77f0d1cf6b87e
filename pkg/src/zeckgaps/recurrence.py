"""Positive linear recurrences and their exact sequence values.

A recurrence ``G_{n+1} = c_1 G_n + ... + c_L G_{n+1-L}`` is described by its
coefficient list ``(c_1, ..., c_L)``.  Initial terms are ``G_1 = 1`` and
``G_{n+1} = c_1 G_n + ... + c_n G_1 + 1`` for ``1 <= n < L``, which makes
``[1, 1]`` produce 1, 2, 3, 5, ... and ``[B]`` produce the powers of ``B``.
All values are exact integers and indexing is 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import gmpy2

from .errors import RecurrenceError, TableTooShortError


@dataclass(frozen=True)
class Recurrence:
    coeffs: tuple[int, ...]

    @property
    def L(self) -> int:
        return len(self.coeffs)

    @cached_property
    def sparse(self) -> tuple[tuple[int, int], ...]:
        """Pairs ``(j, c_{j+1})`` for the non-zero coefficients, ``j`` ascending from 0."""
        return tuple((j, c) for j, c in enumerate(self.coeffs) if c)

    @property
    def all_positive(self) -> bool:
        return all(c >= 1 for c in self.coeffs)

    @property
    def j_last(self) -> int:
        """Offset ``j_L`` of the last non-zero coefficient (equals ``L - 1``)."""
        return self.sparse[-1][0]

    @property
    def gaps(self) -> tuple[int, ...]:
        """Recurrence gaps ``g_0 = 1, g_i = j_{i+1} - j_i``."""
        js = [j for j, _ in self.sparse]
        return (1,) + tuple(b - a for a, b in zip(js, js[1:]))

    def __str__(self) -> str:
        return ",".join(map(str, self.coeffs))

    @classmethod
    def from_sparse(cls, pairs: Sequence[tuple[int, int]]) -> "Recurrence":
        size = max(j for j, _ in pairs) + 1
        dense = [0] * size
        for j, c in pairs:
            dense[j] = c
        return validate(dense)


def validate(coeffs: Sequence[int]) -> Recurrence:
    """Check the positive-linear-recurrence conditions and build a `Recurrence`."""
    coeffs = tuple(int(c) for c in coeffs)
    if not coeffs:
        raise RecurrenceError("empty coefficient list")
    if any(c < 0 for c in coeffs):
        raise RecurrenceError("coefficients must be non-negative")
    if coeffs[0] == 0:
        raise RecurrenceError("c_1 must be positive")
    if coeffs[-1] == 0:
        raise RecurrenceError("c_L must be positive")
    if coeffs == (1,):
        # G_n = 1 for all n: not strictly increasing, no decompositions exist
        raise RecurrenceError("the recurrence [1] is degenerate (constant sequence)")
    return Recurrence(coeffs)


def parse(text: str) -> Recurrence:
    """Parse the comma-separated external form, e.g. ``"1,0,1"``."""
    try:
        parts = [int(p) for p in text.replace(" ", "").split(",") if p != ""]
    except ValueError:
        raise RecurrenceError(f"cannot parse coefficient list {text!r}") from None
    return validate(parts)


def initial_terms(rec: Recurrence, count: int) -> list[int]:
    """First ``count`` sequence values ``[G_1, ..., G_count]``."""
    c, L = rec.coeffs, rec.L
    values = [1]
    while len(values) < count:
        n = len(values)
        if n < L:
            nxt = sum(c[i] * values[n - 1 - i] for i in range(n)) + 1
        else:
            nxt = sum(c[i] * values[n - 1 - i] for i in range(L))
        values.append(nxt)
    return values[:count]


class SequenceTable:
    """Materialized values ``G_1 ... G_N`` of a recurrence.

    Instances never change after construction; `extend` returns a new table.
    """

    __slots__ = ("recurrence", "values")

    def __init__(self, recurrence: Recurrence, values: Sequence[int] = ()):
        self.recurrence = recurrence
        self.values = tuple(values) if values else (1,)

    @classmethod
    def build(cls, recurrence: Recurrence, N: int) -> "SequenceTable":
        return cls(recurrence).extend(N)

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"SequenceTable([{self.recurrence}], N={len(self)})"

    def extend(self, N: int) -> "SequenceTable":
        if N <= len(self.values):
            return self
        rec = self.recurrence
        values = list(self.values)
        if len(values) < rec.L:
            values = initial_terms(rec, min(N, rec.L))
        c = rec.coeffs
        L = rec.L
        while len(values) < N:
            values.append(sum(c[i] * values[-1 - i] for i in range(L)))
        return SequenceTable(rec, values)

    def G(self, n: int) -> int:
        if n < 1:
            raise IndexError(f"sequence index {n} < 1")
        if n > len(self.values):
            raise TableTooShortError(n, len(self.values))
        return self.values[n - 1]

    __getitem__ = G

    def interval(self, n: int) -> tuple[int, int]:
        """Bounds of the half-open interval ``[G_n, G_{n+1})``."""
        return self.G(n), self.G(n + 1)

    def width(self, n: int) -> int:
        lo, hi = self.interval(n)
        return hi - lo

    def index_of(self, m: int) -> int:
        """The ``n`` with ``G_n <= m < G_{n+1}``."""
        if m < 1:
            raise ValueError("m must be positive")
        lo, hi = 0, len(self.values) - 1
        if m >= self.values[-1]:
            raise TableTooShortError(_needed_length(self.recurrence, m), len(self.values))
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.values[mid] <= m:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1


def _needed_length(rec: Recurrence, m: int) -> int:
    values = initial_terms(rec, rec.L)
    c = rec.coeffs
    while values[-1] <= m:
        if len(values) < rec.L:
            values = initial_terms(rec, len(values) + 1)
        else:
            values.append(sum(c[i] * values[-1 - i] for i in range(rec.L)))
    return len(values)


def table_for(rec: Recurrence, m: int) -> SequenceTable:
    """Smallest table that contains the interval holding ``m``."""
    return SequenceTable.build(rec, _needed_length(rec, m))


# -- large-index access without materializing the table ---------------------

def _matmul(a, b):
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def window(rec: Recurrence, k: int) -> list:
    """``[G_k, G_{k-1}, ..., G_{k-L+1}]`` as gmpy2 integers, via companion-matrix powers."""
    L = rec.L
    base = [gmpy2.mpz(v) for v in initial_terms(rec, L)]
    if k < L:
        return [base[i - 1] if i >= 1 else gmpy2.mpz(0) for i in range(k, k - L, -1)]
    companion = [[gmpy2.mpz(c) for c in rec.coeffs]]
    for i in range(L - 1):
        companion.append([gmpy2.mpz(1 if j == i else 0) for j in range(L)])
    result = [[gmpy2.mpz(1 if i == j else 0) for j in range(L)] for i in range(L)]
    e = k - L
    power = companion
    while e:
        if e & 1:
            result = _matmul(result, power)
        e >>= 1
        if e:
            power = _matmul(power, power)
    vec = [[v] for v in reversed(base[:L])]
    return [row[0] for row in _matmul(result, vec)]


def interval_bounds(rec: Recurrence, n: int) -> tuple:
    """``(G_n, G_{n+1})`` without building the table up to ``n``."""
    if rec.L > 1:
        top = window(rec, n + 1)
        return top[1], top[0]
    return window(rec, n)[0], window(rec, n + 1)[0]


def descending(rec: Recurrence, top: int) -> Iterator[tuple[int, "gmpy2.mpz"]]:
    """Yield ``(k, G_k)`` for ``k = top, top-1, ..., 1``.

    Only ``L`` values are held at a time: the walk starts from a
    matrix-power window at ``top + 1`` and runs the recurrence backwards,
    so memory stays ``O(L)`` big integers even for ``top ~ 10**7``.
    """
    L = rec.L
    c = [gmpy2.mpz(x) for x in rec.coeffs]
    cutoff = 2 * L + 1
    base = [gmpy2.mpz(v) for v in initial_terms(rec, cutoff + 1)]
    if top <= cutoff:
        for k in range(top, 0, -1):
            yield k, base[k - 1]
        return
    win = window(rec, top + 1)
    for j in range(1, L):
        yield top + 1 - j, win[j]
    low = top + 2 - L
    cL = c[-1]
    while low - 1 > cutoff:
        acc = win[0]
        for i in range(1, L):
            acc = acc - c[i - 1] * win[i]
        new = acc // cL if cL != 1 else acc
        win = win[1:] + [new]
        low -= 1
        yield low, new
    for k in range(low - 1, 0, -1):
        yield k, base[k - 1]
