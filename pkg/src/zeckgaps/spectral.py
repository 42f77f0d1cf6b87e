"""Characteristic roots, the leading Binet coefficient and the mean summand count."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import TableTooShortError, ZeckError
from .recurrence import Recurrence, SequenceTable
from .zeck import LegalityAutomaton

ROOT_TOL = 1e-12


def char_poly(rec: Recurrence) -> list[int]:
    """Coefficients of ``x^L - c_1 x^{L-1} - ... - c_L``, highest degree first."""
    return [1] + [-c for c in rec.coeffs]


def _polish(coeffs: list[int], z: complex, steps: int = 8) -> complex:
    with mpmath.workdps(40):
        x = mpmath.mpc(z)
        for _ in range(steps):
            p, dp = mpmath.polyval(coeffs, x, derivative=True)
            if dp == 0:
                break
            step = p / dp
            x -= step
            if abs(step) < mpmath.mpf(10) ** -35 * max(1, abs(x)):
                break
        return complex(x)


def _relative_residual(coeffs: list[int], z: complex) -> float:
    p = np.polyval(np.array(coeffs, dtype=complex), z)
    scale = sum(abs(c) * abs(z) ** (len(coeffs) - 1 - i) for i, c in enumerate(coeffs))
    return abs(p) / scale


def char_roots(rec: Recurrence) -> list[complex]:
    """All ``L`` characteristic roots, dominant root first, then by decreasing modulus."""
    coeffs = char_poly(rec)
    raw = np.roots(np.array(coeffs, dtype=float)) if rec.L > 1 else np.array([float(rec.coeffs[0])])
    roots = [_polish(coeffs, complex(z)) for z in raw]
    for z in roots:
        res = _relative_residual(coeffs, z)
        if res > ROOT_TOL:
            raise ZeckError(f"root {z} did not converge (relative residual {res:.3e})")
    roots.sort(key=lambda z: (-abs(z), -z.real))
    return roots


def dominant_root(rec: Recurrence, dps: int = 50) -> mpmath.mpf:
    """The positive root ``lambda_1`` to ``dps`` digits."""
    coeffs = char_poly(rec)
    seed = max(char_roots(rec), key=lambda z: z.real).real
    with mpmath.workdps(dps + 10):
        lam = mpmath.findroot(lambda x: mpmath.polyval(coeffs, x), mpmath.mpf(seed))
    return +lam


@dataclass
class SpectralData:
    lambda1: float
    roots: list[complex]
    lambda2_abs: float
    a1: float
    c_lek: float
    d_intercept: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda2_abs": self.lambda2_abs,
            "roots": [[z.real, z.imag] for z in self.roots],
            "a1": self.a1,
            "c_lek": self.c_lek,
            "d": self.d_intercept,
            "diagnostics": self.diagnostics,
        }


def binet_a1(
    table: SequenceTable,
    lambda1=None,
    depths: tuple[int, int] = (150, 200),
    tol: float = 1e-12,
) -> tuple[float, dict]:
    """Limit of ``G_n / lambda_1^n``, certified by agreement at two depths."""
    rec = table.recurrence
    lo, hi = depths
    if len(table) < hi:
        raise TableTooShortError(hi, len(table))
    # floats are not precise enough for lambda^200, so recompute unless given an mpf
    lam = lambda1 if isinstance(lambda1, mpmath.mpf) else dominant_root(rec, 55)
    with mpmath.workdps(60):
        a_lo = mpmath.mpf(table.G(lo)) / lam**lo
        a_hi = mpmath.mpf(table.G(hi)) / lam**hi
        diff = float(abs(a_hi - a_lo))
    diag = {"depths": [lo, hi], "successive_difference": diff}
    if diff > tol * max(1.0, float(a_hi)):
        raise ZeckError(f"a1 not converged at depth {hi}: successive difference {diff:.3e}")
    return float(a_hi), diag


def summand_totals(rec: Recurrence, n_max: int) -> list[tuple[int, int]]:
    """Exact ``(G_{n+1} - G_n, S(n))`` for ``n = 1 .. n_max``.

    ``S(n)`` is the total number of summands, with multiplicity, over all
    ``m`` in ``[G_n, G_{n+1})``.  The dynamic program tracks, for every
    automaton state and tail length, how many legal tails there are and how
    many summands they carry in total.
    """
    auto = LegalityAutomaton(rec)
    states = range(auto.n_states)
    count = [1] * auto.n_states  # tails of length 0
    total = [0] * auto.n_states
    out = []
    for _ in range(n_max):
        # leading digit from state 0, followed by a tail of the current length
        w = s = 0
        for d in range(1, auto.caps[0] + 1):
            nxt = auto.table[0][d]
            w += count[nxt]
            s += total[nxt] + d * count[nxt]
        out.append((w, s))
        new_count, new_total = [], []
        for j in states:
            cj = tj = 0
            for d in range(auto.caps[j] + 1):
                nxt = auto.table[j][d]
                cj += count[nxt]
                tj += total[nxt] + d * count[nxt]
            new_count.append(cj)
            new_total.append(tj)
        count, total = new_count, new_total
    return out


def mean_summands(rec: Recurrence, n: int) -> Fraction:
    w, s = summand_totals(rec, n)[-1]
    return Fraction(s, w)


def lekkerkerker_constants(
    source: SequenceTable | Recurrence, n_lo: int = 40, n_hi: int = 60
) -> tuple[float, float, dict]:
    """Slope and intercept of the exact mean summand count over ``n_lo .. n_hi``."""
    rec = source.recurrence if isinstance(source, SequenceTable) else source
    if n_hi - n_lo < 4:
        raise ZeckError("need n_hi - n_lo >= 4 for the line fit")
    totals = summand_totals(rec, n_hi)
    ns = np.arange(n_lo, n_hi + 1, dtype=float)
    means = np.array([float(Fraction(s, w)) for w, s in totals[n_lo - 1:]])
    slope, intercept = np.polyfit(ns, means, 1)
    residual = float(np.max(np.abs(slope * ns + intercept - means)))
    slopes = np.diff(means)
    diag = {
        "n_range": [n_lo, n_hi],
        "fit_residual": residual,
        "fit_residual_ok": residual < 1e-4 * float(means[-1]),
        "last_slope_change": float(abs(slopes[-1] - slopes[-2])),
    }
    return float(slope), float(intercept), diag


def spectral_data(rec: Recurrence, n_lo: int = 40, n_hi: int = 60) -> SpectralData:
    roots = char_roots(rec)
    lam = dominant_root(rec)
    others = [abs(z) for z in roots[1:]]
    lambda2 = max(others) if others else 0.0
    if not abs(roots[0].imag) < 1e-12 or roots[0].real <= 1 or float(lam) - lambda2 <= 1e-9:
        raise ZeckError("characteristic polynomial has no simple dominant root > 1")
    depth = 200
    table = SequenceTable.build(rec, depth)
    a1, a1_diag = binet_a1(table, lam)
    c_lek, d, lek_diag = lekkerkerker_constants(rec, n_lo, n_hi)
    expanded = np.poly(np.array(roots))
    diag = {
        "root_residuals": [_relative_residual(char_poly(rec), z) for z in roots],
        "poly_reconstruction_error": float(np.max(np.abs(expanded - np.array(char_poly(rec))))),
        "a1": a1_diag,
        "lekkerkerker": lek_diag,
    }
    return SpectralData(float(lam), roots, float(lambda2), a1, c_lek, d, diag)


__all__ = [
    "SpectralData",
    "binet_a1",
    "char_poly",
    "char_roots",
    "dominant_root",
    "lekkerkerker_constants",
    "mean_summands",
    "spectral_data",
    "summand_totals",
]
