"""Seeded Monte Carlo experiments on uniformly sampled integers of ``[G_n, G_{n+1})``.

At ``n`` around ``10**6`` the whole sequence table would need tens of
gigabytes, so samples are decomposed together in one descending sweep that
regenerates ``G_k`` from the top with the recurrence run backwards.  Every
sample draws from its own stream derived from ``(seed, index)``, so results do
not depend on how samples are split among workers.
"""
from __future__ import annotations

import math
import os
import statistics
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bulkgaps import BulkGapTheory, concentration_statistic, p_limit
from .errors import ZeckError
from .longestgap import build_polynomials, mean_var
from .recurrence import Recurrence, SequenceTable, descending, interval_bounds, parse
from .spectral import spectral_data
from .zeck import Decomposition, LegalityAutomaton

KINDS = ("longest", "bulk", "summand")


def sample_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sample ``index`` under ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_offset(width: int, rng: np.random.Generator) -> int:
    """Uniform integer in ``[0, width)`` by rejection on ``bit_length(width)``-bit draws."""
    if width < 1:
        raise ZeckError("empty range")
    bits = int(width).bit_length()
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    while True:
        value = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if value < width:
            return value


def sample_uniform(table: SequenceTable, n: int, rng: np.random.Generator) -> int:
    lo, hi = table.interval(n)
    return lo + sample_offset(hi - lo, rng)


def draw_samples(rec: Recurrence, n: int, seed: int, indices) -> list[int]:
    lo, hi = interval_bounds(rec, n)
    lo, width = int(lo), int(hi - lo)
    return [lo + sample_offset(width, sample_stream(seed, i)) for i in indices]


@dataclass
class SampleStats:
    index: int
    summands: int
    longest: int
    gaps: dict[int, int] | None = None
    terms: tuple | None = None


def sweep_decompose(
    rec: Recurrence,
    n: int,
    values: list[int],
    indices=None,
    keep_gaps: bool = False,
    keep_terms: bool = False,
) -> list[SampleStats]:
    """Decompose many ``m`` from ``[G_n, G_{n+1})`` in a single pass over ``k = n .. 1``.

    Same greedy descent as `zeck.decompose`, but ``G_k`` values are streamed
    and only per-sample summaries are kept.
    """
    import gmpy2

    auto = LegalityAutomaton(rec)
    caps, steps = auto.caps, auto.table
    count = len(values)
    indices = list(range(count)) if indices is None else list(indices)
    rem = [gmpy2.mpz(v) for v in values]
    state = [0] * count
    last = [0] * count  # index of the previous summand, 0 before the first
    longest = [0] * count
    summands = [0] * count
    gaps = [Counter() for _ in range(count)] if keep_gaps else None
    terms = [[] for _ in range(count)] if keep_terms else None
    live = list(range(count))
    for k, g in descending(rec, n):
        still = []
        for s in live:
            r = rem[s]
            st = state[s]
            if r >= g:
                cap = caps[st]
                d = 1 if cap == 1 else min(cap, int(r // g))
                rem[s] = r - d * g if d > 1 else r - g
                prev = last[s]
                if prev:
                    gap = prev - k
                    if gap > longest[s]:
                        longest[s] = gap
                    if keep_gaps:
                        gaps[s][gap] += 1
                if keep_gaps and d > 1:
                    gaps[s][0] += d - 1
                if keep_terms:
                    terms[s].append((k, d))
                last[s] = k
                summands[s] += d
                state[s] = steps[st][d]
            else:
                state[s] = steps[st][0]
            if rem[s]:
                still.append(s)
        live = still
        if not live:
            break
    if any(rem):
        raise ZeckError("sweep left a non-zero remainder; value outside the interval?")
    out = []
    for s in range(count):
        out.append(
            SampleStats(
                indices[s],
                summands[s],
                longest[s],
                dict(sorted(gaps[s].items())) if keep_gaps else None,
                tuple(terms[s]) if keep_terms else None,
            )
        )
    return out


@dataclass
class ExperimentConfig:
    recurrence: str
    n: int
    samples: int
    seed: int
    workers: int = 1
    kind: str = "longest"
    keep_samples: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise ZeckError("samples must be at least 1")
        if self.n < 1:
            raise ZeckError("n must be positive")
        if self.kind not in KINDS:
            raise ZeckError(f"kind must be one of {KINDS}")
        if self.workers < 1:
            raise ZeckError("workers must be at least 1")
        parse(self.recurrence)

    @property
    def rec(self) -> Recurrence:
        return parse(self.recurrence)


@dataclass
class ExperimentReport:
    config: dict
    empirical_mean: float
    empirical_sd: float
    theory_mean: float
    theory_sd: float
    z_score: float
    per_sample: list | None = None
    extra: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_json(self, include_timings: bool = False) -> dict:
        out = asdict(self)
        if not include_timings:
            out.pop("timings")
        if out["per_sample"] is None:
            out.pop("per_sample")
        return out


def _chunk(indices: list[int], parts: int) -> list[list[int]]:
    size = math.ceil(len(indices) / parts)
    return [indices[i:i + size] for i in range(0, len(indices), size)]


def _worker(args) -> list[SampleStats]:
    coeffs, n, seed, idx, keep_gaps, keep_terms = args
    rec = Recurrence(tuple(coeffs))
    values = draw_samples(rec, n, seed, idx)
    return sweep_decompose(rec, n, values, idx, keep_gaps, keep_terms)


def collect(cfg: ExperimentConfig, keep_gaps: bool = False, keep_terms: bool = False) -> list[SampleStats]:
    """Per-sample statistics ordered by sample index, for any worker count."""
    rec = cfg.rec
    indices = list(range(cfg.samples))
    jobs = [(rec.coeffs, cfg.n, cfg.seed, part, keep_gaps, keep_terms)
            for part in _chunk(indices, min(cfg.workers, cfg.samples))]
    if len(jobs) == 1:
        results = _worker(jobs[0])
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = [s for part in pool.map(_worker, jobs) for s in part]
    return sorted(results, key=lambda s: s.index)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("ZECKGAPS_WORKERS", "1")))
    except ValueError:
        return 1


def _mean_sd(values) -> tuple[float, float]:
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, sd


def _z(mean: float, theory: float, sd: float, count: int) -> float:
    se = sd / math.sqrt(count)
    return (mean - theory) / se if se > 0 else 0.0


def run_longest_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    stats = collect(cfg)
    t1 = time.perf_counter()
    poly = build_polynomials(cfg.rec, strict=False)
    mu, var = mean_var(poly, cfg.n, "closed-form")
    values = [s.longest for s in stats]
    mean, sd = _mean_sd(values)
    return ExperimentReport(
        asdict(cfg), mean, sd, mu, math.sqrt(var), _z(mean, mu, math.sqrt(var), len(values)),
        values if cfg.keep_samples else None,
        {"K": poly.k_const, "lambda1": poly.lambda1, "standard_error": math.sqrt(var / len(values))},
        {"sampling_and_decomposition_s": t1 - t0, "total_s": time.perf_counter() - t0},
    )


def run_bulk_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Pooled gap frequencies against the limit law, plus per-sample concentration."""
    rec = cfg.rec
    if not rec.all_positive:
        raise ZeckError("the limiting bulk law needs every coefficient c_i >= 1")
    t0 = time.perf_counter()
    stats = collect(cfg, keep_terms=True)
    t1 = time.perf_counter()
    spectrum = spectral_data(rec)
    theory = BulkGapTheory(spectrum)
    pooled: Counter = Counter()
    decomps = []
    for s in stats:
        d = Decomposition(cfg.n, s.terms)
        decomps.append(d)
        for idx in range(len(s.terms)):
            pooled[0] += s.terms[idx][1] - 1
            if idx + 1 < len(s.terms):
                pooled[s.terms[idx][0] - s.terms[idx + 1][0]] += 1
    total = sum(pooled.values())
    if total == 0:
        raise ZeckError("no gaps observed; increase n")
    p_hat = {k: pooled[k] / total for k in sorted(pooled)}
    usable = [d for d in decomps if d.k >= 2]
    conc = concentration_statistic(usable, theory) if usable else None
    if conc is not None and not cfg.keep_samples:
        conc = {k: v for k, v in conc.items() if k != "distances"}
    theory_mean = sum(k * theory.prob(k) for k in range(1, theory.k_max + 1))
    theory_sd = math.sqrt(sum(k * k * theory.prob(k) for k in range(theory.k_max + 1)) - theory_mean**2)
    pooled_mean = sum(k * v for k, v in pooled.items()) / total
    pooled_sd = math.sqrt(sum(k * k * v for k, v in pooled.items()) / total - pooled_mean**2)
    top = max(p_hat)
    return ExperimentReport(
        asdict(cfg), pooled_mean, pooled_sd, theory_mean, theory_sd,
        _z(pooled_mean, theory_mean, theory_sd, total),
        [s.summands for s in stats] if cfg.keep_samples else None,
        {
            "pooled_gaps": total,
            "p_empirical": {str(k): v for k, v in p_hat.items()},
            "p_theory": {str(k): p_limit(spectrum, k) for k in range(top + 1)},
            "concentration": conc,
        },
        {"sampling_and_decomposition_s": t1 - t0, "total_s": time.perf_counter() - t0},
    )


def run_summand_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Summand counts against ``C_Lek n + d``; the standard error uses the sample spread."""
    t0 = time.perf_counter()
    stats = collect(cfg)
    spectrum = spectral_data(cfg.rec)
    values = [s.summands for s in stats]
    mean, sd = _mean_sd(values)
    theory = spectrum.c_lek * cfg.n + spectrum.d_intercept
    return ExperimentReport(
        asdict(cfg), mean, sd, theory, sd, _z(mean, theory, sd, len(values)),
        values if cfg.keep_samples else None,
        {"c_lek": spectrum.c_lek, "d": spectrum.d_intercept, "variance": sd**2,
         "relative_error": abs(mean - theory) / theory},
        {"total_s": time.perf_counter() - t0},
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    return {
        "longest": run_longest_experiment,
        "bulk": run_bulk_experiment,
        "summand": run_summand_experiment,
    }[cfg.kind](cfg)
