"""Mapping search over tilings, loop orderings and refresh styles.

A search space is the cross product of per-dimension tiling choices
(ordered factor tuples across the chosen memory levels), loop-ordering
templates and refresh styles. Candidates are screened against the
hardware (PE count, buffer capacities) and scored with the analytic
model under one of three objectives: energy, latency or their product.

Set ACCEL_PREDICT_THREADS to evaluate candidates on a thread pool; the
ranking is merged in candidate order, so results do not depend on the
worker count.
"""

from __future__ import annotations

import heapq
import itertools
import os
import random
from collections import Counter
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .dsl import render
from .errors import ConfigError, MappingError
from .loopnest import (
    LoopNest,
    RefreshLocations,
    build_nest,
    canonical_refresh,
    validate_nest,
)
from .model import (
    DIMS,
    HardwareConfig,
    LayerShape,
    LEVELS_OUTER_FIRST,
    MemLevel,
    Options,
)
from .predictor import PredictionReport, predict_layer

OBJECTIVES = ("energy", "latency", "edp")
STRATEGIES = ("exhaustive", "random", "beam")

_FACTOR_ENUM_CAP = 2_000_000


@dataclass(frozen=True)
class SearchSpace:
    """What the explorer is allowed to try.

    levels lists the memories each dimension may tile across, outermost
    first. orderings holds loop-order templates, each either one dim
    permutation applied at every level or a per-level mapping. Factors
    larger than 1 can be restricted per dim with allowed_factors;
    allow_nondivisor admits padded covers (kept minimal, so no factor
    can shrink without losing coverage).
    """

    hw: HardwareConfig
    levels: tuple[MemLevel, ...] = LEVELS_OUTER_FIRST
    orderings: tuple = ((),)
    refresh_styles: tuple[str, ...] = ("weight_stationary", "output_stationary")
    allowed_factors: Mapping[str, Sequence[int]] | None = None
    allow_nondivisor: bool = False
    options: Options = Options()
    exhaustive_cap: int = 500_000

    def __post_init__(self):
        if not self.levels:
            raise ConfigError("search space needs at least one memory level")
        if len(set(self.levels)) != len(self.levels):
            raise ConfigError("search space levels must be distinct")
        if not self.refresh_styles:
            raise ConfigError("search space needs at least one refresh style")
        if not self.orderings:
            raise ConfigError("search space needs at least one ordering")


def _normalize_ordering(template) -> dict[MemLevel, tuple[str, ...]]:
    if isinstance(template, Mapping):
        return {mem: tuple(order) for mem, order in template.items()}
    order = tuple(template)
    if not order:
        return {}
    return {mem: order for mem in LEVELS_OUTER_FIRST}


def _divisor_tilings(value: int, k: int, allowed) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def rec(remaining: int, prefix: tuple[int, ...]):
        if len(prefix) == k - 1:
            if remaining == 1 or allowed is None or remaining in allowed:
                out.append(prefix + (remaining,))
            return
        for b in range(1, remaining + 1):
            if remaining % b:
                continue
            if b > 1 and allowed is not None and b not in allowed:
                continue
            rec(remaining // b, prefix + (b,))

    rec(value, ())
    return out


def _padded_tilings(value: int, k: int, allowed) -> list[tuple[int, ...]]:
    """Minimal covers: product >= value and no factor can be reduced."""
    out: list[tuple[int, ...]] = []
    nodes = 0

    def minimal(tup: tuple[int, ...]) -> bool:
        product = 1
        for b in tup:
            product *= b
        if product < value:
            return False
        for b in tup:
            if b > 1 and (product // b) * (b - 1) >= value:
                return False
        return True

    def rec(prefix: tuple[int, ...], product: int):
        nonlocal nodes
        nodes += 1
        if nodes > _FACTOR_ENUM_CAP:
            raise ConfigError(
                "too many padded tilings to enumerate; restrict "
                "allowed_factors or disable allow_nondivisor"
            )
        if len(prefix) == k:
            if minimal(prefix):
                out.append(prefix)
            return
        # once coverage is reached, only 1s can stay minimal
        top = 1 if product >= value else value
        for b in range(1, top + 1):
            if b > 1 and allowed is not None and b not in allowed:
                continue
            rec(prefix + (b,), product * b)

    rec((), 1)
    return out


@dataclass
class _Prepared:
    tilings: dict[str, list[tuple[int, ...]]]
    orderings: list[dict[MemLevel, tuple[str, ...]]]
    styles: list[str]

    @property
    def size(self) -> int:
        n = len(self.orderings) * len(self.styles)
        for choices in self.tilings.values():
            n *= len(choices)
        return n


def _prepare(space: SearchSpace, layer: LayerShape) -> _Prepared:
    k = len(space.levels)
    tilings = {}
    for d in DIMS:
        allowed = None
        if space.allowed_factors and d in space.allowed_factors:
            allowed = frozenset(space.allowed_factors[d])
        value = layer.dim(d)
        if space.allow_nondivisor:
            tilings[d] = _padded_tilings(value, k, allowed)
        else:
            tilings[d] = _divisor_tilings(value, k, allowed)
    return _Prepared(
        tilings=tilings,
        orderings=[_normalize_ordering(t) for t in space.orderings],
        styles=list(space.refresh_styles),
    )


def space_size(space: SearchSpace, layer: LayerShape) -> int:
    """Candidate count before legality screening."""
    return _prepare(space, layer).size


# ------------------------------------------------------------ evaluation

Candidate = tuple  # (per-dim factor tuples..., ordering index, style index)


def _iter_candidates(prep: _Prepared):
    dim_choices = [prep.tilings[d] for d in DIMS]
    return itertools.product(
        *dim_choices,
        range(len(prep.orderings)),
        range(len(prep.styles)),
    )


def _unrank(prep: _Prepared, index: int) -> Candidate:
    radices = [len(prep.tilings[d]) for d in DIMS]
    radices += [len(prep.orderings), len(prep.styles)]
    digits = []
    for radix in reversed(radices):
        digits.append(index % radix)
        index //= radix
    digits.reverse()
    parts = [prep.tilings[d][digits[i]] for i, d in enumerate(DIMS)]
    return tuple(parts) + (digits[-2], digits[-1])


def _candidate_nest(
    space: SearchSpace,
    layer: LayerShape,
    prep: _Prepared,
    cand: Candidate,
) -> tuple[LoopNest, str]:
    tiling: dict[MemLevel, dict[str, int]] = {mem: {} for mem in space.levels}
    for i, d in enumerate(DIMS):
        for mem, bound in zip(space.levels, cand[i]):
            tiling[mem][d] = bound
    ordering = prep.orderings[cand[-2]]
    style = prep.styles[cand[-1]]
    nest = build_nest(layer, tiling, ordering=ordering)
    return nest, style


def _objective_value(report: PredictionReport, objective: str) -> float:
    if objective == "energy":
        return report.energy.total
    if objective == "latency":
        return report.latency.l_total_s
    if objective == "edp":
        return report.energy.total * report.latency.l_total_s
    raise ConfigError(f"unknown objective {objective!r}; pick from {OBJECTIVES}")


def _evaluate(
    space: SearchSpace,
    layer: LayerShape,
    prep: _Prepared,
    objective: str,
    cand: Candidate,
):
    """Score one candidate.

    Returns ("ok", value, dsl, nest, refresh) or ("discard", reason).
    """
    nest, style = _candidate_nest(space, layer, prep, cand)
    try:
        refresh = canonical_refresh(nest, style, space.hw, space.options)
    except MappingError:
        return ("discard", "refresh_style")
    violations = validate_nest(nest, space.hw, refresh, space.options)
    if violations:
        reason = "structure"
        for v in violations:
            if v.field.startswith("capacity"):
                reason = "capacity"
                break
            if "spatial instances" in v.message:
                reason = "pe_array"
                break
        return ("discard", reason)
    report = predict_layer(
        layer, nest, refresh, space.hw, space.options, validate=False
    )
    return (
        "ok",
        _objective_value(report, objective),
        render(nest, refresh),
        nest,
        refresh,
    )


def enumerate_mappings(
    space: SearchSpace,
    layer: LayerShape,
    discards: Counter | None = None,
):
    """Yield every legal (nest, refresh) pair in deterministic order.

    Pass a Counter to collect how many candidates each legality check
    rejected.
    """
    prep = _prepare(space, layer)
    for cand in _iter_candidates(prep):
        nest, style = _candidate_nest(space, layer, prep, cand)
        try:
            refresh = canonical_refresh(nest, style, space.hw, space.options)
        except MappingError:
            if discards is not None:
                discards["refresh_style"] += 1
            continue
        violations = validate_nest(nest, space.hw, refresh, space.options)
        if violations:
            if discards is not None:
                reason = "structure"
                for v in violations:
                    if v.field.startswith("capacity"):
                        reason = "capacity"
                        break
                    if "spatial instances" in v.message:
                        reason = "pe_array"
                        break
                discards[reason] += 1
            continue
        yield nest, refresh


# --------------------------------------------------------------- results


@dataclass(frozen=True)
class SearchEntry:
    objective_value: float
    dsl: str
    nest: LoopNest
    refresh: RefreshLocations
    report: PredictionReport


@dataclass
class SearchResult:
    feasible: bool
    objective: str
    strategy: str
    entries: tuple[SearchEntry, ...]
    stats: dict = field(default_factory=dict)

    @property
    def best(self) -> SearchEntry | None:
        return self.entries[0] if self.entries else None

    def to_dict(self) -> dict:
        out = {
            "feasible": self.feasible,
            "objective": self.objective,
            "strategy": self.strategy,
            "stats": dict(self.stats),
            "top": [
                {
                    "rank": i + 1,
                    "objective_value": e.objective_value,
                    "energy_units": e.report.energy.total,
                    "latency_s": e.report.latency.l_total_s,
                    "throughput_gops": e.report.throughput_gops,
                    "mapping": e.dsl,
                }
                for i, e in enumerate(self.entries)
            ],
        }
        out["best_report"] = (
            self.entries[0].report.to_dict() if self.entries else None
        )
        return out


def _worker_count() -> int:
    raw = os.environ.get("ACCEL_PREDICT_THREADS", "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(
            f"ACCEL_PREDICT_THREADS must be an integer, got {raw!r}"
        ) from None
    return max(1, n)


def _score_candidates(space, layer, prep, objective, candidates):
    """Evaluate candidates, preserving candidate order in the output."""
    workers = _worker_count()
    if workers == 1:
        return [_evaluate(space, layer, prep, objective, c) for c in candidates]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(
            pool.map(
                lambda c: _evaluate(space, layer, prep, objective, c),
                candidates,
            )
        )


def _rank(scored, top_k: int, discards: Counter):
    """Keep the top_k best (value, dsl) pairs; count the rest."""
    kept = []
    legal = 0
    for res in scored:
        if res[0] == "discard":
            discards[res[1]] += 1
            continue
        legal += 1
        _, value, dsl, nest, refresh = res
        kept.append((value, dsl, nest, refresh))
    kept = heapq.nsmallest(top_k, kept, key=lambda t: (t[0], t[1]))
    return kept, legal


def explore(
    space: SearchSpace,
    layer: LayerShape,
    objective: str = "energy",
    strategy: str = "exhaustive",
    top_k: int = 10,
    seed: int = 0,
    n_samples: int = 1000,
    beam_width: int = 64,
) -> SearchResult:
    """Search the space and return the top_k mappings, best first.

    exhaustive scores every candidate (refusing spaces larger than the
    cap), random scores a seeded sample without replacement, and beam
    builds tilings one dimension at a time, keeping beam_width partial
    assignments scored by a cheap completion (remaining dims left
    untouched at the outermost level). Ties break on the canonical
    mapping text, so equal-cost mappings rank deterministically.
    """
    if objective not in OBJECTIVES:
        raise ConfigError(
            f"unknown objective {objective!r}; pick from {OBJECTIVES}"
        )
    if top_k < 1:
        raise ConfigError("top_k must be >= 1")
    prep = _prepare(space, layer)
    size = prep.size
    discards: Counter = Counter()
    stats = {"space_size": size, "strategy": strategy, "objective": objective}

    if size == 0:
        stats.update(evaluated=0, legal=0, discarded={})
        return SearchResult(False, objective, strategy, (), stats)

    if strategy == "exhaustive":
        if size > space.exhaustive_cap:
            raise ConfigError(
                f"space has {size} candidates, above the exhaustive cap "
                f"{space.exhaustive_cap}; use random or beam"
            )
        candidates = list(_iter_candidates(prep))
    elif strategy == "random":
        n = min(n_samples, size)
        rng = random.Random(seed)
        indices = sorted(rng.sample(range(size), n))
        candidates = [_unrank(prep, i) for i in indices]
        stats["seed"] = seed
        stats["n_samples"] = n
    elif strategy == "beam":
        return _beam(
            space, layer, prep, objective, top_k, beam_width, stats, discards
        )
    else:
        raise ConfigError(
            f"unknown strategy {strategy!r}; pick from {STRATEGIES}"
        )

    scored = _score_candidates(space, layer, prep, objective, candidates)
    kept, legal = _rank(scored, top_k, discards)
    stats.update(
        evaluated=len(candidates), legal=legal, discarded=dict(discards)
    )
    return _finish(space, layer, objective, strategy, kept, stats)


def _finish(space, layer, objective, strategy, kept, stats) -> SearchResult:
    entries = []
    for value, dsl, nest, refresh in kept:
        report = predict_layer(
            layer, nest, refresh, space.hw, space.options, validate=False
        )
        entries.append(SearchEntry(value, dsl, nest, refresh, report))
    return SearchResult(
        feasible=bool(entries),
        objective=objective,
        strategy=strategy,
        entries=tuple(entries),
        stats=stats,
    )


def _beam(
    space: SearchSpace,
    layer: LayerShape,
    prep: _Prepared,
    objective: str,
    top_k: int,
    beam_width: int,
    stats: dict,
    discards: Counter,
) -> SearchResult:
    if beam_width < 1:
        raise ConfigError("beam_width must be >= 1")
    k = len(space.levels)
    evaluated = 0

    def completion(partial: dict[str, tuple[int, ...]]) -> Candidate:
        parts = []
        for d in DIMS:
            if d in partial:
                parts.append(partial[d])
            else:
                # leave the dim whole at the outermost search level
                parts.append((layer.dim(d),) + (1,) * (k - 1))
        return tuple(parts) + (0, 0)

    def heuristic(partial) -> tuple[float, str]:
        nonlocal evaluated
        evaluated += 1
        res = _evaluate(space, layer, prep, objective, completion(partial))
        if res[0] == "discard":
            return (float("inf"), "")
        return (res[1], res[2])

    pool: list[dict[str, tuple[int, ...]]] = [{}]
    for d in DIMS:
        expanded = [dict(p, **{d: t}) for p in pool for t in prep.tilings[d]]
        scored = sorted(
            ((heuristic(p), i) for i, p in enumerate(expanded)),
            key=lambda t: (t[0][0], t[0][1], t[1]),
        )
        pool = [expanded[i] for (_, i) in scored[:beam_width]]

    # tilings fixed; widen over orderings, then styles
    staged: list[Candidate] = [completion(p) for p in pool]
    with_orderings = [
        c[:-2] + (oi, 0) for c in staged for oi in range(len(prep.orderings))
    ]
    if len(prep.orderings) > 1:
        scored = _score_candidates(
            space, layer, prep, objective, with_orderings
        )
        evaluated += len(with_orderings)
        ranked = sorted(
            (
                ((r[1], r[2]) if r[0] == "ok" else (float("inf"), ""), i)
                for i, r in enumerate(scored)
            ),
            key=lambda t: (t[0][0], t[0][1], t[1]),
        )
        with_orderings = [with_orderings[i] for (_, i) in ranked[:beam_width]]

    finalists = [
        c[:-1] + (si,) for c in with_orderings for si in range(len(prep.styles))
    ]
    scored = _score_candidates(space, layer, prep, objective, finalists)
    evaluated += len(finalists)
    kept, legal = _rank(scored, top_k, discards)
    stats.update(
        evaluated=evaluated,
        legal=legal,
        discarded=dict(discards),
        beam_width=beam_width,
    )
    return _finish(space, layer, objective, "beam", kept, stats)
