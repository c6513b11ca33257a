"""Brute-force reference counts: run the loop nest and watch the buffers.

Refreshes are observed, not computed: the temporal loops are executed as
an odometer and a buffer refill is recorded whenever any loop above its
refresh location advances. Tile volumes are measured by enumerating the
loops below the location and collecting the coordinates each kind
actually touches (distinct tuples for weights/outputs, the bounding box
for inputs, whose fetches are contiguous rows). Spatial loops expand
into per-PE instances; multicast is measured by grouping PEs that land
on identical tiles.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import predictor
from .errors import InstanceTooLargeError, MappingError
from .loopnest import LoopNest, RefreshLocations, refresh_plan, validate_nest
from .model import (
    KINDS,
    RELEVANT_DIMS,
    DataKind,
    HardwareConfig,
    MemLevel,
    Options,
)

DEFAULT_CAP = 10**8


@dataclass(frozen=True)
class AccessCounters:
    """What the brute-force run observed."""

    refreshes: dict[MemLevel, dict[DataKind, int]]  # GB and RF
    elements_moved: dict[MemLevel, dict[DataKind, int]]  # all four levels
    multicast: dict[DataKind, int]
    body_iterations: int
    macs_per_pe: int
    n_pe_active: int


def _count_refresh_events(bounds: list[int], depths: set[int]) -> dict[int, int]:
    """Run the odometer over `bounds`; for each depth d, count iterations
    where some index at position < d changed (the first iteration counts
    everywhere)."""
    counts = {d: 0 for d in depths}
    prev = None
    for point in itertools.product(*(range(b) for b in bounds)):
        if prev is None:
            for d in depths:
                counts[d] += 1
        else:
            changed = 0
            while point[changed] == prev[changed]:
                changed += 1
            for d in depths:
                if changed < d:
                    counts[d] += 1
        prev = point
    return counts


def _dim_subindex(loops, assignment, dim: str) -> int:
    """Mixed-radix composition of one dim's loop indices, outer-major."""
    value = 0
    for lv, idx in zip(loops, assignment):
        if lv.dim == dim:
            value = value * lv.bound + idx
    return value


def _measure_tile(loops, kind: DataKind, stride: int, cap: int) -> int:
    """Elements of `kind` touched across one full pass of `loops`."""
    # Loops over dims the tensor does not depend on revisit the same
    # elements; skipping them shrinks the enumeration without changing
    # the touched set.
    loops = [lv for lv in loops if lv.dim in RELEVANT_DIMS[kind]]
    size = 1
    for lv in loops:
        size *= lv.bound
    if size > cap:
        raise InstanceTooLargeError(
            f"tile enumeration of {size} points exceeds cap {cap}"
        )
    if kind is DataKind.INPUT:
        cs: set[int] = set()
        hs: set[int] = set()
        ws: set[int] = set()
        for pt in itertools.product(*(range(lv.bound) for lv in loops)):
            cs.add(_dim_subindex(loops, pt, "c"))
            e = _dim_subindex(loops, pt, "e")
            r = _dim_subindex(loops, pt, "r")
            f = _dim_subindex(loops, pt, "f")
            s = _dim_subindex(loops, pt, "s")
            hs.add(e * stride + r)
            ws.add(f * stride + s)
        # rows are fetched whole, gaps included
        return len(cs) * (max(hs) - min(hs) + 1) * (max(ws) - min(ws) + 1)
    dims = sorted(RELEVANT_DIMS[kind])
    seen = {
        tuple(_dim_subindex(loops, pt, d) for d in dims)
        for pt in itertools.product(*(range(lv.bound) for lv in loops))
    }
    return len(seen)


def simulate(
    nest: LoopNest,
    refresh: RefreshLocations,
    *,
    options: Options = Options(),
    cap: int = DEFAULT_CAP,
) -> AccessCounters:
    stride = options.effective_stride(nest.layer)
    temporal_positions = [
        i for i, lv in enumerate(nest.levels) if not lv.spatial
    ]
    spatial_loops = [lv for lv in nest.levels if lv.spatial]
    n_pe = 1
    for lv in spatial_loops:
        n_pe *= lv.bound
    steps = 1
    for i in temporal_positions:
        steps *= nest.levels[i].bound
    body = steps * n_pe
    if body > cap:
        raise InstanceTooLargeError(
            f"{body} loop-body iterations exceed cap {cap}"
        )

    # Spatial loops are parallel hardware, not iterations: a location is
    # mapped to its temporal depth, so positions inside the spatial group
    # all see the same refresh cadence.
    def temporal_depth(p: int) -> int:
        return sum(1 for i in temporal_positions if i < p)

    locs = {
        (kind, mem): refresh.loc(kind, mem)
        for kind in KINDS
        for mem in (MemLevel.GB, MemLevel.RF)
    }
    depth_of = {key: temporal_depth(p) for key, p in locs.items()}
    bounds = [nest.levels[i].bound for i in temporal_positions]
    event_counts = _count_refresh_events(bounds, set(depth_of.values()))
    refreshes = {
        MemLevel.GB: {k: event_counts[depth_of[(k, MemLevel.GB)]] for k in KINDS},
        MemLevel.RF: {k: event_counts[depth_of[(k, MemLevel.RF)]] for k in KINDS},
    }

    volumes = {}
    for kind in KINDS:
        for mem in (MemLevel.GB, MemLevel.RF):
            below = nest.levels[locs[(kind, mem)]:]
            if mem is MemLevel.RF:
                below = [lv for lv in below if not lv.spatial]
            volumes[(kind, mem)] = _measure_tile(below, kind, stride, cap)

    multicast = {}
    for kind in KINDS:
        projections = {
            tuple(
                idx
                for lv, idx in zip(spatial_loops, pt)
                if lv.dim in RELEVANT_DIMS[kind]
            )
            for pt in itertools.product(
                *(range(lv.bound) for lv in spatial_loops)
            )
        }
        multicast[kind] = n_pe // len(projections)

    psum = options.psum_factor()
    moved: dict[MemLevel, dict[DataKind, int]] = {
        lvl: {} for lvl in (MemLevel.DRAM, MemLevel.GB, MemLevel.NOC, MemLevel.RF)
    }
    for k in KINDS:
        n_gb = refreshes[MemLevel.GB][k]
        n_rf = refreshes[MemLevel.RF][k]
        dram = n_gb * volumes[(k, MemLevel.GB)]
        gb = n_rf * volumes[(k, MemLevel.RF)] * (n_pe // multicast[k])
        noc = n_rf * volumes[(k, MemLevel.RF)] * n_pe
        if k is DataKind.OUTPUT:
            if n_gb > 1:
                dram *= psum
            if n_rf > 1:
                gb *= psum
        moved[MemLevel.DRAM][k] = dram
        moved[MemLevel.GB][k] = gb
        moved[MemLevel.NOC][k] = noc
        moved[MemLevel.RF][k] = body
    return AccessCounters(
        refreshes=refreshes,
        elements_moved=moved,
        multicast=multicast,
        body_iterations=body,
        macs_per_pe=steps,
        n_pe_active=n_pe,
    )


@dataclass(frozen=True)
class DiffRow:
    metric: str  # "elements" or "refreshes"
    level: MemLevel
    kind: DataKind
    analytic: int
    oracle: int

    @property
    def ok(self) -> bool:
        return self.analytic == self.oracle


@dataclass(frozen=True)
class DiffReport:
    rows: tuple[DiffRow, ...]

    @property
    def mismatches(self) -> tuple[DiffRow, ...]:
        return tuple(r for r in self.rows if not r.ok)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def diff_counts(plan, analytic, counters: AccessCounters) -> DiffReport:
    rows = []
    for lvl in (MemLevel.DRAM, MemLevel.GB, MemLevel.NOC, MemLevel.RF):
        for k in KINDS:
            rows.append(
                DiffRow(
                    "elements",
                    lvl,
                    k,
                    analytic[lvl][k],
                    counters.elements_moved[lvl][k],
                )
            )
    for mem in (MemLevel.GB, MemLevel.RF):
        for k in KINDS:
            rows.append(
                DiffRow(
                    "refreshes",
                    mem,
                    k,
                    plan.n_ref[(k, mem)],
                    counters.refreshes[mem][k],
                )
            )
    return DiffReport(tuple(rows))


def check(
    nest: LoopNest,
    refresh: RefreshLocations,
    hw: HardwareConfig | None = None,
    *,
    options: Options = Options(),
    cap: int = DEFAULT_CAP,
) -> DiffReport:
    """Analytic counts vs. a brute-force run of the same nest."""
    if hw is not None:
        violations = validate_nest(nest, hw, refresh, options)
        if violations:
            raise MappingError(violations)
    plan = refresh_plan(nest, refresh, options)
    analytic = predictor.access_counts(plan, options)
    counters = simulate(nest, refresh, options=options, cap=cap)
    return diff_counts(plan, analytic, counters)
