"""Tiled loop-nest IR: levels, refresh locations, and the refresh plan.

A dataflow is an ordered list of tiled loops, outermost first, grouped by
memory level DRAM -> GB -> NoC -> RF. Spatial loops (the PE array) live in
the NoC group. A refresh location is an index into that list: the buffer
for a data kind at a memory level is refilled every time any loop above
the index advances, and holds one tile spanning the loops below it.
"""

from __future__ import annotations

from dataclasses import dataclass
from collections.abc import Mapping, Sequence

from .errors import ConfigError, MappingError, Violation
from .model import (
    DIMS,
    KINDS,
    RELEVANT_DIMS,
    DataKind,
    HardwareConfig,
    LayerShape,
    LEVELS_OUTER_FIRST,
    MemLevel,
    Options,
    checked_product,
    tile_volume,
)


@dataclass(frozen=True)
class LoopLevel:
    dim: str
    bound: int
    mem: MemLevel
    spatial: bool = False

    def __post_init__(self):
        if self.dim not in DIMS:
            raise ConfigError(f"unknown loop dimension {self.dim!r}")
        if self.spatial and self.mem is not MemLevel.NOC:
            raise ConfigError("spatial loops are only allowed at NoC")


@dataclass(frozen=True)
class LoopNest:
    levels: tuple[LoopLevel, ...]
    layer: LayerShape

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))

    def group_start(self, mem: MemLevel) -> int:
        """Index of the first loop at `mem` or inner; len(levels) if none."""
        for i, lv in enumerate(self.levels):
            if lv.mem <= mem:
                return i
        return len(self.levels)

    def padded_dims(self) -> dict[str, int]:
        out = {d: 1 for d in DIMS}
        for lv in self.levels:
            out[lv.dim] *= lv.bound
        return out

    def padded_mac_count(self) -> int:
        return checked_product(lv.bound for lv in self.levels)

    def n_pe_active(self) -> int:
        return checked_product(lv.bound for lv in self.levels if lv.spatial)


@dataclass(frozen=True)
class RefreshLocations:
    """Per (kind, mem in {GB, RF}) buffer-refill positions."""

    gb: Mapping[DataKind, int]
    rf: Mapping[DataKind, int]

    def loc(self, kind: DataKind, mem: MemLevel) -> int:
        if mem is MemLevel.GB:
            return self.gb[kind]
        if mem is MemLevel.RF:
            return self.rf[kind]
        raise ConfigError(f"no refresh location at {mem.label}")

    @classmethod
    def outermost(cls, nest: LoopNest) -> "RefreshLocations":
        """Defaults: each buffer refilled at the top of its level's group."""
        p_gb = nest.group_start(MemLevel.GB)
        p_rf = nest.group_start(MemLevel.RF)
        return cls(
            gb={k: p_gb for k in KINDS}, rf={k: p_rf for k in KINDS}
        )


@dataclass(frozen=True)
class RefreshPlan:
    """Refresh counts and volumes, the operands of all traffic formulas.

    n_ref counts sequential refreshes (temporal loop bounds above the
    location; the PE array is not a sequence). v_ref at GB is the
    array-wide tile below the location; v_ref at RF is one PE's tile
    (temporal loops only), so RF capacity checks and per-PE delivery
    counts read it directly.
    """

    n_ref: Mapping[tuple[DataKind, MemLevel], int]
    v_ref: Mapping[tuple[DataKind, MemLevel], int]
    multicast: Mapping[DataKind, int]
    n_pe_active: int
    n_mac_padded: int

    def traffic(self, kind: DataKind, mem: MemLevel) -> int:
        return self.n_ref[(kind, mem)] * self.v_ref[(kind, mem)]


def _dim_products(levels: Sequence[LoopLevel], include_spatial: bool) -> dict[str, int]:
    out: dict[str, int] = {}
    for lv in levels:
        if lv.spatial and not include_spatial:
            continue
        out[lv.dim] = out.get(lv.dim, 1) * lv.bound
    return out


def refresh_plan(
    nest: LoopNest, refresh: RefreshLocations, options: Options = Options()
) -> RefreshPlan:
    stride = options.effective_stride(nest.layer)
    n_ref: dict[tuple[DataKind, MemLevel], int] = {}
    v_ref: dict[tuple[DataKind, MemLevel], int] = {}
    for mem in (MemLevel.GB, MemLevel.RF):
        for kind in KINDS:
            p = refresh.loc(kind, mem)
            above = nest.levels[:p]
            below = nest.levels[p:]
            n_ref[(kind, mem)] = checked_product(
                lv.bound for lv in above if not lv.spatial
            )
            tiles = _dim_products(
                below, include_spatial=(mem is MemLevel.GB)
            )
            v_ref[(kind, mem)] = tile_volume(kind, tiles, stride)
    spatial_loops = [lv for lv in nest.levels if lv.spatial]
    multicast = {}
    for kind in KINDS:
        multicast[kind] = checked_product(
            lv.bound
            for lv in spatial_loops
            if lv.dim not in RELEVANT_DIMS[kind]
        )
    return RefreshPlan(
        n_ref=n_ref,
        v_ref=v_ref,
        multicast=multicast,
        n_pe_active=nest.n_pe_active(),
        n_mac_padded=nest.padded_mac_count(),
    )


def _check_coverage(dim: str, true_dim: int, factors: list[int]) -> list[str]:
    """Messages for coverage/minimality problems of one dimension."""
    product = 1
    for b in factors:
        product *= b
    if product < true_dim:
        return [f"tiling product {product} < layer dim {true_dim}"]
    msgs = []
    for b in factors:
        if b > 1 and (product // b) * (b - 1) >= true_dim:
            msgs.append(
                f"padding is not minimal: factor {b} could shrink "
                f"({product}//{b}*{b - 1} still covers {true_dim})"
            )
    return msgs


def validate_structure(
    nest: LoopNest, refresh: RefreshLocations | None = None
) -> list[Violation]:
    """Hardware-independent legality: grouping, coverage, location ranges."""
    out: list[Violation] = []
    prev = MemLevel.DRAM
    for i, lv in enumerate(nest.levels):
        path = f"levels[{i}]"
        if lv.bound < 1:
            out.append(Violation(path, "bound must be >= 1"))
        if lv.mem > prev:
            out.append(
                Violation(
                    path,
                    f"{lv.mem.label} loop after {prev.label}; groups must "
                    "run DRAM->GB->NoC->RF outermost to innermost",
                )
            )
        prev = min(prev, lv.mem)

    noc = [i for i, lv in enumerate(nest.levels) if lv.mem is MemLevel.NOC]
    spatial = [i for i in noc if nest.levels[i].spatial]
    if spatial and spatial != list(range(spatial[0], spatial[-1] + 1)):
        out.append(
            Violation("levels", "spatial loops must be contiguous within NoC")
        )

    per_dim: dict[str, list[int]] = {d: [] for d in DIMS}
    for lv in nest.levels:
        per_dim[lv.dim].append(lv.bound)
    for d in DIMS:
        for msg in _check_coverage(d, nest.layer.dim(d), per_dim[d]):
            out.append(Violation(f"dim {d}", msg))

    if refresh is not None:
        n = len(nest.levels)
        p_noc = nest.group_start(MemLevel.NOC)
        for kind in KINDS:
            gb = refresh.loc(kind, MemLevel.GB)
            rf = refresh.loc(kind, MemLevel.RF)
            tag = f"refresh[{kind}]"
            if not 0 <= gb <= p_noc:
                out.append(
                    Violation(
                        f"{tag}[GB]",
                        f"location {gb} outside [0, {p_noc}] (must sit "
                        "within or above the GB group)",
                    )
                )
            if not 0 <= rf <= n:
                out.append(
                    Violation(f"{tag}[RF]", f"location {rf} outside [0, {n}]")
                )
            if rf < gb:
                out.append(
                    Violation(
                        f"{tag}[RF]",
                        f"RF location {rf} is above GB location {gb}; inner "
                        "buffers refresh at least as often",
                    )
                )
    return out


def _capacity_violations(
    name: str,
    capacity,
    need_bits: Mapping[DataKind, int],
) -> list[Violation]:
    out = []
    if isinstance(capacity, Mapping):
        for kind, need in need_bits.items():
            cap = capacity.get(kind, 0)
            if need > cap:
                out.append(
                    Violation(
                        f"{name}[{kind}]",
                        f"tile needs {need} bits > capacity {cap}",
                    )
                )
    else:
        total = sum(need_bits.values())
        if total > capacity:
            out.append(
                Violation(
                    name,
                    f"resident tiles need {total} bits > capacity {capacity}",
                )
            )
    return out


def validate_nest(
    nest: LoopNest,
    hw: HardwareConfig,
    refresh: RefreshLocations,
    options: Options = Options(),
) -> list[Violation]:
    """Structure checks plus the hardware fit: PE count and buffer sizes."""
    out = validate_structure(nest, refresh)
    if out:
        return out

    n_pe = nest.n_pe_active()
    if n_pe > hw.n_pe:
        out.append(
            Violation(
                "levels",
                f"{n_pe} spatial instances > {hw.pe_rows}x{hw.pe_cols} array",
            )
        )

    plan = refresh_plan(nest, refresh, options)
    bf = hw.buffering_factor
    gb_need = {
        k: plan.v_ref[(k, MemLevel.GB)] * hw.precision.bits(k) * bf
        for k in KINDS
    }
    rf_need = {
        k: plan.v_ref[(k, MemLevel.RF)] * hw.precision.bits(k) * bf
        for k in KINDS
    }
    out.extend(_capacity_violations("capacity_gb", hw.gb_capacity(), gb_need))
    out.extend(_capacity_violations("capacity_rf", hw.rf_capacity(), rf_need))
    return out


def build_nest(
    layer: LayerShape,
    tiling: Mapping[MemLevel, Mapping[str, int]],
    ordering: Mapping[MemLevel, Sequence[str]] | None = None,
    allow_padding: bool = True,
) -> LoopNest:
    """Assemble a nest from per-level tiling factors and dim orderings.

    Factors default to 1 and bound-1 loops are dropped; NoC-level loops
    come out spatial. Per-dim factor products must cover the layer dims,
    exactly when padding is disabled, minimally otherwise.
    """
    ordering = ordering or {}
    violations = []
    for mem in LEVELS_OUTER_FIRST:
        order = tuple(ordering.get(mem, DIMS))
        if sorted(order) != sorted(DIMS):
            raise ConfigError(
                f"ordering for {mem.label} must be a permutation of {DIMS}"
            )
        for d, b in tiling.get(mem, {}).items():
            if d not in DIMS:
                raise ConfigError(f"unknown dim {d!r} in tiling")
            if b < 1:
                raise ConfigError(f"tiling factor {d}@{mem.label} must be >= 1")

    for d in DIMS:
        factors = [tiling.get(mem, {}).get(d, 1) for mem in LEVELS_OUTER_FIRST]
        product = 1
        for b in factors:
            product *= b
        if not allow_padding:
            if product != layer.dim(d):
                violations.append(
                    Violation(
                        f"dim {d}",
                        f"tiling product {product} != layer dim "
                        f"{layer.dim(d)} and padding is disabled",
                    )
                )
        else:
            for msg in _check_coverage(d, layer.dim(d), factors):
                violations.append(Violation(f"dim {d}", msg))
    if violations:
        raise MappingError(violations)

    levels = []
    for mem in LEVELS_OUTER_FIRST:
        order = tuple(ordering.get(mem, DIMS))
        per_level = tiling.get(mem, {})
        for d in order:
            b = per_level.get(d, 1)
            if b > 1:
                levels.append(
                    LoopLevel(d, b, mem, spatial=(mem is MemLevel.NOC))
                )
    return LoopNest(tuple(levels), layer)


def _rf_budgets(hw: HardwareConfig) -> dict[DataKind, int]:
    cap = hw.rf_capacity()
    if isinstance(cap, Mapping):
        return {k: cap.get(k, 0) for k in KINDS}
    return {k: cap // 3 for k in KINDS}


def canonical_refresh(
    nest: LoopNest,
    style: str,
    hw: HardwareConfig | None = None,
    options: Options = Options(),
) -> RefreshLocations:
    """Construct refresh locations for a named stationarity style.

    weight_stationary / output_stationary are positional: the favored
    kind's GB buffer loads once (location 0) and its RF tile is pinned
    across the whole GB group. row_stationary_like is capacity-driven and
    needs hardware: GB locations slide past leading GB loops whose dims
    the kind depends on (which leaves traffic unchanged but shrinks the
    resident tile), and each RF location is the outermost position whose
    per-PE tile fits that kind's register budget.
    """
    p_gb = nest.group_start(MemLevel.GB)
    p_rf = nest.group_start(MemLevel.RF)
    if style == "weight_stationary":
        gb = {k: p_gb for k in KINDS}
        rf = {k: p_rf for k in KINDS}
        gb[DataKind.WEIGHT] = 0
        rf[DataKind.WEIGHT] = p_gb
        return RefreshLocations(gb=gb, rf=rf)
    if style == "output_stationary":
        gb = {k: p_gb for k in KINDS}
        rf = {k: p_rf for k in KINDS}
        gb[DataKind.OUTPUT] = 0
        rf[DataKind.OUTPUT] = p_gb
        return RefreshLocations(gb=gb, rf=rf)
    if style != "row_stationary_like":
        raise ConfigError(f"unknown refresh style {style!r}")
    if hw is None:
        raise ConfigError("row_stationary_like needs a hardware config")

    stride = options.effective_stride(nest.layer)
    p_noc = nest.group_start(MemLevel.NOC)
    budgets = _rf_budgets(hw)
    bf = hw.buffering_factor
    gb_locs: dict[DataKind, int] = {}
    rf_locs: dict[DataKind, int] = {}
    for kind in KINDS:
        loc = p_gb
        while (
            loc < p_noc and nest.levels[loc].dim in RELEVANT_DIMS[kind]
        ):
            loc += 1
        gb_locs[kind] = loc

        budget = budgets[kind] // (hw.precision.bits(kind) * bf)
        chosen = None
        for p in range(gb_locs[kind], len(nest.levels) + 1):
            tiles = _dim_products(nest.levels[p:], include_spatial=False)
            if tile_volume(kind, tiles, stride) <= budget:
                chosen = p
                break
        if chosen is None:
            raise MappingError(
                [
                    Violation(
                        f"refresh[{kind}][RF]",
                        f"no location fits the {budgets[kind]}-bit register "
                        "budget",
                    )
                ]
            )
        rf_locs[kind] = chosen
    return RefreshLocations(gb=gb_locs, rf=rf_locs)


REFRESH_STYLES = (
    "weight_stationary",
    "output_stationary",
    "row_stationary_like",
)
