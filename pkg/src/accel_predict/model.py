"""Domain types: layer shapes, data kinds, memory levels, hardware configs.

Everything here is an immutable value type. Counts are kept as Python ints
but checked against a 64-bit budget so that silently huge products are
reported instead of propagated.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum, IntEnum

from .errors import ConfigError, CountOverflowError, Violation

INT64_MAX = 2**63 - 1

DIMS = ("m", "c", "r", "s", "e", "f")


class DataKind(Enum):
    INPUT = "I"
    OUTPUT = "O"
    WEIGHT = "W"

    def __str__(self) -> str:
        return self.value


# Canonical kind order used in reports and serialized output.
KINDS = (DataKind.INPUT, DataKind.OUTPUT, DataKind.WEIGHT)


class MemLevel(IntEnum):
    RF = 0
    NOC = 1
    GB = 2
    DRAM = 3

    @property
    def label(self) -> str:
        return _LEVEL_LABELS[self]


_LEVEL_LABELS = {
    MemLevel.RF: "RF",
    MemLevel.NOC: "NoC",
    MemLevel.GB: "GB",
    MemLevel.DRAM: "DRAM",
}

LEVELS_OUTER_FIRST = (MemLevel.DRAM, MemLevel.GB, MemLevel.NOC, MemLevel.RF)

# Which loop dimensions index each tensor. Inputs couple e/r and f/s through
# the sliding window, so their volume needs the halo composition rather than
# a plain product; see tile_volume().
RELEVANT_DIMS = {
    DataKind.WEIGHT: frozenset({"m", "c", "r", "s"}),
    DataKind.OUTPUT: frozenset({"m", "e", "f"}),
    DataKind.INPUT: frozenset({"c", "r", "s", "e", "f"}),
}


def checked_mul(a: int, b: int) -> int:
    out = a * b
    if out > INT64_MAX:
        raise CountOverflowError(f"count {out} exceeds 2^63-1")
    return out


def checked_product(factors) -> int:
    out = 1
    for x in factors:
        out = checked_mul(out, x)
    return out


@dataclass(frozen=True)
class LayerShape:
    """One CONV layer: m output channels, c input channels, r x s kernel,
    e x f output map, plus the stride. Fully-connected layers use
    r=s=e=f=1."""

    m: int
    c: int
    r: int
    s: int
    e: int
    f: int
    stride: int = 1
    name: str = ""

    def __post_init__(self):
        bad = [d for d in DIMS if getattr(self, d) < 1]
        if self.stride < 1:
            bad.append("stride")
        if bad:
            raise ConfigError(
                f"layer {self.name!r}: fields must be >= 1: {', '.join(bad)}"
            )

    def dim(self, name: str) -> int:
        return getattr(self, name)

    def dims(self) -> dict[str, int]:
        return {d: getattr(self, d) for d in DIMS}


def mac_count(layer: LayerShape) -> int:
    """Total multiply-accumulates for one layer, m*c*r*s*e*f."""
    return checked_product(layer.dim(d) for d in DIMS)


def input_extent(tiles: int, kernel: int, stride: int) -> int:
    """Input span covering `tiles` output positions with the given kernel."""
    return (tiles - 1) * stride + kernel


def tensor_footprint(layer: LayerShape, kind: DataKind) -> int:
    if kind is DataKind.WEIGHT:
        return checked_product((layer.m, layer.c, layer.r, layer.s))
    if kind is DataKind.OUTPUT:
        return checked_product((layer.m, layer.e, layer.f))
    h = input_extent(layer.e, layer.r, layer.stride)
    w = input_extent(layer.f, layer.s, layer.stride)
    return checked_product((layer.c, h, w))


def tile_volume(
    kind: DataKind, dim_tiles: Mapping[str, int], stride: int
) -> int:
    """Elements of `kind` covered by a tile with the given per-dim extents.

    `dim_tiles` maps dim name -> product of loop bounds inside the tile
    (missing dims count as 1). Inputs use the halo composition; the other
    kinds are plain products over their relevant dims.
    """
    t = {d: dim_tiles.get(d, 1) for d in DIMS}
    if kind is DataKind.INPUT:
        h = input_extent(t["e"], t["r"], stride)
        w = input_extent(t["f"], t["s"], stride)
        return checked_product((t["c"], h, w))
    return checked_product(t[d] for d in RELEVANT_DIMS[kind])


@dataclass(frozen=True)
class Precision:
    bits_input: int = 16
    bits_output: int = 16
    bits_weight: int = 16

    def bits(self, kind: DataKind) -> int:
        return {
            DataKind.INPUT: self.bits_input,
            DataKind.OUTPUT: self.bits_output,
            DataKind.WEIGHT: self.bits_weight,
        }[kind]


@dataclass(frozen=True)
class UnitCosts:
    """Per-event costs. Energy is unit-agnostic; time is seconds."""

    e_mac: float = 0.0
    # e_access[level][kind]: energy per element moved across that boundary.
    e_access: Mapping[MemLevel, Mapping[DataKind, float]] = field(
        default_factory=dict
    )
    t_comp: float | None = None
    clock_hz: float | None = None

    def access(self, level: MemLevel, kind: DataKind) -> float:
        return self.e_access.get(level, {}).get(kind, 0.0)

    def mac_time(self) -> float:
        if self.t_comp is not None:
            return self.t_comp
        if self.clock_hz:
            return 1.0 / self.clock_hz
        raise ConfigError("unit_costs: need t_comp or clock_hz")


UNBOUNDED = math.inf


def _per_kind(value) -> dict[DataKind, float]:
    if isinstance(value, Mapping):
        return dict(value)
    return {k: value for k in KINDS}


def _per_kind_int(value) -> dict[DataKind, int]:
    if isinstance(value, Mapping):
        return dict(value)
    return {k: value for k in KINDS}


@dataclass(frozen=True)
class HardwareConfig:
    """Array geometry, storage, bandwidth, and unit costs.

    Capacities are bits: `capacity_gb` is the whole buffer, `capacity_rf`
    is per PE. Either may be a single shared number or a per-kind mapping
    (shared capacity is checked against the sum of resident tiles).
    Bandwidths are bits/second; math.inf means unbounded.
    """

    pe_rows: int
    pe_cols: int
    capacity_gb: int | Mapping[DataKind, int]
    capacity_rf: int | Mapping[DataKind, int]
    bw_dram: float
    bw_gb: float | Mapping[DataKind, float]
    bw_rf: float | Mapping[DataKind, float]
    unit_costs: UnitCosts = field(default_factory=UnitCosts)
    precision: Precision = field(default_factory=Precision)
    buffering_factor: int = 1

    @property
    def n_pe(self) -> int:
        return self.pe_rows * self.pe_cols

    def gb_bw(self, kind: DataKind) -> float:
        return _per_kind(self.bw_gb)[kind]

    def rf_bw(self, kind: DataKind) -> float:
        return _per_kind(self.bw_rf)[kind]

    def gb_capacity(self) -> int | dict[DataKind, int]:
        if isinstance(self.capacity_gb, Mapping):
            return dict(self.capacity_gb)
        return self.capacity_gb

    def rf_capacity(self) -> int | dict[DataKind, int]:
        if isinstance(self.capacity_rf, Mapping):
            return dict(self.capacity_rf)
        return self.capacity_rf


def validate_hardware(hw: HardwareConfig) -> list[Violation]:
    """All invariant checks, reported individually; never raises."""
    out: list[Violation] = []
    if hw.pe_rows < 1:
        out.append(Violation("pe_rows", "must be >= 1"))
    if hw.pe_cols < 1:
        out.append(Violation("pe_cols", "must be >= 1"))

    for name, cap in (("capacity_gb", hw.capacity_gb), ("capacity_rf", hw.capacity_rf)):
        entries = (
            cap.items() if isinstance(cap, Mapping) else [(None, cap)]
        )
        for kind, bits in entries:
            path = f"{name}[{kind}]" if kind is not None else name
            if bits <= 0:
                out.append(Violation(path, "capacity must be > 0 bits"))

    if not hw.bw_dram > 0:
        out.append(Violation("bw_dram", "bandwidth must be > 0"))
    for name, bw in (("bw_gb", hw.bw_gb), ("bw_rf", hw.bw_rf)):
        for kind, val in _per_kind(bw).items():
            if not val > 0:
                out.append(Violation(f"{name}[{kind}]", "bandwidth must be > 0"))

    if hw.buffering_factor not in (1, 2):
        out.append(Violation("buffering_factor", "must be 1 or 2"))

    uc = hw.unit_costs
    if uc.e_mac < 0:
        out.append(Violation("unit_costs.e_mac", "must be >= 0"))
    for level, per_kind in uc.e_access.items():
        for kind, val in per_kind.items():
            if val < 0:
                out.append(
                    Violation(
                        f"unit_costs.e_access[{level.label}][{kind}]",
                        "must be >= 0",
                    )
                )
    try:
        if not uc.mac_time() > 0:
            out.append(Violation("unit_costs.t_comp", "must be > 0"))
    except ConfigError:
        out.append(Violation("unit_costs", "need t_comp or clock_hz"))

    for fname in ("bits_input", "bits_output", "bits_weight"):
        bits = getattr(hw.precision, fname)
        if not 1 <= bits <= 64:
            out.append(Violation(f"precision.{fname}", "must be in [1, 64]"))
    return out


@dataclass(frozen=True)
class Options:
    """Model variant switches, all defaulting to the recommended forms."""

    # Pretend stride=1 in the input halo (reproduces the simplified
    # input-volume accounting some published models use).
    assume_stride_one: bool = False
    # Compute latency as total MACs x t_comp instead of dividing across
    # the active PEs.
    literal_eq8: bool = False
    # GB-side latency counts one transfer per multicast group instead of
    # one per PE delivery.
    gb_latency_multicast_aware: bool = False
    # Read+write factor for partial-sum recirculation of outputs; None
    # means the default of 2. Applies only where the output buffer is
    # refreshed more than once.
    psum_rw_factor: float | None = None

    def effective_stride(self, layer: LayerShape) -> int:
        return 1 if self.assume_stride_one else layer.stride

    def psum_factor(self) -> int | float:
        # Integral factors stay ints so access counts remain exact.
        f = 2 if self.psum_rw_factor is None else self.psum_rw_factor
        if isinstance(f, float) and f.is_integer():
            f = int(f)
        return f
