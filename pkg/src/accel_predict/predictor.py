"""Energy, latency, and throughput from a refresh plan.

Access counts are the shared currency: every boundary's traffic is
counted once, energy multiplies each count by a unit cost, and latency
divides the same counts by bandwidths.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, MappingError
from .loopnest import LoopNest, RefreshLocations, RefreshPlan, refresh_plan, validate_nest
from .model import (
    KINDS,
    DataKind,
    HardwareConfig,
    LayerShape,
    MemLevel,
    Options,
    checked_mul,
    mac_count,
)

AccessCounts = dict[MemLevel, dict[DataKind, int]]


def access_counts(plan: RefreshPlan, options: Options = Options()) -> AccessCounts:
    """Elements crossing each boundary, per data kind.

    The level key names the outer side of the boundary: DRAM rows are
    DRAM<->GB transfers, GB rows are GB->array fetches (shared across
    multicast groups), NoC rows are per-PE deliveries, RF rows are
    register reads feeding the MACs. Output counts at DRAM and GB carry
    the read+write factor whenever partial sums recirculate there; NoC
    deliveries and register traffic are counted once per the flat forms.
    """
    psum = options.psum_factor()
    n_pe = plan.n_pe_active

    def out_factor(mem: MemLevel):
        return psum if plan.n_ref[(DataKind.OUTPUT, mem)] > 1 else 1

    def _scale(count: int, factor):
        if isinstance(factor, int):
            return checked_mul(count, factor)
        return count * factor

    counts: AccessCounts = {lvl: {} for lvl in (MemLevel.DRAM, MemLevel.GB, MemLevel.NOC, MemLevel.RF)}
    for k in KINDS:
        dram = plan.traffic(k, MemLevel.GB)
        gb = checked_mul(
            plan.traffic(k, MemLevel.RF), n_pe // plan.multicast[k]
        )
        noc = checked_mul(plan.traffic(k, MemLevel.RF), n_pe)
        if k is DataKind.OUTPUT:
            dram = _scale(dram, out_factor(MemLevel.GB))
            gb = _scale(gb, out_factor(MemLevel.RF))
        counts[MemLevel.DRAM][k] = dram
        counts[MemLevel.GB][k] = gb
        counts[MemLevel.NOC][k] = noc
        counts[MemLevel.RF][k] = plan.n_mac_padded
    return counts


@dataclass(frozen=True)
class EnergyReport:
    e_comp: float
    e_rf: float
    e_noc: float
    e_gb: float
    e_dram: float
    total: float
    by_level_kind: dict[MemLevel, dict[DataKind, float]]

    def breakdown_pct(self) -> dict[str, float]:
        """Shares of the full total, DRAM included."""
        parts = {
            "comp": self.e_comp,
            "rf": self.e_rf,
            "noc": self.e_noc,
            "gb": self.e_gb,
            "dram": self.e_dram,
        }
        return _shares(parts)

    def onchip_breakdown_pct(self) -> dict[str, float]:
        """The four-column view (comp/RF/NoC/GB) used for chip comparisons,
        normalized without the DRAM share."""
        parts = {
            "comp": self.e_comp,
            "rf": self.e_rf,
            "noc": self.e_noc,
            "gb": self.e_gb,
        }
        return _shares(parts)


def _shares(parts: dict[str, float]) -> dict[str, float]:
    total = sum(parts.values())
    if total == 0:
        return {k: 0.0 for k in parts}
    return {k: 100.0 * v / total for k, v in parts.items()}


def energy(
    plan: RefreshPlan,
    layer: LayerShape,
    hw: HardwareConfig,
    options: Options = Options(),
) -> EnergyReport:
    uc = hw.unit_costs
    counts = access_counts(plan, options)
    by_level_kind: dict[MemLevel, dict[DataKind, float]] = {}
    level_totals: dict[MemLevel, float] = {}
    for lvl, per_kind in counts.items():
        by_level_kind[lvl] = {
            k: per_kind[k] * uc.access(lvl, k) for k in KINDS
        }
        level_totals[lvl] = sum(by_level_kind[lvl].values())
    e_comp = plan.n_mac_padded * uc.e_mac
    total = e_comp + sum(level_totals.values())
    return EnergyReport(
        e_comp=e_comp,
        e_rf=level_totals[MemLevel.RF],
        e_noc=level_totals[MemLevel.NOC],
        e_gb=level_totals[MemLevel.GB],
        e_dram=level_totals[MemLevel.DRAM],
        total=total,
        by_level_kind=by_level_kind,
    )


@dataclass(frozen=True)
class LatencyReport:
    l_comp_s: float
    l_dram_s: float
    l_gb_s: float
    l_setup_s: float
    l_total_s: float
    bottleneck: str  # which of comp/dram/gb attained the max
    dram_kind: DataKind | None
    gb_kind: DataKind | None
    setup_kind: DataKind | None


def _bw_checked(value: float, name: str) -> float:
    if not value > 0:
        raise ConfigError(f"{name}: bandwidth must be > 0")
    return value


def _max_over_kinds(terms: dict[DataKind, float]) -> tuple[float, DataKind | None]:
    best_kind = None
    best = 0.0
    for k in KINDS:
        if k in terms and terms[k] > best:
            best, best_kind = terms[k], k
    return best, best_kind


def latency(
    plan: RefreshPlan,
    layer: LayerShape,
    hw: HardwareConfig,
    options: Options = Options(),
) -> LatencyReport:
    t_comp = hw.unit_costs.mac_time()
    if options.literal_eq8:
        l_comp = plan.n_mac_padded * t_comp
    else:
        # spatial bounds divide the padded MAC product exactly
        l_comp = (plan.n_mac_padded // plan.n_pe_active) * t_comp

    counts = access_counts(plan, options)
    bits = hw.precision.bits
    bw_dram = _bw_checked(hw.bw_dram, "bw_dram")

    dram_terms = {}
    gb_terms = {}
    for k in KINDS:
        gb_bw = _bw_checked(hw.gb_bw(k), f"bw_gb[{k}]")
        dram_terms[k] = counts[MemLevel.DRAM][k] * bits(k) / min(gb_bw, bw_dram)
        gb_level = MemLevel.GB if options.gb_latency_multicast_aware else MemLevel.NOC
        gb_terms[k] = counts[gb_level][k] * bits(k) / gb_bw
    l_dram, dram_kind = _max_over_kinds(dram_terms)
    l_gb, gb_kind = _max_over_kinds(gb_terms)

    # First-tile fill before steady state; outputs are produced, not staged.
    setup_terms = {}
    for k in (DataKind.INPUT, DataKind.WEIGHT):
        gb_bw = _bw_checked(hw.gb_bw(k), f"bw_gb[{k}]")
        rf_bw = _bw_checked(hw.rf_bw(k), f"bw_rf[{k}]")
        fill_gb = plan.v_ref[(k, MemLevel.GB)] * bits(k) / min(gb_bw, bw_dram)
        fill_rf = plan.v_ref[(k, MemLevel.RF)] * bits(k) / min(rf_bw, gb_bw)
        setup_terms[k] = max(fill_gb, fill_rf)
    l_setup, setup_kind = _max_over_kinds(setup_terms)

    steady = max(l_dram, l_gb, l_comp)
    if steady == l_comp:
        bottleneck = "comp"
    elif steady == l_dram:
        bottleneck = "dram"
    else:
        bottleneck = "gb"
    return LatencyReport(
        l_comp_s=l_comp,
        l_dram_s=l_dram,
        l_gb_s=l_gb,
        l_setup_s=l_setup,
        l_total_s=l_setup + steady,
        bottleneck=bottleneck,
        dram_kind=dram_kind,
        gb_kind=gb_kind,
        setup_kind=setup_kind,
    )


@dataclass(frozen=True)
class PredictionReport:
    layer: LayerShape
    nest: LoopNest
    refresh: RefreshLocations
    options: Options
    plan: RefreshPlan
    n_mac: int
    n_mac_padded: int
    n_pe_active: int
    access: AccessCounts
    energy: EnergyReport
    latency: LatencyReport
    throughput_gops: float

    def to_dict(self) -> dict:
        lat = self.latency
        return {
            "layer": {
                "name": self.layer.name,
                **{d: self.layer.dim(d) for d in ("m", "c", "r", "s", "e", "f")},
                "stride": self.layer.stride,
            },
            "n_mac": self.n_mac,
            "n_mac_padded": self.n_mac_padded,
            "n_pe_active": self.n_pe_active,
            "access_counts_elements": {
                lvl.label: {str(k): self.access[lvl][k] for k in KINDS}
                for lvl in (MemLevel.DRAM, MemLevel.GB, MemLevel.NOC, MemLevel.RF)
            },
            "energy_units": {
                "comp": self.energy.e_comp,
                "rf": self.energy.e_rf,
                "noc": self.energy.e_noc,
                "gb": self.energy.e_gb,
                "dram": self.energy.e_dram,
                "total": self.energy.total,
                "by_level_kind": {
                    lvl.label: {
                        str(k): self.energy.by_level_kind[lvl][k] for k in KINDS
                    }
                    for lvl in (MemLevel.DRAM, MemLevel.GB, MemLevel.NOC, MemLevel.RF)
                },
            },
            "onchip_breakdown_pct": self.energy.onchip_breakdown_pct(),
            "latency_s": {
                "comp": lat.l_comp_s,
                "dram": lat.l_dram_s,
                "gb": lat.l_gb_s,
                "setup": lat.l_setup_s,
                "total": lat.l_total_s,
                "bottleneck": lat.bottleneck,
                "dram_kind": str(lat.dram_kind) if lat.dram_kind else None,
                "gb_kind": str(lat.gb_kind) if lat.gb_kind else None,
                "setup_kind": str(lat.setup_kind) if lat.setup_kind else None,
            },
            "throughput_gops": self.throughput_gops,
            "model_notes": _model_notes(self.options),
        }


def _model_notes(options: Options) -> dict:
    return {
        # The GB-side latency numerator multiplies refresh count by tile
        # volume; a literal count-times-count reading is not implemented.
        "gb_latency_numerator": "count_times_volume",
        "gb_latency_multicast_aware": options.gb_latency_multicast_aware,
        "literal_eq8": options.literal_eq8,
        "assume_stride_one": options.assume_stride_one,
        "psum_rw_factor": options.psum_factor(),
    }


def predict_layer(
    layer: LayerShape,
    nest: LoopNest,
    refresh: RefreshLocations,
    hw: HardwareConfig,
    options: Options = Options(),
    validate: bool = True,
) -> PredictionReport:
    if validate:
        violations = validate_nest(nest, hw, refresh, options)
        if violations:
            raise MappingError(violations)
    plan = refresh_plan(nest, refresh, options)
    counts = access_counts(plan, options)
    e = energy(plan, layer, hw, options)
    lat = latency(plan, layer, hw, options)
    n_mac = mac_count(layer)
    throughput = 2.0 * n_mac / lat.l_total_s / 1e9
    return PredictionReport(
        layer=layer,
        nest=nest,
        refresh=refresh,
        options=options,
        plan=plan,
        n_mac=n_mac,
        n_mac_padded=plan.n_mac_padded,
        n_pe_active=plan.n_pe_active,
        access=counts,
        energy=e,
        latency=lat,
        throughput_gops=throughput,
    )


@dataclass(frozen=True)
class NetworkReport:
    reports: tuple[PredictionReport, ...]
    energy_total: float
    latency_total_s: float
    n_mac: int
    n_mac_padded: int
    throughput_gops: float

    def to_dict(self) -> dict:
        return {
            "layers": [r.to_dict() for r in self.reports],
            "totals": {
                "n_mac": self.n_mac,
                "n_mac_padded": self.n_mac_padded,
                "energy_units": self.energy_total,
                "latency_s": self.latency_total_s,
                "throughput_gops": self.throughput_gops,
            },
        }


def predict_network(
    items,
    hw: HardwareConfig,
    options: Options = Options(),
    validate: bool = True,
) -> NetworkReport:
    """Aggregate over (layer, nest, refresh) triples; layers run back to
    back, each paying its own setup."""
    reports = tuple(
        predict_layer(layer, nest, refresh, hw, options, validate)
        for layer, nest, refresh in items
    )
    if not reports:
        raise ConfigError("predict_network needs at least one layer")
    energy_total = sum(r.energy.total for r in reports)
    latency_total = sum(r.latency.l_total_s for r in reports)
    n_mac = sum(r.n_mac for r in reports)
    return NetworkReport(
        reports=reports,
        energy_total=energy_total,
        latency_total_s=latency_total,
        n_mac=n_mac,
        n_mac_padded=sum(r.n_mac_padded for r in reports),
        throughput_gops=2.0 * n_mac / latency_total / 1e9,
    )
