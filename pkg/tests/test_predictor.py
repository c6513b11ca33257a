"""Energy, latency, and throughput closed forms."""

import math

import pytest

from accel_predict import (
    ConfigError,
    DataKind,
    LayerShape,
    LoopLevel,
    LoopNest,
    MappingError,
    MemLevel,
    Options,
    Precision,
    RefreshLocations,
    UnitCosts,
    access_counts,
    build_nest,
    energy,
    latency,
    mac_count,
    predict_layer,
    predict_network,
    refresh_plan,
    tensor_footprint,
)
from tests.test_model import _hw

I, O, W = DataKind.INPUT, DataKind.OUTPUT, DataKind.WEIGHT
DRAM, GB, NOC, RF = MemLevel.DRAM, MemLevel.GB, MemLevel.NOC, MemLevel.RF


def single_pe_setup():
    """Everything in one PE's registers, loaded exactly once."""
    layer = LayerShape(m=2, c=3, r=2, s=2, e=4, f=4)
    nest = build_nest(
        layer,
        {RF: {"m": 2, "c": 3, "r": 2, "s": 2, "e": 4, "f": 4}},
    )
    refresh = RefreshLocations.outermost(nest)
    return layer, nest, refresh


class TestAccessCounts:
    def test_single_pe_counts_footprints_once_and_macs_at_rf(self):
        layer, nest, refresh = single_pe_setup()
        counts = access_counts(refresh_plan(nest, refresh))
        n = mac_count(layer)
        for kind in DataKind:
            foot = tensor_footprint(layer, kind)
            assert counts[DRAM][kind] == foot
            assert counts[GB][kind] == foot
            assert counts[NOC][kind] == foot
            assert counts[RF][kind] == n

    def test_counts_are_integers(self):
        layer, nest, refresh = single_pe_setup()
        counts = access_counts(refresh_plan(nest, refresh))
        for level in counts.values():
            for v in level.values():
                assert isinstance(v, int)

    def test_psum_factor_applies_at_dram_and_gb_only(self):
        layer = LayerShape(m=2, c=4, r=1, s=1, e=1, f=1)
        nest = LoopNest(
            (LoopLevel("c", 4, GB), LoopLevel("m", 2, RF)), layer
        )
        refresh = RefreshLocations(
            gb={I: 0, O: 1, W: 0}, rf={I: 1, O: 1, W: 1}
        )
        plan = refresh_plan(nest, refresh)
        flat = access_counts(plan, Options(psum_rw_factor=1))
        doubled = access_counts(plan)
        assert doubled[DRAM][O] == 2 * flat[DRAM][O]
        assert doubled[GB][O] == 2 * flat[GB][O]
        assert doubled[NOC][O] == flat[NOC][O]
        assert doubled[RF][O] == flat[RF][O]
        for kind in (I, W):
            for lvl in (DRAM, GB, NOC, RF):
                assert doubled[lvl][kind] == flat[lvl][kind]


class TestEnergy:
    def test_single_pe_closed_form(self):
        layer, nest, refresh = single_pe_setup()
        hw = _hw()
        rep = energy(refresh_plan(nest, refresh), layer, hw)
        n = mac_count(layer)
        feet = {k: tensor_footprint(layer, k) for k in DataKind}
        assert rep.e_comp == pytest.approx(1.0 * n)
        assert rep.e_rf == pytest.approx(1.0 * n * 3)
        assert rep.e_noc == pytest.approx(2.0 * sum(feet.values()))
        assert rep.e_gb == pytest.approx(6.0 * sum(feet.values()))
        assert rep.e_dram == pytest.approx(200.0 * sum(feet.values()))
        assert rep.total == pytest.approx(
            rep.e_comp + rep.e_rf + rep.e_noc + rep.e_gb + rep.e_dram
        )

    def test_energy_scales_linearly_with_unit_costs(self):
        layer, nest, refresh = single_pe_setup()
        plan = refresh_plan(nest, refresh)
        base = energy(plan, layer, _hw())
        uc = UnitCosts(
            e_mac=3.0,
            e_access={
                DRAM: {k: 600.0 for k in DataKind},
                GB: {k: 18.0 for k in DataKind},
                NOC: {k: 6.0 for k in DataKind},
                RF: {k: 3.0 for k in DataKind},
            },
            t_comp=1e-9,
        )
        tripled = energy(plan, layer, _hw(unit_costs=uc))
        assert tripled.total == pytest.approx(3 * base.total)

    def test_breakdowns_sum_to_hundred(self):
        layer, nest, refresh = single_pe_setup()
        rep = energy(refresh_plan(nest, refresh), layer, _hw())
        assert sum(rep.breakdown_pct().values()) == pytest.approx(100.0)
        assert sum(rep.onchip_breakdown_pct().values()) == pytest.approx(100.0)

    def test_zero_cost_hardware_reports_zero_shares(self):
        layer, nest, refresh = single_pe_setup()
        hw = _hw(unit_costs=UnitCosts(e_mac=0.0, t_comp=1e-9))
        rep = energy(refresh_plan(nest, refresh), layer, hw)
        assert rep.total == 0.0
        assert set(rep.breakdown_pct().values()) == {0.0}


class TestLatency:
    def test_single_pe_terms(self):
        layer, nest, refresh = single_pe_setup()
        hw = _hw()  # dram 1e9, gb 2e9, rf 4e9, t_comp 1ns
        plan = refresh_plan(nest, refresh)
        rep = latency(plan, layer, hw)
        n = mac_count(layer)
        assert rep.l_comp_s == pytest.approx(n * 1e-9)
        worst_dram = max(
            tensor_footprint(layer, k) * 16 / 1e9 for k in DataKind
        )
        assert rep.l_dram_s == pytest.approx(worst_dram)
        worst_gb = max(
            tensor_footprint(layer, k) * 16 / 2e9 for k in DataKind
        )
        assert rep.l_gb_s == pytest.approx(worst_gb)
        fill = max(
            tensor_footprint(layer, k) * 16 / 1e9 for k in (I, W)
        )
        assert rep.l_setup_s == pytest.approx(fill)  # rf fill is faster
        assert rep.l_total_s == pytest.approx(
            rep.l_setup_s + max(rep.l_comp_s, rep.l_dram_s, rep.l_gb_s)
        )

    def test_bottleneck_labels(self):
        layer, nest, refresh = single_pe_setup()
        plan = refresh_plan(nest, refresh)
        slow_dram = latency(plan, layer, _hw(bw_dram=1e3))
        assert slow_dram.bottleneck == "dram"
        fast_mem = latency(
            plan, layer, _hw(bw_dram=math.inf, bw_gb=math.inf,
                             bw_rf=math.inf)
        )
        assert fast_mem.bottleneck == "comp"
        assert fast_mem.l_dram_s == 0.0
        assert fast_mem.l_gb_s == 0.0
        assert fast_mem.l_setup_s == 0.0

    def test_gb_bound_mapping(self):
        # heavy reuse: NoC deliveries far exceed DRAM traffic, so a slow
        # buffer port dominates while DRAM stays fast
        layer = LayerShape(m=8, c=8, r=1, s=1, e=8, f=8)
        nest = build_nest(
            layer, {GB: {"c": 8}, RF: {"m": 8, "e": 8, "f": 8}}
        )
        refresh = RefreshLocations.outermost(nest)
        plan = refresh_plan(nest, refresh)
        rep = latency(plan, layer, _hw(bw_dram=1e12, bw_gb=1e6))
        assert rep.bottleneck == "gb"

    def test_zero_bandwidth_raises_named_error(self):
        layer, nest, refresh = single_pe_setup()
        plan = refresh_plan(nest, refresh)
        with pytest.raises(ConfigError) as exc:
            latency(plan, layer, _hw(bw_dram=0.0))
        assert "bw_dram" in str(exc.value)
        with pytest.raises(ConfigError) as exc:
            latency(plan, layer, _hw(bw_gb={I: 1e9, O: 1e9, W: 0.0}))
        assert "bw_gb[W]" in str(exc.value)

    def test_literal_compute_bound_ignores_spatial_speedup(self):
        layer = LayerShape(m=4, c=1, r=1, s=1, e=2, f=2)
        nest = build_nest(layer, {NOC: {"m": 4}, RF: {"e": 2, "f": 2}})
        refresh = RefreshLocations.outermost(nest)
        plan = refresh_plan(nest, refresh)
        hw = _hw()
        parallel = latency(plan, layer, hw)
        serial = latency(plan, layer, hw, Options(literal_eq8=True))
        assert serial.l_comp_s == pytest.approx(4 * parallel.l_comp_s)

    def test_multicast_aware_buffer_term_is_never_slower(self):
        layer = LayerShape(m=4, c=2, r=1, s=1, e=3, f=1)
        nest = build_nest(
            layer, {GB: {"m": 4}, NOC: {"c": 2, "e": 3}}
        )
        refresh = RefreshLocations.outermost(nest)
        plan = refresh_plan(nest, refresh)
        hw = _hw(pe_rows=3, pe_cols=2)
        default = latency(plan, layer, hw)
        aware = latency(
            plan, layer, hw, Options(gb_latency_multicast_aware=True)
        )
        assert aware.l_gb_s <= default.l_gb_s

    @pytest.mark.parametrize("field", ["bw_dram", "bw_gb", "bw_rf"])
    def test_latency_monotone_in_each_bandwidth(self, field):
        layer = LayerShape(m=4, c=3, r=2, s=2, e=5, f=5, stride=2)
        nest = build_nest(
            layer,
            {DRAM: {"m": 2}, GB: {"c": 3}, NOC: {"e": 5},
             RF: {"m": 2, "r": 2, "s": 2, "f": 5}},
        )
        refresh = RefreshLocations.outermost(nest)
        plan = refresh_plan(nest, refresh)
        prev = None
        for bw in (1e6, 1e7, 1e8, 1e9, 1e10, 1e11, math.inf):
            rep = latency(plan, layer, _hw(**{field: bw}))
            if prev is not None:
                assert rep.l_total_s <= prev + 1e-15
            prev = rep.l_total_s


def roomy_hw():
    return _hw(capacity_gb=10**9, capacity_rf=10**6)


class TestPredictLayer:
    def test_throughput_identity(self):
        layer, nest, refresh = single_pe_setup()
        rep = predict_layer(layer, nest, refresh, roomy_hw())
        expected = 2 * mac_count(layer) / rep.latency.l_total_s / 1e9
        assert rep.throughput_gops == pytest.approx(expected, rel=1e-12)

    def test_throughput_counts_true_macs_not_padding(self):
        layer = LayerShape(m=3, c=1, r=1, s=1, e=1, f=1)
        nest = build_nest(layer, {RF: {"m": 2}, GB: {"m": 2}})  # pads to 4
        refresh = RefreshLocations.outermost(nest)
        rep = predict_layer(layer, nest, refresh, roomy_hw())
        assert rep.n_mac == 3
        assert rep.n_mac_padded == 4
        assert rep.throughput_gops == pytest.approx(
            2 * 3 / rep.latency.l_total_s / 1e9
        )

    def test_illegal_mapping_raises_before_prediction(self):
        layer = LayerShape(m=17, c=1, r=1, s=1, e=1, f=1)
        nest = LoopNest(
            (LoopLevel("m", 17, NOC, spatial=True),), layer
        )
        refresh = RefreshLocations.outermost(nest)
        hw = _hw(pe_rows=4, pe_cols=4)
        with pytest.raises(MappingError):
            predict_layer(layer, nest, refresh, hw)
        rep = predict_layer(layer, nest, refresh, hw, validate=False)
        assert rep.n_pe_active == 17

    def test_to_dict_keys_carry_units(self):
        layer, nest, refresh = single_pe_setup()
        d = predict_layer(layer, nest, refresh, roomy_hw()).to_dict()
        assert "energy_units" in d
        assert "latency_s" in d
        assert "throughput_gops" in d
        assert "access_counts_elements" in d
        assert d["model_notes"]["psum_rw_factor"] == 2


class TestPredictNetwork:
    def test_totals_are_sums(self):
        layer, nest, refresh = single_pe_setup()
        items = [(layer, nest, refresh)] * 3
        net = predict_network(items, roomy_hw())
        single = predict_layer(layer, nest, refresh, roomy_hw())
        assert net.energy_total == pytest.approx(3 * single.energy.total)
        assert net.latency_total_s == pytest.approx(
            3 * single.latency.l_total_s
        )
        assert net.n_mac == 3 * single.n_mac
        assert net.throughput_gops == pytest.approx(
            2 * net.n_mac / net.latency_total_s / 1e9
        )

    def test_empty_network_rejected(self):
        with pytest.raises(ConfigError):
            predict_network([], _hw())
