"""Brute-force counting simulator vs. the closed-form access model."""

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from accel_predict import (
    DataKind,
    InstanceTooLargeError,
    LayerShape,
    LoopLevel,
    LoopNest,
    MappingError,
    MemLevel,
    Options,
    RefreshLocations,
    access_counts,
    check,
    diff_counts,
    refresh_plan,
    simulate,
)
from accel_predict.model import DIMS
from tests.test_model import _hw

I, O, W = DataKind.INPUT, DataKind.OUTPUT, DataKind.WEIGHT
DRAM, GB, NOC, RF = MemLevel.DRAM, MemLevel.GB, MemLevel.NOC, MemLevel.RF


def nest_of(layer, *levels):
    return LoopNest(tuple(LoopLevel(*lv) for lv in levels), layer)


class TestWorkedExample:
    def _setup(self):
        layer = LayerShape(m=4, c=2, r=1, s=1, e=1, f=1)
        nest = nest_of(layer, ("m", 2, DRAM), ("c", 2, GB), ("m", 2, RF))
        refresh = RefreshLocations(
            gb={I: 1, O: 1, W: 1}, rf={I: 2, O: 2, W: 2}
        )
        return nest, refresh

    def test_two_weight_refreshes_of_four_elements(self):
        nest, refresh = self._setup()
        counters = simulate(nest, refresh)
        assert counters.refreshes[GB][W] == 2
        assert counters.elements_moved[DRAM][W] == 2 * 4

    def test_oracle_matches_analytic_on_the_example(self):
        nest, refresh = self._setup()
        assert check(nest, refresh).ok

    def test_body_iterations_equal_padded_mac_count(self):
        nest, refresh = self._setup()
        counters = simulate(nest, refresh)
        assert counters.body_iterations == 8 == nest.padded_mac_count()


class TestMeasurementDetails:
    def test_rf_traffic_is_one_operand_per_mac(self):
        layer = LayerShape(m=2, c=2, r=2, s=2, e=2, f=2)
        nest = nest_of(
            layer, ("m", 2, GB), ("c", 2, GB), ("r", 2, RF), ("s", 2, RF),
            ("e", 2, RF), ("f", 2, RF),
        )
        counters = simulate(nest, RefreshLocations.outermost(nest))
        for kind in DataKind:
            assert counters.elements_moved[RF][kind] == 64

    def test_input_rows_fetched_whole_when_stride_skips(self):
        # stride 3 with a 1x1 kernel touches every third row; transfers
        # are whole rows, so the gaps ride along
        layer = LayerShape(m=1, c=1, r=1, s=1, e=3, f=3, stride=3)
        nest = nest_of(
            layer, ("e", 3, RF), ("f", 3, RF)
        )
        refresh = RefreshLocations.outermost(nest)
        counters = simulate(nest, refresh)
        plan = refresh_plan(nest, refresh)
        assert counters.elements_moved[DRAM][I] == 7 * 7
        assert plan.v_ref[(I, GB)] == 7 * 7

    def test_multicast_measured_from_spatial_projections(self):
        layer = LayerShape(m=2, c=3, r=1, s=1, e=5, f=1)
        nest = nest_of(
            layer,
            ("m", 2, GB), ("c", 3, NOC, True), ("e", 5, NOC, True),
        )
        counters = simulate(nest, RefreshLocations.outermost(nest))
        assert counters.n_pe_active == 15
        assert counters.multicast == {I: 1, O: 3, W: 5}

    def test_psum_factor_inflates_recirculating_outputs_only(self):
        layer = LayerShape(m=2, c=4, r=1, s=1, e=1, f=1)
        # c iterates above the output refreshes: partials recirculate
        nest = nest_of(layer, ("c", 4, GB), ("m", 2, RF))
        refresh = RefreshLocations(
            gb={I: 0, O: 1, W: 0}, rf={I: 1, O: 1, W: 1}
        )
        base = simulate(nest, refresh, options=Options(psum_rw_factor=1))
        twice = simulate(nest, refresh)
        assert twice.elements_moved[DRAM][O] == 2 * base.elements_moved[DRAM][O]
        assert twice.elements_moved[GB][O] == 2 * base.elements_moved[GB][O]
        # reads feeding MACs and per-PE deliveries stay flat forms
        assert twice.elements_moved[NOC][O] == base.elements_moved[NOC][O]
        assert twice.elements_moved[RF][O] == base.elements_moved[RF][O]
        # refresh event counts are raw in both runs
        assert twice.refreshes == base.refreshes

    def test_single_load_outputs_not_inflated(self):
        layer = LayerShape(m=8, c=1, r=1, s=1, e=1, f=1)
        nest = nest_of(layer, ("m", 8, RF))
        refresh = RefreshLocations.outermost(nest)
        counters = simulate(nest, refresh)
        # one refresh -> written once, no read-modify-write traffic
        assert counters.refreshes[GB][O] == 1
        assert counters.elements_moved[DRAM][O] == 8

    def test_oversize_instance_refused(self):
        layer = LayerShape(m=512, c=512, r=1, s=1, e=64, f=64)
        nest = nest_of(
            layer, ("m", 512, GB), ("c", 512, GB), ("e", 64, RF),
            ("f", 64, RF),
        )
        with pytest.raises(InstanceTooLargeError):
            simulate(nest, RefreshLocations.outermost(nest), cap=10**6)

    def test_assume_stride_one_matches_on_both_sides(self):
        layer = LayerShape(m=2, c=2, r=3, s=3, e=4, f=4, stride=2)
        nest = nest_of(
            layer, ("m", 2, GB), ("c", 2, GB), ("r", 3, RF), ("s", 3, RF),
            ("e", 4, RF), ("f", 4, RF),
        )
        refresh = RefreshLocations.outermost(nest)
        opts = Options(assume_stride_one=True)
        assert check(nest, refresh, options=opts).ok
        relaxed = simulate(nest, refresh, options=opts)
        strided = simulate(nest, refresh)
        assert (
            relaxed.elements_moved[DRAM][I] < strided.elements_moved[DRAM][I]
        )


class TestDiff:
    def _small(self):
        layer = LayerShape(m=4, c=2, r=1, s=1, e=1, f=1)
        nest = nest_of(layer, ("m", 2, DRAM), ("c", 2, GB), ("m", 2, RF))
        refresh = RefreshLocations(
            gb={I: 1, O: 1, W: 1}, rf={I: 2, O: 2, W: 2}
        )
        return nest, refresh

    def test_fault_injection_names_the_bad_cell(self):
        nest, refresh = self._small()
        plan = refresh_plan(nest, refresh)
        analytic = access_counts(plan)
        analytic[GB][W] += 1  # inject a mistake
        diff = diff_counts(plan, analytic, simulate(nest, refresh))
        assert not diff.ok
        bad = diff.mismatches
        assert len(bad) == 1
        assert (bad[0].metric, bad[0].level, bad[0].kind) == ("elements", GB, W)
        assert bad[0].analytic == bad[0].oracle + 1

    def test_diff_covers_all_cells(self):
        nest, refresh = self._small()
        plan = refresh_plan(nest, refresh)
        diff = diff_counts(plan, access_counts(plan), simulate(nest, refresh))
        elements = [r for r in diff.rows if r.metric == "elements"]
        refreshes = [r for r in diff.rows if r.metric == "refreshes"]
        assert len(elements) == 12  # 4 levels x 3 kinds
        assert len(refreshes) == 6  # GB/RF x 3 kinds

    def test_check_validates_against_hardware_when_given(self):
        layer = LayerShape(m=17, c=1, r=1, s=1, e=1, f=1)
        nest = nest_of(layer, ("m", 17, NOC, True))
        hw = _hw(pe_rows=4, pe_cols=4)
        with pytest.raises(MappingError):
            check(nest, RefreshLocations.outermost(nest), hw)


# ------------------------- randomized equivalence (small, fast cases)


@st.composite
def legal_instances(draw):
    """A random legal nest + refresh with a small temporal space."""
    n_loops = draw(st.integers(1, 7))
    mems = sorted(
        draw(
            st.lists(
                st.sampled_from(list(MemLevel)),
                min_size=n_loops, max_size=n_loops,
            )
        ),
        reverse=True,
    )
    levels = []
    products = {d: 1 for d in DIMS}
    for mem in mems:
        dim = draw(st.sampled_from(DIMS))
        bound = draw(st.integers(1, 3))
        products[dim] *= bound
        levels.append(LoopLevel(dim, bound, mem, spatial=(mem is NOC)))
    stride = draw(st.integers(1, 3))
    layer = LayerShape(
        **{d: products[d] for d in DIMS}, stride=stride
    )
    nest = LoopNest(tuple(levels), layer)

    p_noc = nest.group_start(NOC)
    end = len(levels)
    gb, rf = {}, {}
    for kind in DataKind:
        gb[kind] = draw(st.integers(0, p_noc))
        rf[kind] = draw(st.integers(gb[kind], end))
    psum = draw(st.sampled_from([None, 1, 3]))
    return nest, RefreshLocations(gb=gb, rf=rf), Options(psum_rw_factor=psum)


@settings(
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
@given(legal_instances())
def test_analytic_counts_equal_brute_force(instance):
    nest, refresh, options = instance
    diff = check(nest, refresh, options=options)
    assert diff.ok, "\n".join(str(r) for r in diff.mismatches)


@settings(
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
@given(legal_instances())
def test_body_iterations_match_padded_macs(instance):
    nest, refresh, options = instance
    counters = simulate(nest, refresh, options=options)
    assert counters.body_iterations == nest.padded_mac_count()
    assert counters.macs_per_pe * counters.n_pe_active == counters.body_iterations
