import math
import warnings

import pytest

from mdevsp.backend import SolveStatus, get_backend
from mdevsp.formulations import (
    ObjectiveTriple,
    TierBleedWarning,
    build_three_index,
    build_two_index_base,
    check_tier_separation,
    descalarize,
    scalarize,
    triples_equal,
)
from mdevsp.graph import OriginNode, TripNode, build_graph
from mdevsp.model import Instance
from mdevsp.separation import CandidatePoint, trace_integer_paths

from conftest import make_crossing_instance, make_table_instance


@pytest.fixture(scope="module")
def backend():
    return get_backend()


@pytest.fixture(scope="module")
def table_setup():
    instance = make_table_instance()
    return instance, build_graph(instance)


@pytest.fixture(scope="module")
def table_md_setup():
    instance = make_table_instance(two_depots=True)
    return instance, build_graph(instance)


class TestScalarization:
    def test_paper_weight_arithmetic(self):
        triple = ObjectiveTriple(2, 3, 41.5)
        assert scalarize(triple, (100000, 4000, 1)) == pytest.approx(212041.5)

    def test_zero(self):
        assert scalarize(ObjectiveTriple(0, 0, 0.0), (100000, 4000, 1)) == 0.0

    def test_descalarize_recovers_triple(self):
        triple = descalarize(200048.28, (100000, 4000, 1))
        assert triple.n_vehicles == 2
        assert triple.n_charges == 0
        assert triple.deadhead_energy == pytest.approx(48.28)

    def test_round_trip(self):
        weights = (100000, 4000, 1)
        for triple in (ObjectiveTriple(1, 0, 12.25), ObjectiveTriple(5, 7, 3999.0)):
            back = descalarize(scalarize(triple, weights), weights)
            assert triples_equal(back, triple)

    def test_tier_bleed_warning(self, table_setup):
        instance, _ = table_setup
        bad = Instance(
            instance.trips, instance.depots, instance.stations, instance.params,
            instance.locations, instance.t, instance.d, instance.p,
            weights=(30.0, 20.0, 1.0),
        )
        with pytest.warns(TierBleedWarning):
            check_tier_separation(bad)

    def test_paper_weights_no_warning_small_instance(self, table_setup):
        instance, _ = table_setup
        with warnings.catch_warnings():
            warnings.simplefilter("error", TierBleedWarning)
            check_tier_separation(instance)


class TestModelShape:
    def test_three_index_variable_count(self, table_md_setup, backend):
        instance, graph = table_md_setup
        handle = build_three_index(graph, instance, vi=False, backend=backend)
        expected = instance.n_depots * graph.n_arcs + graph.n_nodes
        assert handle.model.num_vars == expected

    def test_two_index_variable_count_independent_of_depots(self, table_md_setup, backend):
        instance, graph = table_md_setup
        handle = build_two_index_base(graph, instance, vi=False, backend=backend)
        assert handle.model.num_vars == graph.n_arcs + graph.n_nodes

    def test_fleet_bound_row_present_with_vi(self, table_setup, backend):
        instance, graph = table_setup
        handle = build_two_index_base(graph, instance, vi=True, backend=backend)
        rows = {name: (lb, ub) for (coeffs, lb, ub, name) in handle.model._rows}
        assert rows["fleet_lb"][0] == 2.0  # two concurrent trips
        handle_off = build_two_index_base(graph, instance, vi=False, backend=backend)
        names_off = {name for (_, _, _, name) in handle_off.model._rows}
        assert "fleet_lb" not in names_off

    def test_big_m_arrangement_and_tightening(self, table_setup, backend):
        instance, graph = table_setup
        params = instance.params
        for vi, big_m in ((False, params.s_max), (True, params.s_max - params.s_min)):
            handle = build_two_index_base(graph, instance, vi=vi, backend=backend)
            arc = (TripNode(1), TripNode(2))
            row = next(
                (coeffs, lb, ub)
                for (coeffs, lb, ub, name) in handle.model._rows
                if name == "prop_t1_t2"
            )
            coeffs, lb, ub = row
            assert ub == pytest.approx(big_m)
            p = graph.arc_energy[arc]
            q2 = instance.trip(2).energy
            assert coeffs[handle.x_vars[arc]] == pytest.approx(p + q2 + big_m)
            assert coeffs[handle.eps_vars[TripNode(2)]] == 1.0
            assert coeffs[handle.eps_vars[TripNode(1)]] == -1.0

    def test_variable_naming_convention(self, table_md_setup, backend):
        instance, graph = table_md_setup
        h3 = build_three_index(graph, instance, vi=False, backend=backend)
        h2 = build_two_index_base(graph, instance, vi=False, backend=backend)
        arc = (OriginNode(0), TripNode(1))
        assert h3.model.var_name(h3.x_vars[(0, arc)]) == "x_0_o0_t1"
        assert h2.model.var_name(h2.x_vars[arc]) == "x_o0_t1"
        assert h2.model.var_name(h2.eps_vars[TripNode(1)]) == "eps_t1"


def _solve_triple(handle):
    res = handle.model.solve()
    assert res.status == SolveStatus.OPTIMAL
    return handle.objective_triple(handle.arc_values(res.values)), res


class TestModelSemantics:
    def test_single_depot_formulations_coincide(self, table_setup, backend):
        instance, graph = table_setup
        t3, _ = _solve_triple(build_three_index(graph, instance, True, backend))
        t2, _ = _solve_triple(build_two_index_base(graph, instance, True, backend))
        assert triples_equal(t3, t2)
        assert t3 == ObjectiveTriple(2, 0, pytest.approx(163.8))

    def test_vi_neutral_for_optimum(self, table_md_setup, backend):
        instance, graph = table_md_setup
        t_off, _ = _solve_triple(build_three_index(graph, instance, False, backend))
        t_on, _ = _solve_triple(build_three_index(graph, instance, True, backend))
        assert triples_equal(t_off, t_on)

    def test_vi_never_weakens_lp_bound(self, backend):
        for instance in (make_table_instance(True), make_crossing_instance()):
            graph = build_graph(instance)
            bound_off = build_two_index_base(graph, instance, False, backend).model.solve(relax=True)
            bound_on = build_two_index_base(graph, instance, True, backend).model.solve(relax=True)
            assert bound_on.objective >= bound_off.objective - 1e-6

    def test_energy_levels_within_bounds(self, table_setup, backend):
        instance, graph = table_setup
        params = instance.params
        handle = build_two_index_base(graph, instance, True, backend)
        res = handle.model.solve()
        eps = handle.eps_values(res.values)
        for node, value in eps.items():
            assert params.s_min - 1e-6 <= value <= params.s_max + 1e-6
        from mdevsp.graph import DestinationNode

        assert eps[DestinationNode(0)] >= params.s_min_dep - 1e-6

    def test_three_index_aggregates_to_valid_two_index_point(self, backend):
        """Summing the per-depot binaries of a 3-index optimum gives an
        integral 2-index point with correct depot pairing everywhere."""
        instance = make_crossing_instance()
        graph = build_graph(instance)
        handle = build_three_index(graph, instance, True, backend)
        res = handle.model.solve()
        assert res.status == SolveStatus.OPTIMAL
        aggregated = handle.arc_values(res.values)
        candidate = CandidatePoint.from_arc_values(
            {a: round(v) for a, v in aggregated.items()}
        )
        assert candidate.integral
        assert trace_integer_paths(graph, candidate) == []
        # trip cover under aggregation
        for tr in instance.trips:
            node = TripNode(tr.id)
            inflow = sum(candidate.value((t, node)) for t in graph.predecessors[node])
            assert inflow == pytest.approx(1.0)

    def test_lp_export_of_formulation(self, table_setup, backend, tmp_path):
        instance, graph = table_setup
        handle = build_two_index_base(graph, instance, True, backend)
        path = tmp_path / "f.lp"
        handle.model.write_lp(path)
        text = path.read_text()
        assert "x_o0_t1" in text and "eps_t1" in text and "fleet_lb" in text
