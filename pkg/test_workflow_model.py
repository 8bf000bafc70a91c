"""
Test del modello dei workflow: template, validazione DAG, deadline, formato JSON
"""

import math

import pytest

from latency_dist import NormalSpec
from sim_errors import ConfigError, InvalidParameterError, MissingProfileError, NotADagError
from workflow_model import (APPS, DeadlinePolicy, Edge, MicroServiceSpec, WorkflowSpec,
                            app_work_profile, assign_deadlines, builtin_app, builtin_catalog,
                            input_sizes, to_monolithic, topological_order, validate_dag,
                            workflow_from_dict, workload_types)


def _vertex(vid, mean=100.0, out=1.0, pinned=False):
    return MicroServiceSpec(vid, "Test", vid, NormalSpec(mean, 0.0), out, pinned)


def test_fire_template_shape():
    fire = builtin_app("Fire")
    assert len(fire) == 7
    assert fire.entries() == [fire.vertices[0].id]
    assert fire.exits() == [fire.vertices[-1].id]
    assert fire.vertices[0].location_pinned
    assert not any(v.location_pinned for v in fire.vertices[1:])
    assert [e.data_mb for e in fire.edges] == [10.0, 10.0, 8.0, 2.0, 1.0, 0.5]
    assert validate_dag(fire).ok


def test_catalog_sizes():
    catalog = builtin_catalog()
    assert list(catalog) == list(APPS)
    assert {name: len(w) for name, w in catalog.items()} == {"Fire": 7, "HAR": 4, "Oil": 5, "AIE": 4}
    for w in catalog.values():
        assert validate_dag(w).ok


def test_monolithic_keeps_total_work():
    for app in APPS:
        w = builtin_app(app)
        mono = to_monolithic(w)
        total = app_work_profile(app)
        assert len(mono) == 1
        assert math.isclose(mono.vertices[0].work.mean, total.mean, rel_tol=1e-9)
        assert math.isclose(mono.vertices[0].work.std_dev, total.std_dev, rel_tol=1e-9)
    assert to_monolithic(builtin_app("Fire")).pinned


def test_pin_entry_flag():
    assert builtin_app("Fire").pinned
    assert not builtin_app("Fire", pin_entry=False).pinned


def test_deadline_formula():
    w = WorkflowSpec.chain("two", [_vertex("a"), _vertex("b")])
    r = assign_deadlines(w, 100.0, DeadlinePolicy(50.0, 20.0), {"a": 10.0, "b": 10.0},
                         request_id=3, origin_fog=2)
    assert r.per_service_deadlines == {"a": 180.0, "b": 180.0}
    assert r.workflow_deadline == 260.0
    assert r.relative_deadline == 160.0
    assert r.sub_deadline(["b"]) == 80.0
    assert r.origin_fog == 2 and r.id == 3


def test_deadline_missing_profile():
    w = WorkflowSpec.chain("two", [_vertex("a"), _vertex("b")])
    with pytest.raises(MissingProfileError):
        assign_deadlines(w, 0.0, DeadlinePolicy(), {"a": 10.0})


@pytest.mark.parametrize("mean", [0.0, -5.0])
def test_deadline_rejects_non_positive_mean(mean):
    w = WorkflowSpec.chain("two", [_vertex("a"), _vertex("b")])
    with pytest.raises(InvalidParameterError):
        assign_deadlines(w, 0.0, DeadlinePolicy(), {"a": 10.0, "b": mean})


def test_cycle_detection():
    w = WorkflowSpec("loop", (_vertex("a"), _vertex("b")), (Edge("a", "b", 1.0), Edge("b", "a", 1.0)))
    report = validate_dag(w)
    assert not report.ok
    assert any("ciclo" in v for v in report.violations)
    with pytest.raises(NotADagError):
        topological_order(w)


def test_validation_catches_structure_problems():
    disconnected = WorkflowSpec("split", (_vertex("a"), _vertex("b")))
    assert not validate_dag(disconnected).ok
    wrong_data = WorkflowSpec("data", (_vertex("a", out=2.0), _vertex("b")), (Edge("a", "b", 1.0),))
    assert not validate_dag(wrong_data).ok
    inner_pin = WorkflowSpec.chain("pin", [_vertex("a"), _vertex("b", pinned=True)])
    assert not validate_dag(inner_pin).ok


def test_topological_order_is_lexicographic():
    w = WorkflowSpec("diamond", (_vertex("s"), _vertex("y"), _vertex("x"), _vertex("t")),
                     (Edge("s", "x", 1.0), Edge("s", "y", 1.0), Edge("x", "t", 1.0), Edge("y", "t", 1.0)))
    assert topological_order(w) == ["s", "x", "y", "t"]


def test_json_document_carries_output_on_edges():
    w = workflow_from_dict({
        "name": "Fan", "input_mb": 4.0,
        "vertices": [
            {"id": "f.p", "work": {"mean_mi": 200, "std_mi": 40}, "output_mb": 3.0, "pinned": True},
            {"id": "f.q", "work": {"mean_mi": 100, "std_mi": 10}, "output_mb": 0.5},
            {"id": "f.s", "work": {"mean_mi": 150, "std_mi": 20}, "output_mb": 0.2},
        ],
        "edges": [{"from": "f.p", "to": "f.s"}, {"from": "f.q", "to": "f.s"}],
    })
    assert w.entries() == ["f.p", "f.q"]
    assert w.edge_data_mb("f.p", "f.s") == 3.0
    assert w.edge_data_mb("f.q", "f.s") == 0.5
    assert w.input_data_mb("f.s") == 3.5
    assert w.input_data_mb("f.p") == 4.0
    assert w.pinned
    with pytest.raises(InvalidParameterError):
        w.edge_data_mb("f.s", "f.p")


def test_json_errors_name_the_field():
    with pytest.raises(ConfigError) as info:
        workflow_from_dict({"name": "x", "vertices": [{"id": "a"}]})
    assert info.value.field == "workflow.vertices[0]"

    doc = {"name": "x",
           "vertices": [{"id": "a", "work": {"mean_mi": 10}}, {"id": "b", "work": {"mean_mi": 10}}],
           "edges": [{"from": "a", "to": "c"}]}
    with pytest.raises(ConfigError) as info:
        workflow_from_dict(doc)
    assert info.value.field == "workflow.edges[0]"


def test_type_tables():
    catalog = builtin_catalog()
    types = workload_types(catalog)
    assert "fire.mono" in types
    assert "fire.0.capture" in types
    sizes = input_sizes(catalog)
    assert sizes["fire.0.capture"] == 10.0
    assert sizes["fire.1.pre-processing"] == 10.0
    assert sizes["fire.mono"] == 10.0
    assert sizes["har.mono"] == 1.0


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
