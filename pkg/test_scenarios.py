"""
Test degli scenari: suite predefinite, lettura JSON, espansione in run
"""

import json
from pathlib import Path

import pytest

from allocation_manager import AllocationMethod
from federation_manager import build_grid
from partition_engine import PartitionMethod
from scenario_manager import (DEGREE_TOPOLOGIES, SUITES, describe_suites, load_scenario,
                              method_labels, scenario_for_suite, scenario_from_dict, seed_labels)
from sim_errors import ConfigError

SCENARIOS = Path(__file__).parent / "data" / "scenarios"


def _write(tmp_path, text):
    path = tmp_path / "scenario.json"
    path.write_text(text, encoding="utf-8")
    return path


def test_suite_presets():
    assert len(SUITES) == 8
    assert SUITES["fig5_partitioning"].run_count == 480
    assert SUITES["fig11_scaling_workflows"].degrees == (1, 2, 3, 4)
    assert SUITES["fig7_alloc_monolithic"].loads == (400, 600, 800, 1000)
    assert SUITES["fig7_alloc_monolithic"].mix == 1.0
    assert method_labels(SUITES["fig6_alloc_workflows"]) == [
        "propart/mr", "propart/mect", "propart/mcc", "propart/nofed"]
    assert describe_suites() == describe_suites()


def test_degree_topologies_match_their_degree():
    for degree, ((w, h), origin) in DEGREE_TOPOLOGIES.items():
        assert build_grid(w, h, seed=0).degree(origin) == degree


def test_expand_order_and_seeds():
    s = scenario_for_suite("fig11_scaling_workflows", repetitions=2)
    runs = s.expand()
    assert len(runs) == s.run_count == 4 * 4 * 2
    first_cell = runs[:8]
    assert [r.method_label for r in first_cell[::2]] == method_labels(s)
    assert {r.cell for r in first_cell} == {0}
    assert runs[8].grid == DEGREE_TOPOLOGIES[2][0]
    labels = seed_labels(s)
    assert len(labels) == len(set(labels)) == 8


def test_minimal_and_custom_files_load():
    minimal = load_scenario(SCENARIOS / "minimal.json")
    assert minimal.methods == ((PartitionMethod.PROPART, AllocationMethod.MR),)
    assert minimal.run_count == 3
    assert minimal.master_seed == 7

    custom = load_scenario(SCENARIOS / "custom_workflow.json")
    assert len(custom.methods) == 4
    assert custom.workflows[0]["name"] == "Diamond"
    assert custom.alpha == 0.6
    assert custom.link.bandwidth_mbps == 500.0

    quick = load_scenario(SCENARIOS / "fig7_quick.json")
    assert quick.loads == (400, 1000)
    assert quick.mix == 1.0
    assert not quick.pin_entry


def test_grid_without_origin_uses_center():
    s = scenario_from_dict({"name": "g", "grid": {"w": 5, "h": 3}, "workload": {"requests": [5]},
                            "methods": [["none", "nofed"]]})
    assert s.origin_fog == 7


def test_unknown_key_names_field_and_line(tmp_path):
    path = _write(tmp_path, '{\n  "name": "x",\n  "workload": {"requests": [5]},\n'
                            '  "colour": 3\n}\n')
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert info.value.field == "colour"
    assert info.value.line == 4


def test_out_of_range_value(tmp_path):
    doc = {"name": "x", "methods": [["propart", "mr"]],
           "workload": {"requests": [5], "mix": 2.0}}
    path = _write(tmp_path, json.dumps(doc, indent=2))
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert info.value.field == "workload.mix"
    assert info.value.line is not None


def test_invalid_json_reports_line(tmp_path):
    path = _write(tmp_path, '{\n  "name": "x",\n  "seed": ,\n}\n')
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert info.value.line == 3


@pytest.mark.parametrize("doc, field", [
    ({"workload": {"requests": [5]}, "methods": [["none", "mr"]]}, "name"),
    ({"name": "x", "methods": [["none", "mr"]]}, "workload.requests"),
    ({"name": "x", "workload": {"requests": [5]}, "methods": [["split", "mr"]]}, "methods[0][0]"),
    ({"name": "x", "workload": {"requests": [0]}, "methods": [["none", "mr"]]}, "workload.requests[0]"),
    ({"name": "x", "workload": {"requests": [5]}, "methods": [["none", "mr"]],
      "origin_fog": 12}, "origin_fog"),
    ({"suite": "fig99"}, "suite"),
    ({"suite": "fig11_scaling_workflows", "degrees": [7]}, "degrees[0]"),
    ({"name": "x", "workload": {"requests": [5]}, "methods": [["none", "mr"]],
      "link": {"bandwidth_mbps": -1}}, "link.bandwidth_mbps"),
])
def test_config_errors_name_the_field(doc, field):
    with pytest.raises(ConfigError) as info:
        scenario_from_dict(doc)
    assert info.value.field == field


def test_partition_allocation_product():
    s = scenario_from_dict({"name": "p", "workload": {"requests": [5]},
                            "partition": {"methods": ["none", "mincut"]},
                            "allocation": {"methods": ["mr", "mcc"]}})
    assert method_labels(s) == ["none/mr", "none/mcc", "mincut/mr", "mincut/mcc"]


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
