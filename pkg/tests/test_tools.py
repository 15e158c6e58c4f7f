import inspect

import pytest

from resources.models import builtin_model_catalog, builtin_model_text
from tools.simulation import analysis, run
from tools.simulation.analysis import compare_methods, step_count_report
from tools.simulation.run import describe_model, list_builtin_models, simulate_model


@pytest.mark.parametrize("module", [run, analysis])
def test_modules_export_their_tools(module):
    tools = {
        name
        for name, obj in inspect.getmembers(module, inspect.isfunction)
        if obj.__module__ == module.__name__ and not name.startswith("_")
    }
    assert sorted(module.__all__) == sorted(tools)


def test_simulate_model():
    result = simulate_model("bsubtilis", method="s", t_end=2.0, n_trajectories=2, grid_points=5)
    assert result["success"] is True
    assert result["species"] == ["S1", "S2", "S3"]
    assert len(result["trajectories"]) == 2
    assert len(result["trajectories"][0]) == 5
    assert result["stats"][0]["steps_total"] > 0


def test_simulate_model_reports_errors():
    assert simulate_model("nonexistent")["success"] is False
    assert simulate_model("bsubtilis", method="euler")["success"] is False
    assert simulate_model("bsubtilis", epsilon=2.0)["success"] is False
    assert simulate_model("bsubtilis", n_trajectories=0)["success"] is False


def test_list_and_describe():
    listing = list_builtin_models()
    assert listing["success"] is True
    assert {m["name"] for m in listing["models"]} >= {"dimer_nonstiff", "lacz_small", "isomerization"}
    described = describe_model("lacz_small")
    assert described["success"] is True
    assert described["n_species"] == 23
    assert describe_model("file:/nonexistent/path.net")["success"] is False


def test_compare_methods():
    result = compare_methods("isomerization", methods=["s"], t_end=1.0, n_samples=20)
    assert result["success"] is True
    assert set(result["errors"]) == {"s"}
    assert 0.0 <= result["errors"]["s"]["mean_error"] <= 2.0


def test_step_count_report():
    result = step_count_report("isomerization", methods=["r"], t_end=1.0, repetitions=2)
    assert result["success"] is True
    assert [row["method"] for row in result["rows"]] == ["ssa", "r"]


def test_model_resources():
    assert "dimer_stiff" in builtin_model_catalog().splitlines()
    assert builtin_model_text("isomerization").startswith("#")
    assert builtin_model_text("nope").startswith("#")
