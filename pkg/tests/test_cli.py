"""CLI subcommands: exit codes, outputs, error surfaces."""

import json

import pytest

from rodworks.cli import main
from rodworks.model import save_document

from conftest import default_params, tetra_network
import numpy as np
from rodworks.model import EdgeNetwork


@pytest.fixture
def tetra_doc(tmp_path):
    path = tmp_path / "tetra.json"
    save_document(tetra_network(), default_params(), path)
    return path


@pytest.fixture
def path_doc(tmp_path):
    net = EdgeNetwork(
        np.array([[0.0, 0, 0], [150.0, 0, 0], [300.0, 0, 40.0]]), ((0, 1), (1, 2))
    )
    path = tmp_path / "path.json"
    save_document(net, default_params(), path)
    return path


@pytest.fixture
def swallowed_doc(tmp_path):
    net = EdgeNetwork(np.array([[0.0, 0, 0], [0.0, 0, 50.0]]), ((0, 1),))
    path = tmp_path / "swallowed.json"
    save_document(net, default_params(socket_length=40.0), path)
    return path


def test_check_feasible(tetra_doc, capsys):
    assert main(["check", str(tetra_doc)]) == 0
    out = capsys.readouterr().out
    assert "0 swallowed" in out


def test_check_json(tetra_doc, capsys):
    assert main(["check", str(tetra_doc), "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["feasible"] is True
    assert data["balance"]["stable"] is True


def test_check_infeasible_exit_code(swallowed_doc):
    assert main(["check", str(swallowed_doc)]) == 1


def test_build_names_swallowed_edge(swallowed_doc, tmp_path, capsys):
    code = main(["build", str(swallowed_doc), "-o", str(tmp_path / "out")])
    assert code == 1
    err = capsys.readouterr().err
    assert "0-1" in err and "swallowed" in err


def test_missing_file_exit_2(tmp_path):
    assert main(["check", str(tmp_path / "nope.json")]) == 2


def test_bad_json_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": [[0,0,0]], "edges": [], "wat": 1}')
    assert main(["check", str(bad)]) == 2


def test_build_outputs(path_doc, tmp_path):
    out = tmp_path / "out"
    assert main(["build", str(path_doc), "-o", str(out)]) == 0
    stls = sorted(p.name for p in out.glob("*.stl"))
    assert stls == ["joint_00.stl", "joint_01.stl", "joint_02.stl"]
    rows = (out / "rods.csv").read_text().strip().splitlines()
    assert rows[0] == "edge,tip,tail,length_mm"
    assert len(rows) == 3  # header + 2 rods


def test_cutplan_and_order(path_doc, tmp_path):
    svg = tmp_path / "cutplan.svg"
    assert main(["cutplan", str(path_doc), "-o", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")
    assert svg.with_suffix(".txt").exists()

    order = tmp_path / "assembly.txt"
    assert main(["order", str(path_doc), "-o", str(order)]) == 0
    text = order.read_text()
    assert text.splitlines()[0].endswith("5 steps")


def test_all_on_path_graph(path_doc, tmp_path):
    out = tmp_path / "all"
    code = main(
        ["all", str(path_doc), "-o", str(out), "--samples", "2000", "--k", "50", "--ao-rays", "16"]
    )
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "assembly.txt",
        "cutplan.svg",
        "cutplan.txt",
        "diagnostics.json",
        "joint_00.stl",
        "joint_01.stl",
        "joint_02.stl",
        "rods.csv",
    ]
    rows = (out / "rods.csv").read_text().strip().splitlines()
    assert len(rows) == 3
    plan = (out / "assembly.txt").read_text()
    assert plan.splitlines()[0].endswith("5 steps")
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["balance"]["stable"] is not None
