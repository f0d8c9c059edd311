import json
import subprocess
import sys

import pytest

from emmbound.cli import (CONFIG_ENV, EXIT_INFEASIBLE, EXIT_NO_REGION, EXIT_NOT_CONVERGED, EXIT_OK,
                          EXIT_SINGULAR, EXIT_UNDECIDED, EXIT_USAGE, load_config, main)
from emmbound.report import BoundsReport
from emmbound.scanner import BoundingRectangle


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_feasible_exit_codes(capsys):
    code, out, _ = run(capsys, "feasible", "--alpha", "-3", "--pmax", "32",
                       "--er", "1.225844", "--ei", "0.760030", "--json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["status"] == "Feasible" and len(doc["witness"]) == 5
    code, out, _ = run(capsys, "feasible", "--alpha", "-3", "--pmax", "28", "--er", "1.5", "--ei", "0.9")
    assert code == EXIT_INFEASIBLE and out.startswith("Infeasible")
    code, _, _ = run(capsys, "feasible", "--alpha", "-3", "--pmax", "40", "--er", "1.2261",
                     "--ei", "0.7601", "--max-iter", "2")
    assert code == EXIT_UNDECIDED


def test_feasible_usage_and_singular(capsys):
    assert run(capsys, "feasible", "--alpha", "-3", "--pmax", "24", "--er", "-1", "--ei", "0.5")[0] == EXIT_USAGE
    assert run(capsys, "feasible", "--alpha", "-3", "--pmax", "6", "--er", "1", "--ei", "0.5")[0] == EXIT_USAGE
    code, out, _ = run(capsys, "feasible", "--alpha", "-2", "--pmax", "24", "--er", "0.62", "--ei", "0",
                       "--json")
    assert code == EXIT_SINGULAR and json.loads(out)["status"] == "MapSingular"
    code, _, _ = run(capsys, "feasible", "--alpha", "0", "--pmax", "24", "--er", "1.15", "--ei", "0",
                     "--pipeline", "appendix")
    assert code == EXIT_SINGULAR


def test_argparse_errors_map_to_usage(capsys):
    with pytest.raises(SystemExit) as info:
        main(["feasible", "--alpha", "x"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == EXIT_USAGE
    assert run(capsys, "oracle")[0] == EXIT_USAGE


def test_trace_file(capsys, tmp_path):
    path = tmp_path / "trace.jsonl"
    code, _, _ = run(capsys, "feasible", "--alpha", "-3", "--pmax", "28", "--er", "1.5", "--ei", "0.9",
                     "--trace", str(path))
    assert code == EXIT_INFEASIBLE
    recs = [json.loads(l) for l in path.read_text().splitlines()]
    assert recs and all("margin" in r for r in recs)


def test_config_file_and_environment(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("max_iter = 2\nprec = 160\n")
    assert load_config(str(cfg)) == {"max_iter": 2, "prec": 160}
    args = ["feasible", "--alpha", "-3", "--pmax", "40", "--er", "1.2261", "--ei", "0.7601"]
    assert run(capsys, *args, "--config", str(cfg))[0] == EXIT_UNDECIDED
    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    assert run(capsys, *args)[0] == EXIT_UNDECIDED
    # command-line values win over the file
    assert run(capsys, *args, "--max-iter", "500")[0] in (EXIT_OK, EXIT_INFEASIBLE)
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(capsys, *args, "--config", str(bad))[0] == EXIT_USAGE


def test_bound_far_window_has_no_region(capsys, tmp_path):
    code, out, _ = run(capsys, "bound", "--alpha", "-3", "--pmax", "24", "--er-range", "2.2", "2.8",
                       "--ei-range", "0.2", "0.6", "--grid", "4", "4", "--no-ladder", "--workers", "1",
                       "--out", str(tmp_path))
    assert code == EXIT_NO_REGION
    assert "no feasible region" in out
    assert (tmp_path / "bounds_main_a-3_p24.json").exists()


def test_bound_json_is_deterministic_without_meta(capsys):
    args = ["bound", "--alpha", "-2", "--pmax", "20", "--er-range", "0.3", "0.8", "--ei-range",
            "-0.12", "0.12", "--grid", "6", "6", "--no-ladder", "--workers", "1", "--json", "--no-meta"]
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == EXIT_OK
    assert out1 == out2
    doc = json.loads(out1)
    assert "meta" not in doc
    rect = doc["rectangles"][0]
    assert rect["ei_lo"] == -rect["ei_hi"] and rect["er_lo"] < 0.6209137 < rect["er_hi"]


def test_bound_rejects_bad_window(capsys):
    code, _, err = run(capsys, "bound", "--alpha", "-3", "--pmax", "24", "--er-range", "2", "1")
    assert code == EXIT_USAGE and "E_R" in err
    code, _, _ = run(capsys, "appendix-bound", "--alpha", "-3", "--pmax", "10", "--start-order", "10")
    assert code == EXIT_USAGE


def test_oracle_command(capsys):
    code, out, _ = run(capsys, "oracle", "--alpha", "-3", "-2", "--states", "1")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert [round(e["re"], 5) for e in doc["energies"]] == [1.22585, 0.62091]
    code, out, _ = run(capsys, "oracle", "--alpha", "0", "--states", "1", "--scaling", "32")
    assert json.loads(out)["scaling"][0]["residual"] < 1e-6
    code, out, _ = run(capsys, "oracle", "--alpha", "-3", "--basis-dim", "8")
    assert code == EXIT_NOT_CONVERGED and json.loads(out)["error"] == "NotConverged"
    assert run(capsys, "oracle", "--critical", "--window", "-2", "-1")[0] == EXIT_USAGE


def test_report_round_trip():
    r = BoundingRectangle(1.0, 1.1, 0.2, 0.3, 24, -3.0, 0, True)
    rep = BoundsReport(-3.0, 24, "main", [r], {"Feasible": 3}, [20, 24], {24: [r]}, {"t": 1})
    again = BoundsReport.from_json(json.loads(rep.dumps()))
    assert again == rep
    assert "meta" not in json.loads(rep.dumps(include_meta=False))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "emmbound", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
