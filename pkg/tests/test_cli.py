import csv
import hashlib
import json
import time
from pathlib import Path

import pytest

from segchain.cli import main
from segchain.segmentation import read_segment_dump

DATA = Path(__file__).parent / "data"


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_missing_config_exits_2(tmp_path, capsys):
    code = main(["simulate", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "nope.cfg" in capsys.readouterr().err


def test_bad_config_value_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("m = -3\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_simulate_outputs_and_determinism(tmp_path):
    cfg = tmp_path / "ref.cfg"
    cfg.write_text("m = 8\ns0 = 4\niterations = 500\nseed = 12\n")
    t0 = time.perf_counter()
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert time.perf_counter() - t0 < 10
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    for name in ("outcome.json", "events.jsonl", "roster.csv", "proof.json", "chain_view.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["seed"] == 12 and manifest["config"]["m"] == 8
    assert "outcome.json" in manifest["outputs"]
    rows = list(csv.reader((a / "roster.csv").open()))
    assert rows[0] == ["identity_key", "occupation", "segment", "status", "honest"]
    assert main(["verify-proof", str(a / "proof.json"), str(a / "chain_view.json")]) == 0


def test_manifest_reproduces(tmp_path):
    assert main(["simulate", "--m", "3", "--s", "2", "--iterations", "80", "--seed", "4",
                 "--adversary-fraction", "0.3", "--out", str(tmp_path / "a")]) == 0
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    cfg = tmp_path / "again.cfg"
    cfg.write_text("".join(f"{k} = {v}\n" for k, v in manifest["config"].items()))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "outcome.json").read_bytes() == (tmp_path / "b" / "outcome.json").read_bytes()


def test_trials_parallel_identical(tmp_path):
    args = ["simulate", "--m", "3", "--s", "2", "--iterations", "60", "--trials", "4", "--seed", "9"]
    assert main(args + ["--trials-parallel", "1", "--out", str(tmp_path / "p1")]) == 0
    assert main(args + ["--trials-parallel", "4", "--out", str(tmp_path / "p4")]) == 0
    assert (tmp_path / "p1" / "outcome.json").read_bytes() == (tmp_path / "p4" / "outcome.json").read_bytes()


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("SEGCHAIN_OUT", str(tmp_path / "env"))
    assert main(["simulate", "--iterations", "10", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "outcome.json").exists()
    assert not (tmp_path / "flag").exists()


def test_csv_event_format(tmp_path):
    assert main(["simulate", "--iterations", "5", "--format", "csv", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "events.csv").open()))
    assert rows[0]["kind"] == "reassign"
    assert json.loads(rows[1]["payload"])


def test_unwritable_out_exits_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--iterations", "5", "--out", str(blocker / "sub")]) == 3


def test_analyze_capture_prints_two_to_minus_256(tmp_path, capsys):
    assert main(["analyze", "capture", "--m", "256", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "2^-256 = 8.636169e-78" in out
    rows = list(csv.DictReader((tmp_path / "capture.csv").open()))
    assert rows[0]["m"] == "256" and float(rows[0]["exact"]) == 2.0**-256


def test_analyze_ratio_domain_error(tmp_path, capsys):
    assert main(["analyze", "ratio", "--n", "8000", "--s1", "16", "--T", "200", "--out", str(tmp_path)]) == 2
    assert "0.5*n/s1" in capsys.readouterr().err
    assert main(["analyze", "ratio", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "ratio.csv").open()))
    assert len(rows) == 6 and all(float(r["ratio"]) > 1 for r in rows)


def test_analyze_storage_sweep_rows(tmp_path):
    assert main(["analyze", "storage", "--h-max", "100000", "--out", str(tmp_path)]) == 0
    with (tmp_path / "storage.csv").open() as fh:
        assert sum(1 for _ in fh) == 100_000 + 1
    assert (tmp_path / "storage.svg").read_text().count("<polyline") == 2


def test_analyze_json_format(tmp_path):
    assert main(["analyze", "ratio", "--format", "json", "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "ratio.json").read_text())
    assert set(rows[0]) == {"n", "s1", "T", "s0", "ratio"}


def test_verify_golden_proof(tmp_path, capsys):
    before = digest(DATA / "proof.json"), digest(DATA / "chain_view.json")
    assert main(["verify-proof", str(DATA / "proof.json"), str(DATA / "chain_view.json")]) == 0
    assert capsys.readouterr().out.strip() == "OK"
    assert (digest(DATA / "proof.json"), digest(DATA / "chain_view.json")) == before


def test_verify_flipped_branch_byte(tmp_path, capsys):
    doc = json.loads((DATA / "proof.json").read_text())
    sib = doc["branch"]["siblings"][0][0]
    doc["branch"]["siblings"][0][0] = ("0" if sib[0] != "0" else "1") + sib[1:]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code = main(["verify-proof", str(bad), str(DATA / "chain_view.json")])
    assert code != 0
    assert capsys.readouterr().out.strip() == "BadBranch"


def test_verify_truncated_inputs(tmp_path):
    raw = (DATA / "proof.json").read_text()
    cut = tmp_path / "cut.json"
    cut.write_text(raw[: len(raw) // 2])
    assert main(["verify-proof", str(cut), str(DATA / "chain_view.json")]) == 2
    view = json.loads((DATA / "chain_view.json").read_text())
    view["headers"][3]["header"] = view["headers"][3]["header"][:-10]
    short = tmp_path / "view.json"
    short.write_text(json.dumps(view))
    assert main(["verify-proof", str(DATA / "proof.json"), str(short)]) == 2


def test_export_segment(tmp_path):
    assert main(["export-segment", "--segment", "2", "--iterations", "40", "--out", str(tmp_path)]) == 0
    k, s, h, blocks = read_segment_dump((tmp_path / "segment_2.txt").read_text())
    assert (k, s, h) == (2, 4, 40)
    assert [b.height for b in blocks] == list(range(11, 21))
    assert main(["export-segment", "--segment", "9", "--iterations", "40", "--out", str(tmp_path)]) == 2


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--iterations", "many"])
    assert exc.value.code == 2
