"""Orchestration layer: benchmarks, summaries, verify batteries, CLI verbs."""

from __future__ import annotations

import json
import math

import pytest

from localmech import cli
from localmech.harness import (
    BENCH_COLUMNS,
    BenchRecord,
    ExperimentConfig,
    bench_points,
    canonical_family,
    csv_body,
    fit_polylog,
    fit_power_exponent,
    render_csv,
    summarize_bench,
    thread_budget,
    verify_family,
)

# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------


def test_family_aliases():
    assert canonical_family("rsd") == "housing"
    assert canonical_family("scheduling") == "scheduling-res"
    assert canonical_family("auction") == "uduv"
    assert canonical_family("matching") == "matching"
    with pytest.raises(ValueError):
        canonical_family("raffle")


def test_experiment_config_validation():
    cfg = ExperimentConfig(family="rsd", ns=(64,), seeds=2)
    assert cfg.family == "housing"
    with pytest.raises(ValueError):
        ExperimentConfig(family="matching", ns=(), seeds=1)
    with pytest.raises(ValueError):
        ExperimentConfig(family="matching", ns=(10,), seeds=0)
    with pytest.raises(ValueError):
        ExperimentConfig(family="matching", ns=(10,), seeds=1, queries=0)


def test_thread_budget_env(monkeypatch):
    monkeypatch.delenv("LCMD_THREADS", raising=False)
    assert thread_budget() == 1
    monkeypatch.setenv("LCMD_THREADS", "6")
    assert thread_budget() == 6
    monkeypatch.setenv("LCMD_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_budget()


def test_render_csv_and_body():
    text = render_csv(("a", "b"), [(1, "x"), (2, "y")], comments=["made-up: now"])
    assert text == "# made-up: now\na,b\n1,x\n2,y\n"
    assert csv_body(text) == "a,b\n1,x\n2,y"


def test_fits_recover_planted_growth():
    ns = [2**8, 2**10, 2**12, 2**14]
    poly = [n**0.5 for n in ns]
    assert abs(fit_power_exponent(ns, poly) - 0.5) < 1e-6
    logs = [3.0 * math.log(n) ** 2 for n in ns]
    c, p = fit_polylog(ns, logs)
    assert abs(p - 2.0) < 1e-6 and abs(c - 3.0) < 1e-6
    # a squared-log curve reads as a small fractional power on this grid
    assert 0.1 < fit_power_exponent(ns, logs) < 0.4
    with pytest.raises(ValueError):
        fit_power_exponent([10], [1.0])


def test_summarize_bench_rows():
    records = [
        BenchRecord("housing", n, seed, q, probes=n.bit_length() + q, wall_time=0.0, digest="d")
        for n in (256, 1024)
        for seed in range(2)
        for q in range(3)
    ]
    rows = summarize_bench(records)
    stats = {(r[0], r[1], r[2]): r[3] for r in rows}
    assert stats[("housing", "256", "max")] == "11"
    assert stats[("housing", "1024", "max")] == "13"
    assert ("housing", "", "power_exponent") in stats
    assert ("housing", "", "polylog_exponent") in stats


# ---------------------------------------------------------------------------
# benchmarks
# ---------------------------------------------------------------------------


def test_bench_grid_shape_and_determinism(monkeypatch):
    points = [(256, 20, 100), (1024, 20, 100), (4096, 20, 100)]
    monkeypatch.setenv("LCMD_THREADS", "8")
    records = bench_points("rsd", points, d=3)
    assert len(records) == 6000
    keys = [(r.family, r.n, r.seed, r.query) for r in records]
    assert keys == sorted(keys)
    assert all(r.family == "housing" and len(r.digest) == 16 for r in records)
    monkeypatch.setenv("LCMD_THREADS", "1")
    again = bench_points("rsd", [(256, 3, 10)], d=3)
    monkeypatch.setenv("LCMD_THREADS", "8")
    threaded = bench_points("rsd", [(256, 3, 10)], d=3)
    assert [(r.probes, r.digest) for r in again] == [
        (r.probes, r.digest) for r in threaded
    ]


def test_verify_batteries_come_back_clean():
    cases = [
        ("matching", dict(k=2)),
        ("scheduling-std", dict(d=2)),
        ("scheduling-res", dict(d=2)),
        ("uduv", dict(k=2)),
        ("udubv", dict(k=2)),
        ("ksmb", dict(k=2)),
        ("rsd", dict(d=2)),
    ]
    for family, kw in cases:
        rows = verify_family(family, ns=[40], seeds=2, **kw)
        assert rows, family
        for name, instances, violations in rows:
            assert instances > 0, (family, name)
            assert violations == 0, (family, name)
    with pytest.raises(ValueError):
        verify_family("matching", ns=[], seeds=1)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def test_cli_gen_writes_loadable_spec(tmp_path):
    out = tmp_path / "spec.json"
    assert cli.main(["gen", "rsd", "--seed", "3", "--n", "12", "--d", "2", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["family"] == "housing"
    assert data["n"] == 12


def test_cli_query_roundtrip_through_config(tmp_path, capsys):
    out = tmp_path / "m.json"
    assert cli.main(["gen", "matching", "--seed", "1", "--n", "30", "--k", "2", "--out", str(out)]) == 0
    capsys.readouterr()
    rc = cli.main(["query", "matching", "--config", str(out), "--query-man", "3"])
    assert rc == 0
    got = json.loads(capsys.readouterr().out)
    assert got["man"] == 3
    assert got["status"] in ("matched", "unmatched", "disqualified")
    assert got["probes"] >= 0


def test_cli_usage_errors_exit_2(tmp_path):
    # query without a query flag
    assert cli.main(["query", "rsd", "--seed", "0", "--n", "8"]) == 2
    # config family mismatch
    out = tmp_path / "h.json"
    assert cli.main(["gen", "rsd", "--n", "8", "--out", str(out)]) == 0
    assert cli.main(["run", "matching", "--config", str(out), "--all"]) == 2
    # malformed config file
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert cli.main(["query", "rsd", "--config", str(bad), "--query-agent", "0"]) == 2
    # argparse-level misuse (missing required --mode)
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "scheduling", "--n", "4", "--all"])
    assert exc.value.code == 2


def test_cli_verify_exit_codes(tmp_path, capsys, monkeypatch):
    assert cli.main(["verify", "matching", "--n", "40", "--seeds", "2", "--k", "2"]) == 0
    text = capsys.readouterr().out
    assert csv_body(text).splitlines()[0] == "name,instances,violations"
    assert all(line.endswith(",0") for line in csv_body(text).splitlines()[1:])

    monkeypatch.setattr(
        "localmech.harness.verify_family", lambda *a, **kw: [("planted", 5, 2)]
    )
    out = tmp_path / "v.csv"
    rc = cli.main(["verify", "matching", "--n", "40", "--seeds", "2", "--out", str(out)])
    assert rc == 1
    assert "planted,5,2" in out.read_text()
    assert "planted: 2 violations over 5 instances" in capsys.readouterr().out


def test_cli_bench_deterministic_output(tmp_path, capsys, monkeypatch):
    argv = ["bench", "rsd", "--n", "64,128", "--seeds", "2", "--queries", "5", "--d", "2"]
    out1, out2 = tmp_path / "b1.csv", tmp_path / "b2.csv"
    assert cli.main(argv + ["--out", str(out1)]) == 0
    summary1 = capsys.readouterr().out
    monkeypatch.setenv("LCMD_THREADS", "8")
    assert cli.main(argv + ["--out", str(out2)]) == 0
    summary2 = capsys.readouterr().out
    body1, body2 = csv_body(out1.read_text()), csv_body(out2.read_text())
    assert body1 == body2
    assert summary1 == summary2
    header = body1.splitlines()[0]
    assert header == ",".join(BENCH_COLUMNS)
    assert len(body1.splitlines()) == 1 + 2 * 2 * 5

    monkeypatch.setenv("LCMD_THREADS", "nope")
    assert cli.main(argv) == 2


def test_cli_scheduling_and_auction_verbs(capsys):
    rc = cli.main(
        ["query", "scheduling", "--mode", "std", "--seed", "2", "--bids", "1,1",
         "--m", "4", "--pay-machine", "0", "--scheme", "expected"]
    )
    assert rc == 0
    got = json.loads(capsys.readouterr().out)
    assert got["machine"] == 0
    rc = cli.main(
        ["run", "auction", "--mode", "udubv", "--seed", "0", "--n", "4", "--m", "4",
         "--k", "2", "--audit"]
    )
    assert rc == 0
    assert json.loads(capsys.readouterr().out) == {"violations": []}
