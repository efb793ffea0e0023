from __future__ import annotations

import json

import pytest

from fcalab.cli import run


def test_simulate_prints_named_evolution(capsys):
    code = run(["simulate", "--kappa", "3", "--rule", "fca", "--length", "12",
                "--steps", "1", "--init", "120120120120"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out[0] == "120120120120"
    assert out[1] == "221221221221"


def test_simulate_report_flag(capsys):
    code = run(["simulate", "--kappa", "5", "--length", "16", "--steps", "3",
                "--seed", "4", "--report"])
    out = capsys.readouterr().out
    assert code == 0 and "excited=" in out


def test_unknown_subcommand_and_flag_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        run(["frobnicate"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        run(["simulate", "--wibble", "3"])
    assert e.value.code == 2
    assert run([]) == 2


def test_help_lists_flags(capsys):
    for sub in ("simulate", "cluster-rate", "excitations", "qtable",
                "disagree-exact", "genfun", "oracle"):
        with pytest.raises(SystemExit) as e:
            run([sub, "--help"])
        assert e.value.code == 0
        out = capsys.readouterr().out
        assert "--seed" in out and "--out" in out


def test_oracle_covariances_prints_values_and_passes(capsys):
    code = run(["oracle", "--check", "covariances"])
    out = capsys.readouterr().out
    assert code == 0
    for frag in ("40/81", "-17/243", "-19/729", "-2/729", "8/27"):
        assert frag in out
    assert "covariances: PASS" in out


def test_oracle_prop62(capsys):
    assert run(["oracle", "--check", "prop62"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_qtable_base_row(capsys):
    code = run(["qtable", "--T", "0", "--mode", "exact"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out[0] == "family,x,t,numerator,log3_denominator"
    rows = [line.split(",") for line in out[1:6]]
    assert [r[3] for r in rows] == ["3"] * 5  # numerator 3 at scale 3^1: all ones


def test_qtable_csv_out(tmp_path, capsys):
    out = tmp_path / "q.csv"
    assert run(["qtable", "--T", "4", "--mode", "float", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "family,x,t,value"
    assert len(lines) > 20
    meta = json.load(open(str(out) + ".meta.json"))
    assert meta["T"] == 4


def test_disagree_exact_output(capsys):
    assert run(["disagree-exact", "--tau", "2"]) == 0
    out = capsys.readouterr().out
    assert "460/2187" in out and "variant=strict" in out


def test_genfun(tmp_path, capsys):
    out = tmp_path / "g.csv"
    code = run(["genfun", "--u", "0.999,0.9999", "--out", str(out)])
    text = capsys.readouterr().out
    assert code == 0
    assert "det A(1,1) = 0" in text
    assert "(27, -27, 9, -9, 9)" in text
    lines = out.read_text().splitlines()
    assert lines[0] == "u,q_minus,ratio_to_3sqrt3_over_2,detA_residual"
    assert len(lines) == 3


def test_cluster_rate_with_config_and_override(tmp_path, capsys):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("kappa = 3\ntimes = 10,20\nruns = 8\nlength = 64\nseed = 3\n")
    out = tmp_path / "cluster.csv"
    code = run(["cluster-rate", "--config", str(cfgfile), "--runs", "4",
                "--out", str(out)])
    assert code == 0
    meta = json.load(open(str(out) + ".meta.json"))
    assert meta["config"]["runs"] == 4          # flag overrides file
    assert meta["config"]["kappa"] == 3         # file value used
    lines = out.read_text().splitlines()
    assert lines[0].startswith("kappa,t,L,runs")
    assert len(lines) == 3
    assert (tmp_path / "constants.json").exists()


def test_excitations_writes_overlay(tmp_path):
    out = tmp_path / "ne.csv"
    code = run(["excitations", "--tau", "50", "--trials", "400",
                "--seed", "2", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "r,empirical_cdf,theory_cdf,abs_diff"
    assert len(lines) == 801
    meta = json.load(open(str(out) + ".meta.json"))
    gaps = [abs(float(l.split(",")[1]) - float(l.split(",")[2]))
            for l in lines[1:]]
    assert abs(max(gaps) - meta["ks"]) < 1e-12
