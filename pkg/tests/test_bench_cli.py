"""Scenario construction, sweep plumbing, config parsing, and the CLI."""

import csv
import math

import numpy as np
import pytest

from qbench.bench import (
    CSV_COLUMNS,
    CSV_SCHEMA,
    AxisSpec,
    PointSpec,
    RangeError,
    SweepSpec,
    build_point,
    default_sweep,
    parse_config,
    run_ingested,
    run_sweep,
)
from qbench.cli import main
from qbench.ensemble import ParseError, write_records
from qbench.fock import overlap


# --- point construction -----------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        {"scenario": "FourCoherent", "N": 4},
        {"scenario": "TwoCoherent", "N": 1},
        {"scenario": "TwoCoherent", "N": 4, "T": 0.0},
        {"scenario": "TwoCoherent", "N": 4, "T": 1.2},
        {"scenario": "TwoCoherent", "N": 4, "V_ex": -0.1},
    ],
)
def test_point_spec_rejects_out_of_range(kwargs):
    with pytest.raises(RangeError):
        PointSpec(**kwargs)


def test_two_coherent_overlap_sets_amplitude():
    ens, recs = build_point(PointSpec(scenario="TwoCoherent", N=4, overlap=0.6))
    assert len(recs) == ens.d == 2
    assert overlap(ens.states[0], ens.states[1]) == pytest.approx(0.6, abs=1e-12)


def test_two_coherent_alpha_direct():
    ens, _ = build_point(PointSpec(scenario="TwoCoherent", N=4, alpha=0.7))
    assert ens.states[0].alpha == pytest.approx(0.7)
    assert ens.states[1].alpha == pytest.approx(-0.7)


def test_three_coherent_ring_geometry():
    ens, recs = build_point(PointSpec(scenario="ThreeCoherentRing", N=4, alpha=0.3))
    assert ens.d == len(recs) == 3
    amps = [s.alpha for s in ens.states]
    assert all(abs(a) == pytest.approx(0.3) for a in amps)
    # the ring closes: amplitudes sum to zero
    assert sum(amps) == pytest.approx(0.0, abs=1e-15)


def test_squeezed_pair_exchanges_quadratures():
    spec = PointSpec(scenario="SqueezedPair", N=4, r=0.35, var_x=0.3, var_p=1.3)
    _, recs = build_point(spec)
    assert (recs[0].var_x, recs[0].var_p) == (0.3, 1.3)
    assert (recs[1].var_x, recs[1].var_p) == (1.3, 0.3)


def test_squeezed_pair_default_noise_from_v_ex():
    spec = PointSpec(scenario="SqueezedPair", N=4, r=0.35, V_ex=0.1)
    _, recs = build_point(spec)
    assert recs[0].var_x == pytest.approx(math.exp(-0.7) / 2 + 0.1)
    assert recs[0].var_p == pytest.approx(math.exp(0.7) / 2 + 0.1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"scenario": "TwoCoherent", "N": 4},
        {"scenario": "TwoCoherent", "N": 4, "overlap": 1.0},
        {"scenario": "TwoCoherent", "N": 4, "alpha": 0.0},
        {"scenario": "ThreeCoherentRing", "N": 4},
        {"scenario": "SqueezedPair", "N": 4},
        {"scenario": "SqueezedPair", "N": 4, "r": 0.35, "var_x": 0.1},
    ],
)
def test_build_point_rejects_inconsistent_parameters(kwargs):
    with pytest.raises(RangeError):
        build_point(PointSpec(**kwargs))


# --- sweep plumbing ---------------------------------------------------------


def test_axis_values_and_validation():
    ax = AxisSpec("overlap", 0.1, 0.9, 5)
    assert np.allclose(ax.values(), [0.1, 0.3, 0.5, 0.7, 0.9])
    assert AxisSpec("overlap", 0.4, 0.4, 1).values().tolist() == [0.4]
    with pytest.raises(RangeError):
        AxisSpec("overlap", 0.9, 0.1, 3)
    with pytest.raises(RangeError):
        AxisSpec("overlap", 0.1, 0.9, 0)


def test_default_sweeps_cover_every_scenario():
    for scenario in ("TwoCoherent", "ThreeCoherentRing", "SqueezedPair"):
        spec = default_sweep(scenario)
        assert spec.scenario == scenario
        assert len(spec.point_specs()) == spec.axis1.steps * spec.axis2.steps
    with pytest.raises(RangeError):
        default_sweep("FourCoherent")


def test_variance_axis_maps_to_excess_noise():
    spec = SweepSpec(
        "TwoCoherent",
        AxisSpec("overlap", 0.5, 0.5, 1),
        AxisSpec("var", 0.5, 1.5, 3),
        N=4,
    )
    pts = spec.point_specs()
    assert [p.V_ex for p in pts] == [0.0, 0.5, 1.0]
    assert all(p.overlap == 0.5 for p in pts)
    below = SweepSpec(
        "TwoCoherent",
        AxisSpec("overlap", 0.5, 0.5, 1),
        AxisSpec("var", 0.4, 0.4, 1),
        N=4,
    )
    with pytest.raises(RangeError):
        below.point_specs()


# --- config files -----------------------------------------------------------


def write_config(tmp_path, text):
    path = tmp_path / "sweep.cfg"
    path.write_text(text, encoding="utf-8")
    return path


def test_parse_config_full(tmp_path):
    path = write_config(
        tmp_path,
        "# ring slice\n"
        "scenario = ThreeCoherentRing\n"
        "N = 8\n"
        "T = 0.9\n"
        "alpha = 0.2\n"
        "var = 1.0:1.5:6\n"
        "out = ring_slice\n",
    )
    spec = parse_config(path)
    assert spec.scenario == "ThreeCoherentRing"
    assert spec.N == 8 and spec.T == 0.9 and spec.out == "ring_slice"
    assert (spec.axis1.lo, spec.axis1.hi, spec.axis1.steps) == (0.2, 0.2, 1)
    assert (spec.axis2.lo, spec.axis2.hi, spec.axis2.steps) == (1.0, 1.5, 6)


def test_parse_config_defaults_fill_in(tmp_path):
    spec = parse_config(write_config(tmp_path, "scenario = TwoCoherent\n"))
    base = default_sweep("TwoCoherent")
    assert spec.N == base.N and spec.axis1 == base.axis1 and spec.axis2 == base.axis2


@pytest.mark.parametrize(
    "text, lineno, fragment",
    [
        ("N = 8\n", 1, "missing 'scenario'"),
        ("scenario = TwoCoherent\nwat = 1\n", 2, "unknown key"),
        ("scenario = TwoCoherent\noverlap = a:b:c\n", 2, "lo:hi:steps"),
        ("scenario = TwoCoherent\nvar_x = 0.3\n", 2, "does not apply"),
        ("scenario = FourCoherent\n", 1, "valid names"),
        ("scenario = TwoCoherent\nN\n", 2, "key = value"),
        ("scenario = TwoCoherent\nN =\n", 2, "empty value"),
        ("scenario = TwoCoherent\nN = five\n", 2, "expected a number"),
    ],
)
def test_parse_config_errors_carry_line_numbers(tmp_path, text, lineno, fragment):
    with pytest.raises(ParseError) as err:
        parse_config(write_config(tmp_path, text))
    assert err.value.line == lineno
    assert fragment in str(err.value)


def test_parse_config_ignores_comments_and_blanks(tmp_path):
    path = write_config(
        tmp_path,
        "\n# header\nscenario = TwoCoherent  # trailing\n\noverlap = 0.5\n",
    )
    spec = parse_config(path)
    assert spec.axis1.lo == 0.5 and spec.axis1.steps == 1


# --- sweep outputs ----------------------------------------------------------


def test_sweep_writes_stable_csv_and_svg(tmp_path):
    spec = SweepSpec(
        "TwoCoherent",
        AxisSpec("overlap", 0.4, 0.6, 2),
        AxisSpec("var", 1.0, 1.0, 1),
        N=4,
        out=str(tmp_path / "grid"),
    )
    rows = run_sweep(spec)
    assert len(rows) == 2

    csv_path = tmp_path / "grid.csv"
    svg_path = tmp_path / "grid.svg"
    with open(csv_path, newline="") as fh:
        parsed = list(csv.DictReader(fh))
    assert list(parsed[0].keys()) == list(CSV_COLUMNS)
    for row in parsed:
        assert row["schema"] == CSV_SCHEMA
        assert row["lower_status"] == row["upper_status"] == "Optimal"
        assert 0.0 <= float(row["lower_bound"]) <= float(row["upper_bound"]) + 1e-6
    assert parsed[0]["overlap"] == "0.4" and parsed[1]["overlap"] == "0.6"
    assert parsed[0]["V_ex"] == "0.5"

    svg = svg_path.read_text()
    assert svg.startswith("<?xml")

    first_csv = csv_path.read_bytes()
    first_svg = svg_path.read_bytes()
    run_sweep(spec)
    assert csv_path.read_bytes() == first_csv
    assert svg_path.read_bytes() == first_svg


# --- record ingestion -------------------------------------------------------


def test_ingest_round_trip_matches_direct_run(tmp_path):
    spec = PointSpec(scenario="TwoCoherent", N=4, overlap=0.6, V_ex=0.3)
    ens, recs = build_point(spec)
    path = tmp_path / "run.records"
    write_records(path, ens, recs)
    result = run_ingested(path, N=4)
    assert result.spec.scenario == "TwoCoherent"
    assert result.lower.status.value == "Optimal"


def test_ingest_infers_ring_scenario(tmp_path):
    ens, recs = build_point(
        PointSpec(scenario="ThreeCoherentRing", N=4, alpha=0.2, V_ex=0.5)
    )
    path = tmp_path / "ring.records"
    write_records(path, ens, recs)
    assert run_ingested(path, N=4).spec.scenario == "ThreeCoherentRing"


# --- command line -----------------------------------------------------------


def test_cli_point_writes_csv_and_exits_zero(tmp_path, capsys):
    out = tmp_path / "pt"
    code = main(
        [
            "point",
            "--scenario",
            "TwoCoherent",
            "--overlap",
            "0.6",
            "--N",
            "4",
            "--Vex",
            "0.2",
            "--out",
            str(out),
        ]
    )
    text = capsys.readouterr().out
    assert code == 0
    assert "lower_bound = " in text and "quantum_domain = " in text
    with open(f"{out}.csv", newline="") as fh:
        (row,) = list(csv.DictReader(fh))
    assert row["scenario"] == "TwoCoherent" and row["N"] == "4"


def test_cli_point_rejects_bad_arguments(capsys):
    assert main(["point", "--scenario", "Nope", "--N", "4"]) == 2
    assert main(["point", "--scenario", "TwoCoherent", "--N", "4"]) == 2
    assert "qbench:" in capsys.readouterr().err


def test_cli_point_reports_unfinished_solves(capsys):
    argv = ["point", "--scenario", "TwoCoherent", "--alpha", "2.0", "--N", "2"]
    assert main(argv) == 1
    assert main(argv + ["--lenient"]) == 0
    assert "[Infeasible]" in capsys.readouterr().out


def test_cli_sweep_with_config(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(
        "scenario = TwoCoherent\nN = 4\noverlap = 0.5\nvar = 1.0\n",
        encoding="utf-8",
    )
    out = tmp_path / "cfg_sweep"
    code = main(["sweep", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert "1/1 grid points Optimal" in capsys.readouterr().out
    assert (tmp_path / "cfg_sweep.csv").exists()
    assert (tmp_path / "cfg_sweep.svg").exists()


def test_cli_sweep_requires_a_grid(capsys):
    assert main(["sweep"]) == 2
    assert "qbench:" in capsys.readouterr().err


def test_cli_ingest_round_trip(tmp_path, capsys):
    ens, recs = build_point(
        PointSpec(scenario="TwoCoherent", N=4, overlap=0.6, V_ex=0.2)
    )
    path = tmp_path / "data.records"
    write_records(path, ens, recs)
    assert main(["ingest", str(path), "--N", "4"]) == 0
    assert "scenario=TwoCoherent" in capsys.readouterr().out


def test_cli_ingest_bad_file_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.records"
    bad.write_text("qbench-records v1\nstate coherent zero | record 0 0\n")
    assert main(["ingest", str(bad), "--N", "4"]) == 2
    assert main(["ingest", str(tmp_path / "missing"), "--N", "4"]) == 2
    assert "qbench:" in capsys.readouterr().err
