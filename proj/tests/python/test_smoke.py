"""End-to-end smoke tests for the python bindings."""

import json
import math

import pytest

import iodinesim


def test_scenario_catalogue():
    names = iodinesim.scenario_names()
    assert len(names) == 9
    assert "comb-measure" in names
    assert "full-pipeline" in names


def test_comb_measure_runs_and_reconstructs(tmp_path):
    summary = iodinesim.run_scenario(
        "comb-measure", tmp_path / "run", seed=1,
        overrides={"pipeline.gates": 400.0}, check=True,
    )
    assert summary["scenario"] == "comb-measure"
    assert summary["version"] == "1.0.0"
    results = summary["results"]
    assert results["p"] == results["true_p"]
    assert results["absolute_kHz"].startswith("5973664986")
    assert abs(results["offset_from_lock_point_Hz"]) < 10.0
    assert (tmp_path / "run" / "summary.json").exists()
    on_disk = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert on_disk["results"] == results


def test_reruns_are_identical(tmp_path):
    a = iodinesim.run_scenario("comb-measure", tmp_path / "a", seed=5,
                               overrides={"pipeline.gates": 100.0})
    b = iodinesim.run_scenario("comb-measure", tmp_path / "b", seed=5,
                               overrides={"pipeline.gates": 100.0})
    assert a["results"] == b["results"]
    assert a["config_hash"] == b["config_hash"]
    assert a["config_hash"] == iodinesim.config_hash({"pipeline.gates": 100.0})


def test_unknown_scenario_raises(tmp_path):
    with pytest.raises(ValueError):
        iodinesim.run_scenario("bogus", tmp_path / "x")


def test_validate_config(tmp_path):
    path = tmp_path / "lab.toml"
    path.write_text("[cell]\npresure = 0.5\n")
    ok, issues, effective = iodinesim.validate_config(str(path))
    assert ok  # unknown keys warn, they do not fail
    assert len(issues) == 1
    severity, message = issues[0]
    assert severity == "warning"
    assert "cell.pressure" in message
    assert "cell.pressure = 0.33" in effective


def test_allan_deviation_alternating():
    values = [1.0 if i % 2 == 0 else -1.0 for i in range(64)]
    taus, sigmas, n = iodinesim.allan_deviation(values, dt=1.0, taus=[1.0])
    assert taus == [1.0]
    assert sigmas[0] == pytest.approx(math.sqrt(2.0), rel=1e-12)
    assert n[0] == 64


def test_fit_dispersion_recovers_parameters():
    center, hwhm, amp, base = 250.0, 30e3, 2.0, 0.1
    detuning = [-120e3 + 1.5e3 * i for i in range(161)]
    values = []
    for f in detuning:
        x = (f - center) / hwhm
        values.append(base + amp * (-x / (1.0 + x * x)))
    fit = iodinesim.fit_dispersion(detuning, values)
    assert fit["converged"]
    assert fit["center_hz"] == pytest.approx(center, abs=1.0)
    assert fit["hwhm_hz"] == pytest.approx(hwhm, rel=1e-6)
    assert fit["amplitude"] == pytest.approx(amp, rel=1e-6)


def test_khz_roundtrip():
    assert iodinesim.khz_roundtrip("597366498654.62") == "597366498654.620000"
    with pytest.raises(ValueError):
        iodinesim.khz_roundtrip("not-a-frequency")


def test_fm_error_signal_is_odd():
    # Near-odd around the lock point; the displaced Doppler background breaks
    # exact symmetry at the 1e-8 level.
    detunings = [-40e3, -10e3, 10e3, 40e3]
    signal = iodinesim.fm_error_signal(detunings)
    assert signal[0] == pytest.approx(-signal[3], rel=1e-6)
    assert signal[1] == pytest.approx(-signal[2], rel=1e-6)


def test_lms_notch_removes_reference_tone():
    fs, ref = 50e3, 1.25e3
    values = [math.cos(2.0 * math.pi * ref * i / fs) for i in range(20000)]
    out = iodinesim.lms_notch(values, fs, ref)
    tail = out[-5000:]
    rms = math.sqrt(sum(v * v for v in tail) / len(tail))
    assert rms < 0.02


def test_pressure_shift_slope():
    lo = iodinesim.pressure_shift_hz(0.32)
    hi = iodinesim.pressure_shift_hz(0.34)
    slope = (hi - lo) / 0.02
    assert slope == pytest.approx(-38400.0, rel=0.02)
