import math

import pytest

import holeburn

SAT_CONFIG = {
    "schema_version": 1,
    "seed": 4,
    "saturation": {"q_tls0": 1e4, "n_c": 20, "beta": 1.05, "q_res": 1e6},
    "n_grid": {"min": 1e-2, "max": 1e7, "count": 30},
}

STM_CONFIG = {
    "schema_version": 1,
    "seed": 9,
    "saturation": {"q_tls0": 1e4, "n_c": 20, "beta": 1.05, "q_res": 1e6},
    "twotone": {"model": "stm", "tan_delta": 1e-4, "omega0_hz": 25e3, "k": 0.5},
    "n_grid": {"min": 1e5, "max": 1e8, "count": 13},
    "detuning_multiples": [-16, -12, -8, -4, -2, 2, 4, 8, 12, 16],
    "noise": {"inv_q_fraction": 0.01, "shift_fraction": 0.01},
}


def test_models():
    assert holeburn.thermal_factor(2.399e9, 0.0) == 1.0
    assert holeburn.stm_two_tone_loss(0.0, 1e5) == -1.0
    peak = holeburn.stm_two_tone_shift(1e5, 1.0, math.sqrt(6) * 1e5)
    assert peak == pytest.approx(-math.sqrt(3) / 24, rel=1e-14)
    assert holeburn.capelle_loss(0.0, 3.0, 1.0) == pytest.approx(0.5, rel=1e-15)
    assert holeburn.stm_inverse_q(0.0, 1e4, 20.0, q_res=1e6) == pytest.approx(1.01e-4, rel=1e-15)
    assert abs(holeburn.model_s11(1e9, 1e9, 5e3, 5e3)) < 1e-15


def test_domain_errors_raise_value_error():
    with pytest.raises(ValueError):
        holeburn.stm_two_tone_loss(0.0, 0.0)
    with pytest.raises(ValueError, match="noise.q_fraction"):
        holeburn.synth("saturation", {**SAT_CONFIG, "noise": {"q_fraction": -1}})


def test_saturation_round_trip():
    doc = holeburn.fit_saturation(holeburn.synth("saturation", SAT_CONFIG))
    assert doc["converged"]
    assert doc["params"]["beta"]["value"] == pytest.approx(1.05, rel=1e-6)
    assert doc["params"]["n_c"]["value"] == pytest.approx(20.0, rel=1e-6)


def test_synth_is_deterministic():
    assert holeburn.synth("twotone", STM_CONFIG) == holeburn.synth("twotone", STM_CONFIG)
    assert holeburn.synth("twotone", STM_CONFIG) != holeburn.synth("twotone", STM_CONFIG, seed=10)


def test_hole_fit_and_scaling():
    doc = holeburn.fit_hole_stm(holeburn.synth("twotone", STM_CONFIG))
    scaling = holeburn.extract_scaling(doc)
    assert scaling["loss"]["exponent"] == pytest.approx(0.5, abs=0.02)
    assert scaling["shift"]["exponent"] == pytest.approx(0.5, abs=0.02)
    assert scaling["reference"]["exponent"] == 0.5


def test_powerlaw():
    x = [10.0**(i / 4) for i in range(12)]
    fit = holeburn.powerlaw_fit(x, [2 * v**0.5 for v in x])
    assert fit["exponent"] == pytest.approx(0.5, abs=1e-14)
    assert fit["amplitude"] == pytest.approx(2.0, rel=1e-13)


def test_cli_in_process(tmp_path):
    code, _, err = holeburn.run_cli(["report", "--output", str(tmp_path / "r")])
    assert code == 2
    assert "no inputs" in err
