import json

import numpy as np
import pytest

from faberwave.medium import MediumModel, PmlConfig, check_pml, damping_profile
from faberwave.testcases import DESK_FACTOR, build_test_case, reference_dt, steps_for


def test_damping_profile():
    pml = PmlConfig(delta=0.8, beta0=30.0)
    assert damping_profile(5.0, 10.0, pml) == 0.0
    assert damping_profile(0.0, 10.0, pml) == pytest.approx(30.0, rel=1e-14)
    assert damping_profile(10.0, 10.0, pml) == pytest.approx(30.0, rel=1e-14)
    assert damping_profile(0.01, 10.0, pml) == pytest.approx(29.2547, abs=5e-5)
    assert pml.beta_max(0.02) == pytest.approx(30 * ((0.8 - 0.01) / 0.8) ** 2, rel=1e-15)
    assert damping_profile(0.01, 10.0, pml) == pytest.approx(pml.beta_max(0.02), rel=1e-15)


def test_pml_validation():
    with pytest.raises(ValueError):
        PmlConfig(delta=0.0)
    with pytest.raises(ValueError):
        PmlConfig(beta0=-1.0)
    model = MediumModel.from_function((2.0,), 0.1, c=1.0)
    check_pml(model, PmlConfig(delta=0.5))
    with pytest.raises(ValueError, match="overlap"):
        check_pml(model, PmlConfig(delta=1.0))
    with pytest.raises(ValueError):
        check_pml(model, PmlConfig(delta=0.05))
    with pytest.raises(ValueError, match="multiple"):
        check_pml(model, PmlConfig(delta=0.55), aligned=True)


def test_grid_must_divide_extent():
    with pytest.raises(ValueError, match="integer multiple"):
        MediumModel.from_function((1.0,), 0.3, c=1.0)


def test_material_validation():
    with pytest.raises(ValueError):
        MediumModel((1.0,), 0.1, {"c": np.zeros(11)})
    with pytest.raises(ValueError):
        MediumModel((1.0,), 0.1, {"c": np.ones(5)})


def test_description_regions_override_in_order():
    desc = {"extents": [4.0, 4.0], "background": {"c": 3.0},
            "regions": [{"box": [[None, None], [2.0, None]], "c": 2.0},
                        {"box": [[3.0, None], [None, 2.5]], "c": 1.0}]}
    m = MediumModel.from_description(desc, 0.5)
    c = m.fields["c"]
    assert c[0, 0] == 3.0 and c[0, 8] == 2.0 and c[7, 5] == 1.0 and c[7, 6] == 2.0
    assert m.c_max() == 3.0


def test_json_and_raw_round_trip(tmp_path):
    desc = {"extents": [2.0], "dx": 0.25, "background": {"c": 1.5}, "regions": [{"box": [[1.0, None]], "c": 3.0}]}
    path = tmp_path / "medium.json"
    path.write_text(json.dumps(desc))
    m = MediumModel.from_json(path)
    m.to_raw(tmp_path / "grid")
    back = MediumModel.from_raw(tmp_path / "grid")
    assert back.extents == m.extents and back.dx == m.dx
    assert np.array_equal(back.fields["c"], m.fields["c"])


def test_staggered_material_values():
    m = MediumModel.from_function((1.0,), 0.25, c=lambda x: 1.0 + x)
    assert np.allclose(m.at("c", ("node",)), [1.25, 1.5, 1.75])
    assert np.allclose(m.at("c", ("half",)), [1.125, 1.375, 1.625, 1.875])


def test_scaled_medium():
    m = MediumModel.from_function((1.0, 1.0), 0.25, rho=0.25, mu=1.0, lam=8.0)
    assert m.c_max() == pytest.approx(40 ** 0.5)
    assert m.scaled(2.0).c_max() == pytest.approx(2 * 40 ** 0.5)


def test_test_cases():
    for k in range(1, 8):
        full, desk = build_test_case(k, "full"), build_test_case(k)
        assert desk.final_time == pytest.approx(full.final_time / DESK_FACTOR)
        for lo, hi in desk.physical_box():
            assert hi - lo > 0
    tc2 = build_test_case(2)
    assert tc2.model().c_max() == pytest.approx(3.048)
    assert reference_dt(tc2) == pytest.approx(0.0025 / (8 * 3.048))
    assert steps_for(1.0, 0.3) == 4
    with pytest.raises(ValueError):
        build_test_case(8)
    with pytest.raises(ValueError):
        build_test_case(1, "huge")
