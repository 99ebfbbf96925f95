import math

import numpy as np
import pytest

from faberwave.bounds import (EXPERIMENT_RANGES, ellipse_sweep_experiment, faber_norm_on_ellipse, literature_bound,
                              normal_matrix_experiment, proposed_bound, proposed_bound_curve, tail_terms)
from faberwave.ellipse import EllipseParams, SpectralRectangle
from faberwave.faber import faber_scalar_eval


def test_literature_bound_unit_circle():
    value, valid = literature_bound(EllipseParams(0.0, 1.0, 1.0), 4)
    assert value == pytest.approx(4 * (math.e / 4) ** 4, rel=1e-13)
    assert value == pytest.approx(0.853096, abs=1e-6)
    assert not valid  # the circle touches the left half plane


def test_literature_bound_vanishes_past_twice_capacity():
    e = EllipseParams(6.8, 4.4, 3.6)
    vals = [literature_bound(e, m)[0] for m in range(int(2 * e.gamma) + 2, 80)]
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-10


def test_literature_bound_validity_flag():
    assert literature_bound(EllipseParams(6.8, 4.4, 3.6), 10)[1]
    assert not literature_bound(EllipseParams(-3.0, 5.0, 11.0), 10)[1]
    with pytest.raises(ValueError):
        literature_bound(EllipseParams(0.0, 1.0, 1.0), 0)


def test_faber_norm_on_ellipse():
    assert faber_norm_on_ellipse(0, EllipseParams(0, 2, 1)) == 1.0
    assert faber_norm_on_ellipse(1, EllipseParams(0.0, 2.0, 1.0)) == pytest.approx(4 / 3)
    rng = np.random.default_rng(11)
    for _ in range(5):
        e = EllipseParams(rng.uniform(-5, 5), rng.uniform(0.1, 5), rng.uniform(0.1, 5))
        dense = np.max(np.abs(faber_scalar_eval(12, e.boundary(100_000), e)))
        assert faber_norm_on_ellipse(12, e) == pytest.approx(dense, rel=1e-9)


def test_proposed_bound_properties():
    e = EllipseParams(6.8, 4.4, 3.6)
    eps = 1e-14
    terms, m_eps = tail_terms(e, eps)
    assert m_eps >= 2 * e.gamma
    curve, m2 = proposed_bound_curve(e, range(0, m_eps + 5), eps)
    assert m2 == m_eps
    assert np.all(np.diff(curve) <= 0)
    assert np.all(curve[:m_eps] >= eps / 2)
    assert np.all(curve[m_eps:] == eps / 2)
    for m in (0, 5, 17):
        assert proposed_bound(e, m, eps)[0] == pytest.approx(curve[m], rel=1e-12)
    with pytest.raises(ValueError):
        tail_terms(e, 0.0)


def test_experiment_is_deterministic():
    a = normal_matrix_experiment(seed=7, degrees=range(1, 21))
    b = normal_matrix_experiment(seed=7, degrees=range(1, 21))
    assert np.array_equal(a.actual_error, b.actual_error)
    assert np.array_equal(a.proposed_bound, b.proposed_bound)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_experiment_ranges():
    for key, ranges in EXPERIMENT_RANGES.items():
        r = normal_matrix_experiment(seed=0, degrees=[1, 2], **ranges)
        eig = r.eigenvalues
        lo, hi = ranges["real_range"]
        (clo, chi), (ilo, ihi) = ranges["complex_range"]
        assert eig.size == 60
        assert np.sum(eig.imag == 0) == 10
        assert np.all((eig.real >= min(lo, clo)) & (eig.real <= max(hi, chi)))
        assert np.all((eig.imag >= ilo) & (eig.imag <= ihi))
        assert np.allclose(np.sort_complex(eig), np.sort_complex(eig.conj()))


def test_experiment_report_csv(tmp_path):
    r = normal_matrix_experiment(seed=2, degrees=range(1, 6))
    path = tmp_path / "b.csv"
    r.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "m,literature,literature_valid,proposed,actual" and len(lines) == 6


def test_left_half_plane_bound_is_reliable():
    r = normal_matrix_experiment(seed=0, **EXPERIMENT_RANGES[2])
    assert not r.literature_valid
    assert np.all(np.isfinite(r.proposed_bound))
    assert np.all(r.proposed_bound >= r.actual_error - 1e-15)


@pytest.fixture(scope="module")
def wave_like_sweep():
    return ellipse_sweep_experiment(SpectralRectangle(-40.0, 0.0, 2.0), scales=(0.7, 1.0, 1.3), seed=0)


def test_sweep_scaled_ellipse_is_slower(wave_like_sweep):
    t = wave_like_sweep
    k = list(t.degrees).index(25)
    assert t.error_of("scale=1")[k] * 10 <= t.error_of("scale=1.3")[k]


def test_sweep_under_covering_ellipse_is_worse(wave_like_sweep):
    t = wave_like_sweep
    sel = (t.degrees >= 20) & (t.degrees <= 40)
    assert np.all(t.error_of("scale=0.7")[sel] > 10 * t.error_of("scale=1")[sel])


def test_sweep_circle_wins_somewhere(wave_like_sweep):
    t = wave_like_sweep
    assert np.any(t.error_of("circle") < t.error_of("scale=1"))
    assert t.labels[-1] == "circle"


def test_sweep_rejects_bad_scale():
    with pytest.raises(ValueError):
        ellipse_sweep_experiment(SpectralRectangle(-1.0, 0.0, 1.0), scales=(0.0,))
