import math

import numpy as np
import pytest

import nvmask


def test_open_area_ratio():
    assert nvmask.open_area_ratio(5.87, 4.8) == pytest.approx(0.2745, abs=1e-3)
    assert nvmask.open_area_ratio(5.87, 0.0) == pytest.approx(math.pi / math.sqrt(12.0), abs=1e-12)
    with pytest.raises(ValueError):
        nvmask.open_area_ratio(5.87, -1.0)


def test_dose_and_counts():
    assert nvmask.effective_dose(4e13, 0.264) == pytest.approx(1.056e13, rel=1e-12)
    area = math.pi * (32.23 / 2) ** 2
    assert nvmask.expected_ion_count(4e13, area) == pytest.approx(326.3, rel=1e-3)


def test_transmits_matches_ratio():
    rng = np.random.default_rng(1)
    xy = rng.uniform(0.0, 3000.0, size=(50000, 2))
    open_fraction = nvmask.transmits(5.87, 4.8, xy).mean()
    assert open_fraction == pytest.approx(0.2745, abs=0.01)


def test_nearest_neighbours_against_numpy():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0.0, 50.0, size=(300, 3))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    np.testing.assert_allclose(nvmask.nearest_neighbor_distances(pts), d.min(1), rtol=1e-12)


def test_kde_normalised():
    rng = np.random.default_rng(3)
    pts = rng.normal(0.0, 2.0, size=(200, 2))
    grid, h, coverage = nvmask.kde2d(pts, (-15.0, -15.0), 0.5, 61, 61)
    assert grid.shape == (61, 61)
    assert grid.sum() * 0.25 == pytest.approx(1.0, abs=1e-3)
    assert h > 0 and coverage > 0.99


def test_fwhm_gaussian():
    rng = np.random.default_rng(4)
    assert nvmask.fwhm(rng.normal(size=100000), 0.05) == pytest.approx(2.3548, abs=0.1)


def test_coupling_and_emitters():
    assert 1e6 / nvmask.dipolar_coupling(10.0) == pytest.approx(19.2, abs=0.05)
    assert nvmask.strongly_coupled(nvmask.dipolar_coupling(10.0), 20.0)
    assert [nvmask.count_emitters(g) for g in (0.4, 0.65, 0.7)] == ["1", "2", "3"]


def test_g2_round_trip():
    t = np.arange(-300.0, 300.25, 0.5)
    g2 = np.array([nvmask.g2_model(x, 2.0, 12.0, 150.0, 0.5) for x in t])
    fit = nvmask.fit_g2(t, g2)
    assert fit["g2_0"] == pytest.approx(0.5, abs=1e-6)


def test_echo_round_trip():
    t = np.linspace(0.0, 20.0, 101)
    c = np.exp(-((t / 4.5) ** 1.5))
    fit = nvmask.fit_hahn_echo(t, c)
    assert fit["t2_us"] == pytest.approx(4.5, rel=1e-6)
    assert fit["stretch"] == pytest.approx(1.5, rel=1e-6)


def test_range_table_small():
    rows = nvmask.build_range_table([1.0, 2.0], 1000, seed=3, threads=1)
    assert [r.energy_kev for r in rows] == [1.0, 2.0]
    assert rows[0].rp_nm < rows[1].rp_nm


def test_implant_run(tmp_path):
    (tmp_path / "t.csv").write_text("energy_keV,rp_nm,drp_nm,drlat_nm\n2.5,5.17,2.5,2.14\n10,19.5,8.56,7.3\n")
    (tmp_path / "run.cfg").write_text("[ebl]\nnx = 4\nny = 4\n[transport]\nrange_table = t.csv\n")
    csv, spots = nvmask.run_implant(str(tmp_path / "run.cfg"), seed=3, out=str(tmp_path / "out"))
    import json

    doc = json.loads(open(spots).read())
    assert doc["schema_version"] == nvmask.schema_version
    assert doc["n_holes"] == 16
    with pytest.raises(ValueError, match="no seed"):
        nvmask.run_implant(str(tmp_path / "run.cfg"), out=str(tmp_path / "o2"))
