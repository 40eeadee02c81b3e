import numpy as np
import pytest

from stepanov.curvature import curvature
from stepanov.errors import ManifestError
from stepanov.jets import metric_jet, potential_metric_jet
from stepanov.kahler import check_structure
from stepanov.pipeline import sample_points
from stepanov.zoo import INSPECTION, RECOMPUTED, zoo_entry, zoo_list, zoo_names

EXPECTED = ["flat-C2", "flat-pseudo-C2", "cp1-fs", "cp2-fs", "kahler-nonEinstein", "s4-like-nonkahler", "flrw-dust"]


def test_catalog_order_and_tags():
    assert zoo_names() == EXPECTED
    for e in zoo_list():
        assert e.reference
        for r in e.reference.values():
            assert r.check in (INSPECTION, RECOMPUTED)
    with pytest.raises(ManifestError):
        zoo_entry("nope")


def both(name, p):
    m = zoo_entry(name).manifest
    return [curvature(metric_jet(m, p, method=k)[0]) for k in ("taylor", "fd")]


@pytest.mark.parametrize("name,scalar", [("cp1-fs", 2.0), ("cp2-fs", 24.0), ("s4-like-nonkahler", 12.0)])
def test_constant_scalar_curvature_both_paths(name, scalar):
    m = zoo_entry(name).manifest
    assert zoo_entry(name).reference.get("scalar_curvature").value == scalar
    for p in sample_points(m, 3, 8):
        exact, fd = both(name, p)
        assert exact.scalar == pytest.approx(scalar, abs=1e-11)
        assert fd.scalar == pytest.approx(scalar, abs=1e-6)


def test_cp2_einstein_constant_and_energy_momentum():
    ref = zoo_entry("cp2-fs").reference
    for cp in both("cp2-fs", [0.3, -0.4, 0.5, 0.1]):
        np.testing.assert_allclose(cp.ricci, ref["einstein_constant"].value * cp.g, atol=1e-7)
        np.testing.assert_allclose(cp.T, ref["energy_momentum_factor"].value * cp.g, atol=1e-6)


def test_non_einstein_scalar_formula():
    m = zoo_entry("kahler-nonEinstein").manifest
    assert zoo_entry("kahler-nonEinstein").reference["scalar_curvature_at_centroid"].value == -4.0
    for p in sample_points(m, 4, 3):
        exact, fd = both("kahler-nonEinstein", p)
        want = -4.0 / (1 + p[0] ** 2 + p[2] ** 2) ** 3
        assert exact.scalar == pytest.approx(want, abs=1e-12)
        assert fd.scalar == pytest.approx(want, abs=1e-7)


def test_flrw_dust_energy_momentum():
    m = zoo_entry("flrw-dust").manifest
    for p in sample_points(m, 4, 3):
        t = p[0]
        for cp in both("flrw-dust", p):
            assert cp.scalar == pytest.approx(4 / (3 * t * t), abs=1e-7)
            want = np.zeros((4, 4))
            want[0, 0] = 4 / (3 * t * t)
            np.testing.assert_allclose(cp.T, want, atol=1e-7)


def test_cp1_potential_normalization():
    ref = zoo_entry("cp1-fs").reference["potential_equivalent"]
    p = [0.7, -0.3]
    scaled, _ = potential_metric_jet(ref.value, p, ["x", "y"])
    plain, _ = potential_metric_jet("log(1 + x^2 + y^2)", p, ["x", "y"])
    assert curvature(scaled).scalar == pytest.approx(2.0, abs=1e-12)
    assert curvature(plain).scalar == pytest.approx(8.0, abs=1e-12)


def test_kahler_verdicts_both_paths():
    for e in zoo_list():
        want = e.reference["kahler"].value
        m = e.manifest
        for method in ("taylor", "fd"):
            jet, sjet = metric_jet(m, m.centroid, method=method)
            rep = check_structure(jet, sjet, curvature(jet), 1e-8 if method == "taylor" else 1e-4)
            assert (None if rep is None else rep.is_kahler) == want, (e.name, method)
