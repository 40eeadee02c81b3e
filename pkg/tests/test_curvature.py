import numpy as np
import pytest

from stepanov.curvature import (
    christoffel,
    covariant_derivative,
    curvature,
    divergence_T,
    geodesic_trace,
    killing_quadratic_check,
    quadratic_drift,
    trace_identity_residual,
)
from stepanov.jets import manifest_from_dict, metric_jet
from stepanov.pipeline import sample_points
from stepanov.zoo import zoo_list, zoo_manifest

ALL = [e.name for e in zoo_list()]


def gamma_provider(m):
    return lambda x: christoffel(metric_jet(m, x, order=1)[0]).gamma


def form_provider(m, which):
    return lambda x: getattr(curvature(metric_jet(m, x)[0]), which)


def test_flat_everything_zero():
    cp = curvature(metric_jet(zoo_manifest("flat-C2"), [0.1, 0.2, 0.3, 0.4])[0])
    for a in (cp.gamma, cp.riemann, cp.ricci, cp.T, cp.dT, cp.dricci, cp.dscalar):
        assert not np.any(a)
    assert cp.scalar == 0.0
    assert not np.any(divergence_T(cp))


def test_sphere_christoffel_at_theta_one(sphere2):
    con = christoffel(metric_jet(sphere2, [1.0, 0.0])[0])
    assert con.gamma[0, 1, 1] == pytest.approx(-np.sin(1) * np.cos(1), abs=1e-14)
    assert con.gamma[1, 0, 1] == pytest.approx(np.cos(1) / np.sin(1), abs=1e-14)
    assert con.gamma[1, 1, 0] == con.gamma[1, 0, 1]


def test_sphere_curvature_oracle(sphere2):
    for p in sample_points(sphere2, 10, 3):
        cp = curvature(metric_jet(sphere2, p)[0])
        g = np.diag([1.0, np.sin(p[0]) ** 2])
        np.testing.assert_allclose(cp.ricci, g, atol=1e-12)
        assert cp.scalar == pytest.approx(2.0, abs=1e-12)
        assert np.abs(cp.T).max() < 1e-12


def test_cp1_connection_vanishes_at_origin():
    con = christoffel(metric_jet(zoo_manifest("cp1-fs"), [0.0, 0.0])[0])
    assert not np.any(con.gamma)


def test_cp2_einstein_constant_is_uniform():
    m = zoo_manifest("cp2-fs")
    lams = []
    for p in sample_points(m, 9, 42):
        cp = curvature(metric_jet(m, p)[0])
        lam = np.trace(cp.g_inv @ cp.ricci) / 4
        np.testing.assert_allclose(cp.ricci, lam * cp.g, atol=1e-12 * max(1, np.abs(cp.g).max()))
        np.testing.assert_allclose(cp.T, -lam * cp.g, atol=1e-11)
        assert np.abs(cp.dT).max() < 1e-9
        lams.append(lam)
    assert max(lams) - min(lams) < 1e-11
    fd = curvature(metric_jet(m, m.centroid, method="fd")[0])
    assert np.trace(fd.g_inv @ fd.ricci) / 4 == pytest.approx(lams[0], abs=1e-7)


@pytest.mark.parametrize("name", ALL)
def test_levi_civita_axioms_and_identities(name):
    m = zoo_manifest(name)
    for p in sample_points(m, 4, 11):
        jet, sjet = metric_jet(m, p)
        cp = curvature(jet)
        assert np.abs(cp.gamma - cp.gamma.transpose(0, 2, 1)).max() < 1e-14
        nabla_g = covariant_derivative(jet.g, jet.dg, cp.gamma, "dd")
        assert np.abs(nabla_g).max() < 1e-12 * max(1.0, np.abs(jet.dg).max())
        R = cp.riemann
        scale = max(1.0, np.abs(R).max())
        assert np.abs(R + R.transpose(0, 1, 3, 2)).max() < 1e-10 * scale
        bianchi = R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)
        assert np.abs(bianchi).max() < 1e-10 * scale
        assert np.abs(cp.ricci - cp.ricci.T).max() < 1e-12 * scale
        assert np.abs(cp.dT - cp.dT.transpose(1, 0, 2)).max() < 1e-10 * scale
        assert cp.scalar == pytest.approx(np.einsum("ij,ij->", cp.g_inv, cp.ricci), abs=1e-11 * scale)
        assert trace_identity_residual(cp) < 1e-10 * scale
        # nabla Ric = nabla T + (1/2) dR g
        recon = cp.dT + 0.5 * np.einsum("k,ij->ijk", cp.dscalar, cp.g)
        assert np.abs(cp.dricci - recon).max() < 1e-10 * scale


@pytest.mark.parametrize("name", ["cp2-fs", "kahler-nonEinstein", "s4-like-nonkahler", "flrw-dust"])
def test_scalar_gradient_matches_finite_differences(name):
    m = zoo_manifest(name)
    p = sample_points(m, 2, 5)[1]
    cp = curvature(metric_jet(m, p)[0])
    h = 1e-4
    fd = np.zeros(m.dim)
    for k in range(m.dim):
        e = np.zeros(m.dim)
        e[k] = h
        rp = curvature(metric_jet(m, p + e)[0]).scalar
        rm = curvature(metric_jet(m, p - e)[0]).scalar
        fd[k] = (rp - rm) / (2 * h)
    np.testing.assert_allclose(cp.dscalar, fd, atol=1e-5)


def test_covariant_derivative_requires_partials():
    with pytest.raises(ValueError):
        covariant_derivative(np.eye(2), None, np.zeros((2, 2, 2)), "dd")


def test_flat_geodesic_is_straight_line():
    m = zoo_manifest("flat-C2")
    x0 = np.array([0.1, 0.0, -0.2, 0.3])
    v0 = np.array([0.2, -0.1, 0.05, 0.1])
    tr = geodesic_trace(gamma_provider(m), x0, v0, 1.0, 64, m.contains)
    assert not tr.exited
    for st in tr.states:
        np.testing.assert_allclose(st.x, x0 + st.s * v0, atol=1e-12)
    assert killing_quadratic_check(tr, form_provider(m, "ricci")) == 0.0


def test_sphere_great_circle_closes():
    # the longitude is unwrapped, so the chart covers several turns
    m = manifest_from_dict(
        {
            "name": "s2-unwrapped",
            "dim": 2,
            "coords": ["θ", "φ"],
            "signature": [1, 1],
            "domain": [[0.2, 2.9], [-10, 10]],
            "metric": {"1,1": "1", "2,2": "sin(θ)^2"},
        }
    )
    x0 = np.array([np.pi / 2, -np.pi])
    tr = geodesic_trace(gamma_provider(m), x0, [0.0, 1.0], 2 * np.pi, 512, m.contains)
    assert not tr.exited
    end = tr.states[-1]
    assert end.x[0] == pytest.approx(np.pi / 2, abs=1e-6)
    assert end.x[1] - 2 * np.pi == pytest.approx(x0[1], abs=1e-6)
    drift = killing_quadratic_check(tr, lambda x: np.diag([1.0, np.sin(x[0]) ** 2]))
    assert drift < 1e-6


def test_geodesic_reports_chart_exit():
    m = zoo_manifest("cp1-fs")
    tr = geodesic_trace(gamma_provider(m), [1.9, 0.0], [1.0, 0.0], 1.0, 32, m.contains)
    assert tr.exited
    assert len(tr) < 33


@pytest.mark.parametrize("name", ["cp1-fs", "cp2-fs", "kahler-nonEinstein"])
def test_speed_is_conserved(name):
    m = zoo_manifest(name)
    rng = np.random.default_rng(9)
    x0 = m.centroid + 0.1
    v0 = rng.normal(size=m.dim) * 0.3
    tr = geodesic_trace(gamma_provider(m), x0, v0, 1.0, 256, m.contains)
    assert not tr.exited
    assert quadratic_drift(tr, lambda x: metric_jet(m, x, order=0)[0].g) < 1e-8
