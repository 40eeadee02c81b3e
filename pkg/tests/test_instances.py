import numpy as np
import pytest

from stepanov import classify as cl
from stepanov.errors import StepanovError
from stepanov.instances import generate_instance, hybrid_symmetric_basis


@pytest.mark.parametrize("cid", ["O2*", "O4*", "O3*", "unconstrained"])
@pytest.mark.parametrize("dim", [4, 6])
def test_constraints_hold(cid, dim):
    inst = generate_instance(dim, cid, seed=3)
    for name, r in inst.constraint_residuals().items():
        assert r < 1e-12, name
    assert abs(np.linalg.det(inst.g)) > 1e-10


def test_o2s_instance_is_member():
    inst = generate_instance(4, "O2*", seed=1)
    fit = cl.classify("O2*", inst.g, None, inst.F, inst.T, inst.D)
    assert fit.rel_residual < 1e-10


def test_unconstrained_is_generically_outside_o2s():
    outside = 0
    for seed in range(100):
        inst = generate_instance(4, "unconstrained", seed=seed)
        fit = cl.classify("O2*", inst.g, None, inst.F, inst.T, inst.D)
        outside += fit.rel_residual > 0.1
    assert outside >= 95


def test_o4s_dim6_satisfies_constraint():
    inst = generate_instance(6, "O4*", seed=7)
    spec = cl.get_class("O4*")
    lhs = spec.lhs(inst.D)
    rhs = spec.rhs_value(inst.planted, inst.g, inst.T, inst.F)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_zero_plant_gives_zero_vectors_in_o5s():
    zero = {"rho": np.zeros(4), "sigma": np.zeros(4)}
    inst = generate_instance(4, "O4*", seed=2, planted=zero)
    fit = cl.classify("O5*", inst.g, None, inst.F, inst.T, inst.D)
    assert fit.member
    assert all(np.abs(v).max() < 1e-12 for v in fit.vectors.values())


def test_hybrid_basis_shapes():
    assert hybrid_symmetric_basis(4).shape == (64, 16)
    assert hybrid_symmetric_basis(6).shape == (216, 54)


def test_same_seed_same_instance():
    a = generate_instance(4, "O2*", seed=11)
    b = generate_instance(4, "O2*", seed=11)
    np.testing.assert_array_equal(a.D, b.D)


def test_bad_dimension():
    with pytest.raises(StepanovError):
        generate_instance(5, "O2*", seed=0)
