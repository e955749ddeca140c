import numpy as np
import pytest

from conftest import realization
from ladderalg.algebra import identity_residual
from ladderalg.errors import ConstraintViolation, FunctionalEquationViolation, SingularEvaluation
from ladderalg.families import (build_b0_from_omegas, commutation_entries,
                                diagonalize_commutation_matrix, instantiate, shift_functions)
from ladderalg.catalog import get_family
from ladderalg.operators import HFunc, adjoint, identity

HERMITIAN = ["harmonic-canonical", "pt-canonical", "A-harmonic", "B-radial-osc", "C-pt2", "D-pt1"]
ALL = HERMITIAN + ["E-radial-coulomb", "F-radial-l"]


def test_harmonic_lowering_is_a():
    r = realization("harmonic-canonical")
    comm = identity_residual([(1.0, r.S1 @ r.S2), (-1.0, r.S2 @ r.S1), (-1.0, identity(r.grid))],
                             r.spectrum, 8)
    assert comm <= 1e-6
    herm = identity_residual([(1.0, adjoint(r.S1)), (-1.0, r.S2)], r.spectrum, 8)
    assert herm <= 1e-6


@pytest.mark.parametrize("fid", HERMITIAN)
def test_s1_lowers_by_one_level(fid):
    r = realization(fid)
    sp, g = r.spectrum, r.grid
    out = r.S1.apply(sp.vectors[:, :r.k])
    nrm = g.norm(out, axis=0)
    assert nrm[0] <= 1e-3 * nrm.max()
    for n in range(1, r.k):
        ov = abs(g.inner(sp.vectors[:, n - 1], out[:, n])) / nrm[n]
        assert ov >= 0.999


def test_b_adjoint_relation():
    # at alpha = 0 the adjoint defect 1 + (alpha^2 - alpha sqrt(alpha^2 + 2 lambda))/lambda is 1
    r = realization("B-radial-osc")
    res = identity_residual([(1.0, adjoint(r.S1)), (-1.0, r.S2)], r.spectrum, r.k)
    assert res <= 1e-4


@pytest.mark.parametrize("fid", ALL)
@pytest.mark.parametrize("shift", [None, 10.0])
def test_function_of_b0_intertwines(fid, shift):
    r = realization(fid)
    f = (lambda t: t) if shift is None else (lambda t: np.sqrt(t + shift))
    lhs = r.b0_function(f) @ r.b
    rhs = r.b @ r.b0_function(lambda t: f(t - 1))
    assert identity_residual([(1.0, lhs), (-1.0, rhs)], r.spectrum, r.k, r.excluded) <= 1e-5


@pytest.mark.parametrize("fid", ALL)
def test_b0_steps_by_one(fid):
    r = realization(fid)
    m = np.sort(r.b0_eigenvalues[:r.k].real)
    np.testing.assert_allclose(np.diff(m), 1.0, atol=1e-3)
    assert r.b0_check.max_residual <= 1e-8


def test_commutation_matrix_harmonic():
    d = diagonalize_commutation_matrix(commutation_entries(get_family("harmonic-canonical")
                                                           .scalar_values({})))
    # constant shift: Omega1 = Omega2 = 1 on any energy
    e = np.array([0.5, 3.5])
    np.testing.assert_allclose(d.omega1(e), 1.0)
    np.testing.assert_allclose(d.omega2(e), 1.0)


def test_shift_functions_solve_linear_system():
    spec = get_family("C-pt2")
    vals = spec.resolve_params({"alpha": 0.3, "c2": 0.2, "c1": -0.06})
    s = spec.scalar_values(vals)
    f, g = shift_functions(s)
    e = np.array([-3.0, 1.5])
    nu, lam, beta, alpha, tau, gamma = (s[k] for k in ("nu", "lambda", "beta", "alpha", "tau",
                                                       "gamma"))
    np.testing.assert_allclose(nu * f(e) + 2 * lam * g(e), tau, atol=1e-12)
    np.testing.assert_allclose((1 + beta * e) * f(e) + alpha * g(e), gamma * e, atol=1e-12)


def test_b0_functional_equation_detects_wrong_b0():
    r = realization("D-pt1")
    wrong = HFunc(lambda e: 2 * np.sqrt(np.asarray(e, dtype=complex)))
    with pytest.raises(FunctionalEquationViolation):
        build_b0_from_omegas(r.omega1, r.omega2, wrong, r.spectrum.eigenvalues)


def test_constraint_checked_before_building():
    with pytest.raises(ConstraintViolation):
        instantiate("A-harmonic", {"lambda": -4.0})


def test_singular_potential_rejected():
    with pytest.raises(SingularEvaluation):
        instantiate("C-pt2", {"b": -0.5}, n=400)


def test_clipping_recorded():
    r = realization("F-radial-l")
    assert r.k == 3
    assert any("clipped" in note for note in r.notes)
