from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sps

from conftest import realization
from ladderalg.algebra import (RESIDUAL_KEYS, classify_case, family_tolerance,
                               freedom_invariance, identity_residual, random_rescaling, solve_xi,
                               verify_algebra, verify_family, verify_nlda)
from ladderalg.errors import AlgebraNotRealizable, EtaRelationViolated
from ladderalg.operators import Grid, LinearOperator, adjoint, solve_eigen


def spin_triple(j2: int):
    """Spin j = j2/2 matrices on a grid of size 2j + 1."""
    g = Grid(0.0, 1.0, j2 + 1)
    j = j2 / 2
    m = j - np.arange(j2 + 1)                         # descending
    jp = np.zeros((j2 + 1, j2 + 1))
    for i in range(1, j2 + 1):
        jp[i - 1, i] = np.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    J0 = LinearOperator(g, sps.diags(m))
    Jp = LinearOperator(g, sps.csr_matrix(jp))
    Jm = LinearOperator(g, sps.csr_matrix(jp.T))
    return g, J0, Jp, Jm


def test_synthetic_su2_triple():
    g, J0, Jp, Jm = spin_triple(15)
    sp = solve_eigen(J0, 8, hermitian=True)
    rep = verify_algebra(J0, Jp, Jm, "su2", 8, spectrum=sp)
    assert rep.sign == "su2"
    assert rep.closure_coefficient == pytest.approx(2.0, abs=1e-12)
    for key in ("JJ-lower", "JJ-raise", "closure", "hermiticity"):
        assert rep.residuals[key] <= 1e-12
    assert rep.passed


def test_synthetic_sign_mismatch_fails():
    g, J0, Jp, Jm = spin_triple(17)
    sp = solve_eigen(J0, 6, hermitian=True)
    rep = verify_algebra(J0, Jp, Jm, "su11", 6, spectrum=sp)
    assert rep.sign == "su2" and not rep.passed


def test_residual_metric_scale():
    g, J0, Jp, Jm = spin_triple(15)
    sp = solve_eigen(J0, 4, hermitian=True)
    # an identity that fails by exactly 1 per state against terms of size |m| + 1
    r = identity_residual([(1.0, J0), (-1.0, J0 + LinearOperator(g, sps.identity(16)))], sp)
    assert 0 < r < 1


@pytest.mark.parametrize("fid,case", [("harmonic-canonical", 2), ("A-harmonic", 2),
                                      ("B-radial-osc", 1), ("C-pt2", 3), ("D-pt1", 3)])
def test_case_labels(fid, case):
    assert classify_case(realization(fid)).case == case


def test_eta_relation_violation():
    r = realization("harmonic-canonical")
    broken = replace(r, raise_op=r.S2 + r.S2 @ r.S2)
    with pytest.raises(EtaRelationViolated):
        classify_case(broken)


def test_no_realizable_dressing():
    r = realization("harmonic-canonical")
    swapped = replace(r, b=r.S2, raise_op=r.S1, bdag=adjoint(r.S2))
    with pytest.raises(AlgebraNotRealizable):
        solve_xi(classify_case(swapped), swapped)


def test_harmonic_dressing_is_b0_plus_half():
    r = realization("harmonic-canonical")
    xi = solve_xi(classify_case(r), r)
    p, q = xi.coefficients
    assert p == pytest.approx(1.0, rel=1e-5) and q == pytest.approx(0.5, rel=1e-5)


def test_report_keys_stable():
    for fid in ("harmonic-canonical", "E-radial-coulomb"):
        d = verify_family(realization(fid)).as_dict()
        assert list(d["residuals"]) == list(RESIDUAL_KEYS)
        assert list(d["enforced"]) == list(RESIDUAL_KEYS)


def test_harmonic_report():
    rep = verify_family(realization("harmonic-canonical"))
    assert rep.passed and rep.sign == "su11"
    assert rep.residuals["closure"] <= 1e-6
    assert rep.tolerance == pytest.approx(family_tolerance(realization("harmonic-canonical")))


def test_pseudo_family_report():
    rep = verify_family(realization("E-radial-coulomb"))
    assert rep.sign == "su11-pseudo"
    assert rep.enforced["hermiticity"] == "measured"
    assert rep.residuals["closure"] <= 1e-4
    assert rep.j0_hermiticity > 1e3 * rep.residuals["closure"]


def test_partial_family_closure_unconstrained():
    rep = verify_family(realization("F-radial-l"))
    assert rep.enforced["closure"] == "unconstrained"
    assert rep.passed


def test_nlda_residuals():
    nl = verify_nlda(realization("pt-canonical"))
    assert max(nl["NLDA-f"], nl["NLDA-g-lower"], nl["NLDA-g-raise"]) <= 1e-4
    with pytest.raises(ValueError):
        verify_nlda(realization("harmonic-canonical"))


def test_invariance_helper_reports_all_fields():
    rng = np.random.default_rng(3)
    d = freedom_invariance(realization("D-pt1"), rng.uniform(-2, 2, 3),
                           [random_rescaling(rng) for _ in range(3)])
    assert d["free2_bS"] <= 1e-10
    assert d["free1_HSS"] <= 1e-5 and d["free1_closure"] <= 1e-5
