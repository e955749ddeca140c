import numpy as np
import pytest
import scipy.sparse as sps

from conftest import realization
from ladderalg.errors import AmbiguousGroundState
from ladderalg.operators import Grid, LinearOperator
from ladderalg.spectra import compare, ground_state_from_annihilator, ladder_climb

LADDER_FAMILIES = ["harmonic-canonical", "A-harmonic", "B-radial-osc", "C-pt2", "D-pt1",
                   "pt-canonical"]


@pytest.fixture(scope="module")
def comparisons():
    cache = {}

    def get(fid):
        if fid not in cache:
            cache[fid] = compare(realization(fid))
        return cache[fid]
    return get


@pytest.mark.parametrize("fid", LADDER_FAMILIES)
def test_ladder_matches_direct(fid, comparisons):
    c = comparisons(fid)
    d, lad = np.array(c.direct), np.array(c.ladder)
    assert len(lad) == len(d)
    assert np.all(np.abs(lad - d) <= 1e-3 * np.maximum(1.0, np.abs(d)))
    assert min(c.overlaps) >= 0.999
    assert c.annihilation_residual <= 1e-3
    assert all(0.0 <= o <= 1.0 + 1e-12 for o in c.overlaps)
    assert np.all(np.diff(np.real(d)) > 0)


@pytest.mark.parametrize("fid,source", [("harmonic-canonical", "exact"), ("pt-canonical", "exact"),
                                        ("E-radial-coulomb", "exact"), ("F-radial-l", "exact"),
                                        ("B-radial-osc", "dvr"), ("C-pt2", "dvr"),
                                        ("D-pt1", "dvr")])
def test_direct_eigenvalues_match_oracle(fid, source, oracle):
    r = realization(fid)
    ref = np.array(oracle[source][fid])
    got = r.spectrum.eigenvalues.real[:min(r.spectrum.k, len(ref))]
    np.testing.assert_allclose(got, ref[:len(got)], rtol=1e-5, atol=1e-5)


def test_j0_sequence(comparisons):
    c = comparisons("harmonic-canonical")
    assert c.j0_offset == pytest.approx(0.5, abs=1e-6)
    assert c.j0_step_deviation <= 1e-6


def test_pseudo_spectrum_spacing(oracle):
    c = compare(realization("E-radial-coulomb"))
    spacing = np.diff(np.array(c.direct, dtype=float))
    expected = np.diff(oracle["exact"]["E-radial-coulomb"][:len(c.direct)])
    np.testing.assert_allclose(spacing, expected, atol=1e-3)
    assert min(c.overlaps) >= 0.999


def test_partial_family_tower(oracle):
    c = compare(realization("F-radial-l"))
    ls = oracle["exact"]["F-radial-l-l"]
    np.testing.assert_allclose(c.tower, [-l for l in ls], atol=1e-3)


def test_ambiguous_ground_state():
    g = Grid(0, 1, 16)
    with pytest.raises(AmbiguousGroundState):
        ground_state_from_annihilator(LinearOperator.zero(g), g)


def test_climb_stops_at_top():
    g = Grid(0, 1, 16)
    jp = LinearOperator(g, sps.diags(np.ones(15), 1))      # shifts e_{i+1} -> e_i
    psi0 = np.zeros(16)
    psi0[3] = 1.0
    res = ladder_climb(jp, psi0, steps=10)
    assert res.stopped is not None and "after 3 steps" in res.stopped
    assert len(res.states) == 4


def test_rows_layout(comparisons):
    rows = comparisons("harmonic-canonical").rows()
    assert list(rows[0]) == ["n", "E_direct", "E_ladder", "J0_eig", "overlap",
                             "annihilation_residual"]
    assert rows[0]["annihilation_residual"] is not None
    assert all(r["annihilation_residual"] is None for r in rows[1:])
