import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import realization
from ladderalg.algebra import closure_residual, shift_residuals
from ladderalg.families import rescale_s1, shift_b0

FAMILIES = ["harmonic-canonical", "pt-canonical", "A-harmonic", "B-radial-osc", "C-pt2",
            "D-pt1", "E-radial-coulomb", "F-radial-l"]
FREE2_TOL = 1e-8
FREE1_TOL = 1e-5
SAMPLES = settings(max_examples=20, deadline=None, derandomize=True,
                   suppress_health_check=[HealthCheck.too_slow])

shifts = st.floats(-5.0, 5.0, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
rescalings = st.tuples(st.floats(-0.7, 0.7), st.floats(0.0, 0.5), st.floats(0.2, 2.0))


def as_function(abc):
    a, b, c = abc
    return lambda m: np.exp(a + b * np.sin(c * np.real(np.asarray(m))))


@pytest.mark.parametrize("fid", FAMILIES)
@SAMPLES
@given(c=shifts)
def test_b0_shift_leaves_bs_residuals(fid, c):
    r = realization(fid)
    base = shift_residuals(r, r.k)
    new = shift_residuals(shift_b0(r, c), r.k)
    for key in ("bS-lower", "bS-raise"):
        assert abs(new[key] - base[key]) <= FREE2_TOL


@pytest.mark.parametrize("fid", FAMILIES)
@SAMPLES
@given(abc=rescalings)
def test_s1_rescaling_leaves_residuals(fid, abc):
    r = realization(fid)
    moved = rescale_s1(r, as_function(abc))
    base = shift_residuals(r, r.k)
    new = shift_residuals(moved, r.k)
    for key in ("HSS-lower", "HSS-raise"):
        assert abs(new[key] - base[key]) <= FREE1_TOL
    if r.spec.expected_algebra != "partial":
        assert abs(closure_residual(moved, r.k) - closure_residual(r, r.k)) <= FREE1_TOL
