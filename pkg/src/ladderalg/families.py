"""Family recipes: from catalog forms to shift operators and algebra generators.

The shift operators are obtained generically.  The closed set {H, Q, P} gives

    [H, (Q~, P~)] = (Q~, P~) M(H),   M = ((nu, 1 + beta H), (2 lambda, alpha))

with Q~ = Q + f(H), P~ = P + g(H).  The eigenvalues mu of M (as functions of H)
give S = Q~ s(H) + P~ with s = (mu - alpha)/(2 lambda), so that [H, S] = S mu(H).
Each family then rescales the columns by the functions of H used in its printed
closed forms.  Everything that is not a polynomial in H is realized on the
lowest eigen-subspace of H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .catalog import FamilySpec, get_family
from .errors import BranchViolation, FunctionalEquationViolation, SingularEvaluation
from .operators import (
    Grid,
    HFunc,
    LinearOperator,
    Spectrum,
    adjoint,
    build_first_order,
    identity,
    build_hamiltonian,
    mul_operator,
    principal_sqrt,
    solve_eigen,
)

__all__ = [
    "Recipe",
    "RECIPES",
    "CommutationEntries",
    "Diagonalization",
    "LadderRealization",
    "commutation_entries",
    "diagonalize_commutation_matrix",
    "build_b0_from_omegas",
    "shift_functions",
    "physical_subspace",
    "instantiate",
    "default_grid",
    "shift_b0",
    "rescale_s1",
]

DEFAULT_K = 8
EXTRA_FUNCTION_STATES = 4
MASS_FRACTION = 0.999


# ---------------------------------------------------------------------------
# per-family closed forms

def _sqrt(z):
    return principal_sqrt(z)


@dataclass(frozen=True)
class Recipe:
    """Closed forms that the generic construction cannot infer.

    Functions of ``m`` act on b0 eigenvalues, functions of ``e`` on H eigenvalues;
    all receive the resolved parameter dict ``p`` as second argument.
    """

    root1: str                                  # root of M paired with S1: "minus" | "plus"
    rho1: Callable                              # p -> HFunc rescaling S1 on the right
    rho2: Callable
    b: str                                      # which S lowers b0
    b0: Callable                                # p -> HFunc
    b0_text: str
    pseudo: bool = False                        # b^dagger := raising S instead of adjoint
    jplus_sign: float = 1.0                     # normalization freedom fixing the closure sign
    energy_lowering: str = "Jminus"             # generator that annihilates the ground state
    tower: Callable | None = None               # (E, b0, p) -> family eigenvalue label
    eta: Callable | None = None                 # (m, p) -> eta(m)
    eta_printed: Callable | None = None
    xi_shape: Callable = lambda m, p: np.ones_like(m)   # xi^2 = xi1 * shape
    xi1: Callable = lambda p: 1.0
    xi0: Callable = lambda p: 0.0
    xi_sign: str = "su11"                       # sign of the closure for the closed form
    printed_ratio1: Callable | None = None      # (e, p) -> Q~/P~ coefficient ratio of printed S1
    printed_ratio2: Callable | None = None
    radicand: Callable | None = None            # (e, p) -> value that must stay >= 0
    walls: tuple[str, str] = ("truncated", "truncated")
    k_default: int = DEFAULT_K
    nlda: bool = False


def _omega(p):
    return math.sqrt((complex(p["alpha"]) ** 2 + 2 * complex(p["lambda"])).real)


def _rc(p):   # family C radicand pieces
    return (p["alpha"] + p["c"] ** 2) ** 2 + 2 * p["lambda"], 4 * p["c"] ** 2


def _rd(p):
    return (p["alpha"] - p["k"] ** 2) ** 2 + 2 * p["lambda"], 4 * p["k"] ** 2


def _const(c):
    return lambda p: HFunc.const(c)


RECIPES: dict[str, Recipe] = {
    "harmonic-canonical": Recipe(
        root1="minus",
        rho1=_const(1j / math.sqrt(2)), rho2=_const(-1j / math.sqrt(2)),
        b="S1", b0=lambda p: HFunc.linear(0.0, 1.0), b0_text="H",
        eta=lambda m, p: np.ones_like(m),
        xi_shape=lambda m, p: m + 0.5, xi1=lambda p: 1.0,
        printed_ratio1=lambda e, p: -np.ones_like(e), printed_ratio2=lambda e, p: np.ones_like(e),
    ),
    "pt-canonical": Recipe(
        root1="minus",
        rho1=lambda p: HFunc.const(1j / p["k"] ** 2),
        rho2=lambda p: HFunc(lambda e: -1j / p["k"] ** 2 * (p["k"] ** 2 + _sqrt(p["k"] ** 2 * e))
                             / _sqrt(p["k"] ** 2 * e)),
        b="S1", b0=lambda p: HFunc(lambda e: _sqrt(e) / p["k"]), b0_text="sqrt(H/eps)",
        eta=lambda m, p: np.ones_like(m),
        xi_shape=lambda m, p: m / (m + 1),
        printed_ratio1=lambda e, p: (p["k"] ** 2 + 2 * _sqrt(p["k"] ** 2 * e)) / p["k"] ** 4,
        printed_ratio2=lambda e, p: (p["k"] ** 2 - 2 * _sqrt(p["k"] ** 2 * e)) / p["k"] ** 4,
        radicand=lambda e, p: e,
        walls=("physical", "physical"), k_default=6, nlda=True,
    ),
    "A-harmonic": Recipe(
        root1="minus", rho1=_const(1.0), rho2=_const(1.0),
        b="S1", b0=lambda p: HFunc.linear(0.0, 1 / _omega(p)), b0_text="H/sqrt(alpha^2+2*lambda)",
        eta=lambda m, p: np.ones_like(m),
        xi_shape=lambda m, p: m + 0.5, xi1=lambda p: 1 / _omega(p),
        printed_ratio1=lambda e, p: np.full_like(e, 1 / (p["alpha"] - _omega(p))),
        printed_ratio2=lambda e, p: np.full_like(e, 1 / (p["alpha"] + _omega(p))),
    ),
    "B-radial-osc": Recipe(
        root1="minus",
        rho1=lambda p: HFunc.const(p["alpha"] - _omega(p)),
        rho2=lambda p: HFunc.const(p["alpha"] + _omega(p)),
        b="S1", b0=lambda p: HFunc.linear(0.0, 1 / _omega(p)), b0_text="H/sqrt(alpha^2+2*lambda)",
        eta=lambda m, p: np.full_like(m, 1 + (p["alpha"] ** 2 - p["alpha"] * _omega(p)) / p["lambda"]),
        xi1=lambda p: 1 / (8 * (p["alpha"] ** 2 + p["lambda"] - p["alpha"] * _omega(p))),
        xi0=lambda p: -(p["alpha"] / 2 - p["alpha"] * p["c2"] - p["c1"]) / (2 * _omega(p)),
        printed_ratio1=lambda e, p: np.full_like(e, 1 / (p["alpha"] - _omega(p))),
        printed_ratio2=lambda e, p: np.full_like(e, 1 / (p["alpha"] + _omega(p))),
        walls=("physical", "truncated"),
    ),
    "C-pt2": Recipe(
        root1="minus", rho1=_const(1.0), rho2=_const(1.0),
        b="S2", energy_lowering="Jplus",
        b0=lambda p: HFunc(lambda e: _sqrt(_rc(p)[0] - _rc(p)[1] * e) / (2 * p["c"] ** 2)),
        b0_text="sqrt((alpha+c^2)^2+2*lambda-4*c^2*H)/(2*c^2)",
        eta=lambda m, p: -(1 + 1 / m),
        eta_printed=lambda m, p: 1 / m - 1,
        xi_shape=lambda m, p: m / (m + 1),
        xi1=lambda p: 1 / (4 * p["a"] * p["b"] * p["c"] ** 2),
        xi_sign="su2",
        printed_ratio1=lambda e, p: -(p["alpha"] + p["c"] ** 2 + _sqrt(_rc(p)[0] - _rc(p)[1] * e))
        / (2 * p["lambda"]),
        printed_ratio2=lambda e, p: -(p["alpha"] + p["c"] ** 2 - _sqrt(_rc(p)[0] - _rc(p)[1] * e))
        / (2 * p["lambda"]),
        radicand=lambda e, p: _rc(p)[0] - _rc(p)[1] * e,
    ),
    "D-pt1": Recipe(
        root1="minus", rho1=_const(1.0), rho2=_const(1.0),
        b="S1",
        b0=lambda p: HFunc(lambda e: _sqrt(_rd(p)[0] + _rd(p)[1] * e) / (2 * p["k"] ** 2)),
        b0_text="sqrt((alpha-k^2)^2+2*lambda+4*k^2*H)/(2*k^2)",
        eta=lambda m, p: -(1 + 1 / m),
        xi_shape=lambda m, p: m / (m + 1),
        xi1=lambda p: 1 / (p["k"] ** 2 * (p["a"] ** 2 + p["b"] ** 2)),
        printed_ratio1=lambda e, p: -(p["alpha"] - p["k"] ** 2 + _sqrt(_rd(p)[0] + _rd(p)[1] * e))
        / (2 * p["lambda"]),
        printed_ratio2=lambda e, p: -(p["alpha"] - p["k"] ** 2 - _sqrt(_rd(p)[0] + _rd(p)[1] * e))
        / (2 * p["lambda"]),
        radicand=lambda e, p: _rd(p)[0] + _rd(p)[1] * e,
        walls=("physical", "physical"),
    ),
    "E-radial-coulomb": Recipe(
        root1="minus", rho1=_const(1.0), rho2=_const(1.0),
        b="S1", pseudo=True, jplus_sign=-1.0,
        b0=lambda p: HFunc.linear(0.0, 1 / _omega(p)), b0_text="H/sqrt(alpha^2+2*lambda)",
        xi0=lambda p: (p["c1"] + p["alpha"] * p["c2"]) / _omega(p),
        printed_ratio1=lambda e, p: np.full_like(e, -(p["alpha"] + _omega(p)) / (2 * p["lambda"])),
        printed_ratio2=lambda e, p: np.full_like(e, -(p["alpha"] - _omega(p)) / (2 * p["lambda"])),
        walls=("physical", "truncated"),
    ),
    "F-radial-l": Recipe(
        root1="plus",
        rho1=lambda p: HFunc.const(2 * p["lambda"]), rho2=lambda p: HFunc.const(2 * p["lambda"]),
        b="S1", pseudo=True, energy_lowering="Jplus",
        # -l = E_l + l^2 - lambda/2 with b0 = l + 1/2
        tower=lambda e, m, p: e + np.rint(m - 0.5) ** 2 - p["lambda"] / 2,
        b0=lambda p: HFunc(lambda e: 0.5 * _sqrt(1 + 2 * p["lambda"] - 4 * e)),
        b0_text="sqrt(1+2*lambda-4*H)/2",
        printed_ratio1=lambda e, p: (_sqrt(1 + 2 * p["lambda"] - 4 * e) - 1) / (2 * p["lambda"]),
        printed_ratio2=lambda e, p: -(_sqrt(1 + 2 * p["lambda"] - 4 * e) + 1) / (2 * p["lambda"]),
        radicand=lambda e, p: 1 + 2 * p["lambda"] - 4 * e,
        walls=("physical", "truncated"),
    ),
}


# ---------------------------------------------------------------------------
# generic construction

@dataclass(frozen=True)
class CommutationEntries:
    """[H,(Q~,P~)] = (Q~,P~) ((theta1, theta2), (pi1, pi2)), entries functions of H."""

    theta1: HFunc
    theta2: HFunc
    pi1: HFunc
    pi2: HFunc


def commutation_entries(scalars: Mapping[str, complex]) -> CommutationEntries:
    s = scalars
    return CommutationEntries(
        theta1=HFunc.const(s["nu"]),
        theta2=HFunc.linear(1.0, s["beta"]),
        pi1=HFunc.const(2 * s["lambda"]),
        pi2=HFunc.const(s["alpha"]),
    )


@dataclass
class Diagonalization:
    """Roots of the 2x2 commutation matrix and the matching column coefficients.

    ``s1``/``s2`` are the Q~ coefficients (P~ coefficient 1) of S1/S2;
    [H, S1] = -S1 omega1(H) and [H, S2] = S2 omega2(H).
    """

    mu1: HFunc
    mu2: HFunc
    s1: HFunc
    s2: HFunc
    omega1: HFunc
    omega2: HFunc
    discriminant: HFunc


def diagonalize_commutation_matrix(entries: CommutationEntries, energies=None,
                                   root1: str = "minus") -> Diagonalization:
    """Eigen-decomposition of the commutation matrix over the ring of H-functions."""
    e = entries
    half_tr = (e.theta1 + e.pi2) * 0.5
    half_diff = (e.theta1 - e.pi2) * 0.5
    disc = half_diff * half_diff + e.theta2 * e.pi1
    if disc.poly is not None and len([c for c in disc.poly[1:] if c != 0]) == 0:
        root = HFunc.const(complex(np.sqrt(complex(disc.poly[0]))))
        if complex(disc.poly[0]).real < 0:
            raise BranchViolation("negative discriminant of the commutation matrix")
    else:
        root = HFunc(lambda x: principal_sqrt(disc(x)))
    if energies is not None:
        principal_sqrt(disc(np.asarray(energies)))
    mu_minus, mu_plus = half_tr - root, half_tr + root
    mu1, mu2 = (mu_minus, mu_plus) if root1 == "minus" else (mu_plus, mu_minus)
    inv_pi1 = _reciprocal(e.pi1)
    s1 = (mu1 - e.pi2) * inv_pi1
    s2 = (mu2 - e.pi2) * inv_pi1
    return Diagonalization(mu1, mu2, s1, s2, -mu1, mu2, disc)


def _reciprocal(f: HFunc) -> HFunc:
    if f.poly is not None and len(f.poly) == 1:
        return HFunc.const(1 / f.poly[0])
    return HFunc(lambda x: 1 / f(x))


def shift_functions(scalars: Mapping[str, complex]) -> tuple[HFunc, HFunc]:
    """f, g with Q~ = Q + f(H), P~ = P + g(H)."""
    nu, la, al = scalars["nu"], scalars["lambda"], scalars["alpha"]
    be, ga, ta = scalars["beta"], scalars["gamma"], scalars["tau"]
    if be == 0:
        det = nu * al - 2 * la
        if det == 0:
            raise BranchViolation("singular shift system for Q~, P~")
        # f = (tau*alpha - 2*lambda*gamma*H)/det, g = (nu*gamma*H - tau)/det
        return (HFunc.linear(ta * al / det, -2 * la * ga / det),
                HFunc.linear(-ta / det, nu * ga / det))

    def solve(e):
        e = np.asarray(e, dtype=complex)
        det = nu * al - 2 * la * (1 + be * e)
        f = (ta * al - 2 * la * ga * e) / det
        g = (nu * ga * e - ta * (1 + be * e)) / det
        return f, g

    return HFunc(lambda e: solve(e)[0]), HFunc(lambda e: solve(e)[1])


@dataclass
class B0Check:
    b0: HFunc
    lower_shift: float          # measured b0(E - omega1(E)) - b0(E), averaged
    raise_shift: float
    max_residual: float
    orientation: str            # "S1 lowers b0" | "S1 raises b0"


def build_b0_from_omegas(omega1: HFunc, omega2: HFunc, b0: HFunc, energies,
                         tol: float = 1e-8) -> B0Check:
    """Check that b0 moves by -1/+1 (either orientation) under the eigenvalue maps."""
    e = np.asarray(energies, dtype=complex)
    base = b0(e)
    with np.errstate(invalid="ignore"):
        d1 = _safe(lambda: b0(e - omega1(e)) - base, e.shape)
        d2 = _safe(lambda: b0(e + omega2(e)) - base, e.shape)
    # only shifts that stay inside the sampled band are meaningful (branch points lie outside)
    lo, hi = e.real.min(), e.real.max()
    pad = 1e-6 * max(1.0, abs(lo), abs(hi))

    def inside(t):
        # near-fixed points of the map sit at branch points or poles
        t = np.asarray(t).real
        step = np.abs(t - e.real)
        return (t >= lo - pad) & (t <= hi + pad) & (step > 1e-3 * step.max())

    with np.errstate(invalid="ignore"):
        ok1 = np.isfinite(d1) & _safe_mask(lambda: inside(e - omega1(e)), e.shape)
        ok2 = np.isfinite(d2) & _safe_mask(lambda: inside(e + omega2(e)), e.shape)
    if not ok1.any() or not ok2.any():
        raise FunctionalEquationViolation("no eigenvalue admits both shifts")
    s1 = float(np.round(np.median(d1[ok1].real)))
    s2 = float(np.round(np.median(d2[ok2].real)))
    if {s1, s2} != {-1.0, 1.0}:
        raise FunctionalEquationViolation(f"b0 shifts are {s1:g} and {s2:g}, expected -1 and +1")
    scale = np.maximum(1.0, np.abs(base))
    r1 = np.abs(d1[ok1] - s1) / scale[ok1]
    r2 = np.abs(d2[ok2] - s2) / scale[ok2]
    res = float(max(r1.max(), r2.max()))
    if res > tol:
        raise FunctionalEquationViolation(f"b0 functional equation residual {res:.3g} > {tol:g}")
    return B0Check(b0, s1, s2, res, "S1 lowers b0" if s1 < 0 else "S1 raises b0")


def _safe_mask(fn, shape):
    try:
        return np.asarray(fn(), dtype=bool)
    except BranchViolation:
        return np.zeros(shape, dtype=bool)


def _safe(fn, shape):
    """Evaluate elementwise, mapping branch violations to NaN."""
    try:
        return np.asarray(fn(), dtype=complex)
    except BranchViolation:
        return np.full(shape, np.nan, dtype=complex)


# ---------------------------------------------------------------------------
# realization

@dataclass
class LadderRealization:
    """Instantiated operators on a grid."""

    spec: FamilySpec
    recipe: Recipe
    params: dict
    scalars: dict
    grid: Grid
    spectrum: Spectrum          # physical function subspace (K_f states)
    k: int                      # checking subspace size
    H: LinearOperator
    Q: LinearOperator
    P: LinearOperator
    Qt: LinearOperator
    Pt: LinearOperator
    S1: LinearOperator
    S2: LinearOperator
    b0: LinearOperator
    b: LinearOperator
    bdag: LinearOperator
    raise_op: LinearOperator    # the S that raises b0
    J0: LinearOperator
    Jplus: LinearOperator
    Jminus: LinearOperator
    omega1: HFunc
    omega2: HFunc
    b0_func: HFunc
    diag: Diagonalization
    b0_check: B0Check
    case: int | None
    condition_number: float
    notes: list = field(default_factory=list)
    xi0: float = 0.0
    xi2: Callable | None = None
    xi_sign: str = "su11"

    @property
    def check_spectrum(self) -> Spectrum:
        return self.spectrum.truncated(self.k)

    @property
    def excluded(self) -> tuple:
        return tuple(sorted(set(self.S1.excluded) | set(self.S2.excluded)))

    def func(self, f: Callable, poles: str = "raise") -> LinearOperator:
        """Function of H on the physical subspace."""
        return HFunc(f).operator(self.H, self.spectrum, poles=poles, exact=False)

    def b0_function(self, g: Callable, poles: str = "raise") -> LinearOperator:
        """g(b0) built on the eigenbasis of H."""
        return HFunc(lambda e: g(self.b0_func(e))).operator(self.H, self.spectrum, poles=poles,
                                                             exact=False)

    @property
    def b0_eigenvalues(self) -> np.ndarray:
        return np.asarray(self.b0_func(self.spectrum.eigenvalues))


def default_grid(spec: FamilySpec, params: Mapping[str, complex], n: int | None = None) -> Grid:
    lo, hi = spec.domain_values(params)
    return Grid(lo, hi, n or spec.n)


def _check_denominator(spec: FamilySpec, params, grid: Grid) -> None:
    """Refuse potentials whose denominator vanishes inside the domain."""
    for name in ("V", "Q", "Z", "Y", "X"):
        e = spec.forms[name]
        if e.den is None:
            continue
        x = np.linspace(grid.lo, grid.hi, 4 * grid.n + 1)
        d = e.den.evaluate(x, params)
        re_ = d.real if np.abs(d.imag).max() <= 1e-12 * np.abs(d).max() else np.abs(d)
        if np.any(np.sign(re_[1:]) * np.sign(re_[:-1]) <= 0):
            i = int(np.argmax(np.sign(re_[1:]) * np.sign(re_[:-1]) <= 0))
            raise SingularEvaluation(f"{name} is singular near x={x[i]:.6g} inside the domain")


def physical_subspace(spectrum: Spectrum, recipe: Recipe, params, walls=None) -> int:
    """Number of leading eigenpairs that are bound, contained and on the principal branch."""
    walls = walls or recipe.walls
    g = spectrum.grid
    x = g.points
    width = g.hi - g.lo
    inner = np.ones(g.n, dtype=bool)
    if walls[0] == "truncated":
        inner &= x >= g.lo + 0.1 * width
    if walls[1] == "truncated":
        inner &= x <= g.hi - 0.1 * width
    dens = np.abs(spectrum.vectors) ** 2
    mass = dens[inner].sum(axis=0) / dens.sum(axis=0)
    ok = mass >= MASS_FRACTION
    if recipe.radicand is not None:
        rad = np.asarray(recipe.radicand(spectrum.eigenvalues.astype(complex), params))
        ok &= rad.real > 1e-9 * np.maximum(1.0, np.abs(rad))
    bad = np.flatnonzero(~ok)
    return int(bad[0]) if bad.size else spectrum.k


def instantiate(family_id: str, params: Mapping[str, complex] | None = None,
                grid: Grid | None = None, k: int | None = None,
                n: int | None = None) -> LadderRealization:
    """Build every operator of the family on a grid (defaults from the catalog)."""
    spec = get_family(family_id)
    recipe = RECIPES[family_id]
    vals = spec.resolve_params(params)
    spec.check_constraints(vals)
    scal = spec.scalar_values(vals)
    p = {**{kk: complex(v) for kk, v in vals.items()}, **{kk: complex(v) for kk, v in scal.items()}}
    p = {kk: (v.real if v.imag == 0 else v) for kk, v in p.items()}
    grid = grid or default_grid(spec, vals, n)
    _check_denominator(spec, vals, grid)
    notes: list[str] = []

    bnd = spec.boundary
    H = build_hamiltonian(spec.X, spec.V, vals, grid, bnd)
    Q = mul_operator(spec.Q, vals, grid)
    P = build_first_order(spec.Y, spec.Z, vals, grid, bnd)

    k = k or recipe.k_default
    kf = min(k + EXTRA_FUNCTION_STATES, grid.n)
    full = solve_eigen(H, kf, hermitian=spec.hermitian)
    keep = physical_subspace(full, recipe, p)
    if keep < 2:
        raise BranchViolation(f"only {keep} physical bound state(s) on this grid")
    spectrum = full.truncated(keep)
    if keep < kf:
        notes.append(f"function subspace clipped to {keep} bound states")
    # functions of H act on the kept states only; the closure check raises the
    # top checked state through b^dagger, which needs two kept states above it
    k_eff = min(k, keep if spec.expected_algebra == "partial" else keep - 3)
    if k_eff < k:
        notes.append(f"K clipped from {k} to {k_eff}")

    E = spectrum.eigenvalues
    entries = commutation_entries(scal)
    dg = diagonalize_commutation_matrix(entries, E, recipe.root1)
    f, g = shift_functions(scal)

    poles = "exclude"
    Qt = Q + f.operator(H, spectrum, poles)
    Pt = P + g.operator(H, spectrum, poles)

    def shift_op(s: HFunc, rho: HFunc) -> LinearOperator:
        coeff_q = s * rho
        rest = (f * s + g) * rho
        return (Q @ coeff_q.operator(H, spectrum, poles) + P @ rho.operator(H, spectrum, poles)
                + rest.operator(H, spectrum, poles))

    rho1, rho2 = recipe.rho1(p), recipe.rho2(p)
    S1 = shift_op(dg.s1, rho1)
    S2 = shift_op(dg.s2, rho2)
    b0_func = recipe.b0(p)
    b0 = b0_func.operator(H, spectrum, exact=False)
    b0chk = build_b0_from_omegas(dg.omega1, dg.omega2, b0_func, E)
    b, raise_op = (S1, S2) if recipe.b == "S1" else (S2, S1)
    bdag = raise_op if recipe.pseudo else adjoint(b)

    xi0 = float(np.real(recipe.xi0(p)))
    xi1 = complex(recipe.xi1(p))
    sign = recipe.xi_sign
    xi1_real = xi1.real
    if sign == "su2" and xi1_real < 0:
        xi1_real, sign = -xi1_real, "su11"
    shape = recipe.xi_shape

    def xi2(m, _xi1=xi1_real, _shape=shape, _p=p):
        return _xi1 * _shape(np.asarray(m), _p)

    J0 = b0 + identity(grid) * xi0 if xi0 else b0
    if recipe.pseudo:
        Jminus, Jplus = b, bdag * recipe.jplus_sign
    else:
        xi_op = HFunc(lambda e: _sqrt(xi2(b0_func(e)))).operator(H, spectrum)
        Jminus = xi_op @ b
        Jplus = bdag @ xi_op

    return LadderRealization(
        spec=spec, recipe=recipe, params=dict(vals), scalars=scal, grid=grid,
        spectrum=spectrum, k=k_eff, H=H, Q=Q, P=P, Qt=Qt, Pt=Pt, S1=S1, S2=S2,
        b0=b0, b=b, bdag=bdag, raise_op=raise_op, J0=J0, Jplus=Jplus, Jminus=Jminus,
        omega1=dg.omega1, omega2=dg.omega2, b0_func=b0_func, diag=dg, b0_check=b0chk,
        case=spec.expected_case, condition_number=spectrum.condition, notes=notes,
        xi0=xi0, xi2=xi2, xi_sign=sign,
    )


# ---------------------------------------------------------------------------
# freedom transformations

def shift_b0(real: LadderRealization, c: float) -> LadderRealization:
    """b0 -> b0 + c; closed forms follow so that J0 = b0 + xi0 is unchanged."""
    rec = real.recipe
    new_rec = replace(
        rec,
        b0=lambda p, _f=rec.b0: _f(p) + c,
        eta=None if rec.eta is None else (lambda m, p, _f=rec.eta: _f(m - c, p)),
        xi_shape=lambda m, p, _f=rec.xi_shape: _f(m - c, p),
        xi0=lambda p, _f=rec.xi0: _f(p) - c,
    )
    b0 = real.b0 + identity(real.grid) * c
    return replace(real, recipe=new_rec, b0=b0, b0_func=real.b0_func + c,
                   notes=real.notes + [f"b0 shifted by {c:g}"])


def rescale_s1(real: LadderRealization, r: Callable) -> LadderRealization:
    """S1 -> S1 r(b0) for a positive function r.

    When S1 lowers b0, S1 r(b0) = r(b0 + 1) S1, so the dressing shape becomes
    shape(m) / r(m + 1)^2 and the closed-form eta no longer applies. Pseudo
    families pair S1 with the unrescaled S2, so one power of r is absorbed:
    shape(m) / r(m + 1) when S1 lowers, shape(m) / r(m) when it raises.
    """
    rop = real.b0_function(r)
    s1 = real.S1 @ rop
    rec = real.recipe
    rr = lambda m: np.abs(r(np.asarray(m)))
    if rec.b == "S1":
        if rec.pseudo:
            shape = lambda m, p, _f=rec.xi_shape: _f(m, p) / rr(np.asarray(m) + 1)
        else:
            shape = lambda m, p, _f=rec.xi_shape: _f(m, p) / rr(np.asarray(m) + 1) ** 2
        b = s1
        bdag = real.raise_op if rec.pseudo else adjoint(s1)
        raise_op = real.raise_op
    else:
        if rec.pseudo:
            shape = lambda m, p, _f=rec.xi_shape: _f(m, p) / rr(m)
        else:
            shape = rec.xi_shape
        b, raise_op = real.b, s1
        bdag = s1 if rec.pseudo else real.bdag
    new_rec = replace(rec, eta=None, xi_shape=shape)
    return replace(real, recipe=new_rec, S1=s1, b=b, bdag=bdag, raise_op=raise_op,
                   notes=real.notes + ["S1 rescaled by a function of b0"])
