"""Grid discretization, operator arithmetic and spectral operator functions.

Operators are stored as ``sparse + U @ Wh``: a sparse part (finite-difference and
multiplication operators) plus an optional low-rank part (functions of an
operator reconstructed on a finite eigen-subspace).  Products, sums and adjoints
stay in this form, so commutators of ladder operators are cheap even for
n of a few thousand.  :attr:`LinearOperator.matrix` returns the dense matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from .errors import BranchViolation, DefectiveError, GridError, SingularEvaluation
from .expr import Expr

__all__ = [
    "Grid",
    "LinearOperator",
    "Spectrum",
    "HFunc",
    "identity",
    "mul_operator",
    "derivative_operator",
    "build_first_order",
    "build_hamiltonian",
    "commutator",
    "adjoint",
    "operator_function",
    "solve_eigen",
    "subspace_residual",
    "principal_sqrt",
    "hermiticity_defect",
]

MAX_CONDITION = 1e8
_COMPRESS_RANK = 96


@dataclass(frozen=True)
class Grid:
    """Uniform interior grid on (lo, hi); endpoints carry the Dirichlet condition."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise GridError(f"grid needs lo < hi, got ({self.lo}, {self.hi})")
        if self.n < 16:
            raise GridError(f"grid needs n >= 16, got {self.n}")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n + 1)

    @property
    def points(self) -> np.ndarray:
        return self.lo + self.h * np.arange(1, self.n + 1)

    def norm(self, psi: np.ndarray, axis: int = 0) -> np.ndarray:
        return np.sqrt(self.h) * np.linalg.norm(psi, axis=axis)

    def inner(self, phi: np.ndarray, psi: np.ndarray) -> complex:
        return self.h * np.vdot(phi, psi)


class LinearOperator:
    """Operator on grid functions: ``sparse + u @ wh``.

    ``spectral`` optionally records that the operator equals
    ``basis.vectors @ diag(values) @ basis.dual`` exactly, so further functions of
    it reuse the same eigenbasis.  ``excluded`` lists eigen-indices of that basis
    where a pole was removed.
    """

    __slots__ = ("grid", "sparse", "u", "wh", "spectral", "excluded")

    def __init__(self, grid: Grid, sparse=None, u=None, wh=None, spectral=None,
                 excluded: Sequence[int] = ()):
        self.grid = grid
        self.sparse = None if sparse is None else sps.csr_matrix(sparse, dtype=complex)
        if (u is None) != (wh is None):
            raise ValueError("low-rank factors must be given together")
        if u is not None and u.shape[1] == 0:
            u = wh = None
        self.u = None if u is None else np.asarray(u, dtype=complex)
        self.wh = None if wh is None else np.asarray(wh, dtype=complex)
        self.spectral = spectral
        self.excluded = tuple(sorted(set(excluded)))

    # construction helpers
    @staticmethod
    def zero(grid: Grid) -> "LinearOperator":
        return LinearOperator(grid, sps.csr_matrix((grid.n, grid.n), dtype=complex))

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def rank(self) -> int:
        return 0 if self.u is None else self.u.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=complex)
        if self.sparse is not None:
            out += self.sparse.toarray()
        if self.u is not None:
            out += self.u @ self.wh
        return out

    def apply(self, psi: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi)
        out = np.zeros(psi.shape, dtype=complex)
        if self.sparse is not None:
            out = out + self.sparse @ psi
        if self.u is not None:
            out = out + self.u @ (self.wh @ psi)
        return out

    def _check(self, other: "LinearOperator"):
        if other.grid != self.grid:
            raise GridError("operators live on different grids")

    # arithmetic
    def __add__(self, other) -> "LinearOperator":
        if np.isscalar(other):
            other = identity(self.grid) * other
        self._check(other)
        sp_ = _sp_add(self.sparse, other.sparse)
        u, wh = _lr_cat(self.u, self.wh, other.u, other.wh)
        return LinearOperator(self.grid, sp_, u, wh,
                              excluded=self.excluded + other.excluded)._compressed()

    def __radd__(self, other) -> "LinearOperator":
        return self + other

    def __neg__(self) -> "LinearOperator":
        return self * -1.0

    def __sub__(self, other) -> "LinearOperator":
        return self + (-other if isinstance(other, LinearOperator) else -other)

    def __rsub__(self, other) -> "LinearOperator":
        return (-self) + other

    def __mul__(self, s) -> "LinearOperator":
        if not np.isscalar(s):
            raise TypeError("use @ for operator products")
        spectral = None
        if self.spectral is not None and self.sparse is None:
            spectral = (self.spectral[0], self.spectral[1] * s)
        return LinearOperator(self.grid, None if self.sparse is None else self.sparse * s,
                              None if self.u is None else self.u * s, self.wh,
                              spectral=spectral, excluded=self.excluded)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, LinearOperator):
            return self.apply(other)
        self._check(other)
        s1, s2 = self.sparse, other.sparse
        sp_ = None if s1 is None or s2 is None else s1 @ s2
        us, whs = [], []
        if other.u is not None:
            # (S1 + U1 W1) U2 W2
            left = np.zeros((self.n, other.rank), dtype=complex)
            if s1 is not None:
                left = left + s1 @ other.u
            if self.u is not None:
                left = left + self.u @ (self.wh @ other.u)
            us.append(left)
            whs.append(other.wh)
        if self.u is not None and s2 is not None:
            # U1 W1 S2
            us.append(self.u)
            whs.append(np.asarray((s2.T @ self.wh.T).T))
        u = np.hstack(us) if us else None
        wh = np.vstack(whs) if whs else None
        spectral = None
        if (self.spectral is not None and other.spectral is not None and self.sparse is None
                and other.sparse is None and self.spectral[0] is other.spectral[0]):
            spectral = (self.spectral[0], self.spectral[1] * other.spectral[1])
            u = self.spectral[0].vectors * spectral[1]
            wh = self.spectral[0].dual
        out = LinearOperator(self.grid, sp_, u, wh, spectral=spectral,
                             excluded=self.excluded + other.excluded)
        return out._compressed()

    def _compressed(self) -> "LinearOperator":
        if self.rank <= _COMPRESS_RANK or self.spectral is not None:
            return self
        qu, ru = np.linalg.qr(self.u)
        qw, rw = np.linalg.qr(self.wh.conj().T)
        core = ru @ rw.conj().T
        uu, s, vh = np.linalg.svd(core)
        keep = s > 1e-15 * max(s[0], 1e-300)
        u = (qu @ uu[:, keep]) * s[keep]
        wh = vh[keep] @ qw.conj().T
        return LinearOperator(self.grid, self.sparse, u, wh, excluded=self.excluded)

    def adjoint(self) -> "LinearOperator":
        sp_ = None if self.sparse is None else self.sparse.conj().T.tocsr()
        u = None if self.u is None else self.wh.conj().T
        wh = None if self.u is None else self.u.conj().T
        return LinearOperator(self.grid, sp_, u, wh, excluded=self.excluded)

    def __repr__(self) -> str:
        nnz = 0 if self.sparse is None else self.sparse.nnz
        return f"LinearOperator(n={self.n}, nnz={nnz}, rank={self.rank})"


def _sp_add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _lr_cat(u1, w1, u2, w2):
    if u1 is None:
        return u2, w2
    if u2 is None:
        return u1, w1
    return np.hstack([u1, u2]), np.vstack([w1, w2])


def identity(grid: Grid) -> LinearOperator:
    return LinearOperator(grid, sps.identity(grid.n, dtype=complex, format="csr"))


def commutator(a: LinearOperator, b: LinearOperator) -> LinearOperator:
    """[A, B] = AB - BA."""
    if a.grid != b.grid:
        raise GridError("operators live on different grids")
    if a is b:
        return LinearOperator.zero(a.grid)
    if id(a) > id(b):               # one evaluation order, so [B,A] = -[A,B] bit for bit
        return -(b @ a - a @ b)
    return a @ b - b @ a


def adjoint(a: LinearOperator) -> LinearOperator:
    """Conjugate transpose (the h-weighted inner product is uniform)."""
    return a.adjoint()


def hermiticity_defect(a: LinearOperator) -> float:
    """max|A - A^H| / max|A|."""
    if a.u is None and a.sparse is not None:
        d = a.sparse - a.sparse.conj().T
        top = abs(a.sparse).max()
        return float(abs(d).max() / top) if top else 0.0
    m = a.matrix
    top = np.abs(m).max()
    return float(np.abs(m - m.conj().T).max() / top) if top else 0.0


# ---------------------------------------------------------------------------
# discretization

def mul_operator(e: Expr, params, grid: Grid) -> LinearOperator:
    """diag(e(x_i))."""
    vals = dict(params or {})
    x = grid.points
    bad = e.singular_points(x, vals)
    if bad.any():
        raise SingularEvaluation(f"expression singular at x={x[bad][0]:.6g}")
    v = e.evaluate(x, vals)
    if not np.all(np.isfinite(v)):
        raise SingularEvaluation("expression not finite on the grid")
    return LinearOperator(grid, sps.diags(v).tocsr())


_D1 = np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12])
_D2 = np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])
# ghost value f(x_{-2}) extrapolated from interior samples
_GHOST = (-10.0, 10.0, -5.0, 1.0)  # quartic through the wall: f(-h) = -10 f1 + 10 f2 - 5 f3 + f4


def derivative_operator(order: int, grid: Grid, boundary: str = "dirichlet") -> LinearOperator:
    """Fourth-order central differences with Dirichlet walls at lo and hi.

    ``boundary="dirichlet"`` drops the second ghost point in D1 (keeps D1
    antisymmetric) and odd-reflects it in D2 (keeps D2 symmetric).
    ``boundary="extrapolated"`` fills the second ghost by quartic extrapolation
    through the wall, which keeps fourth-order accuracy in the first rows at the
    price of symmetry; used for the pseudo-Hamiltonians whose bound states do not
    decay at the wall.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if boundary not in ("dirichlet", "extrapolated"):
        raise ValueError(f"unknown boundary {boundary!r}")
    n, h = grid.n, grid.h
    st = _D1 if order == 1 else _D2
    m = sps.diags(list(st), [-2, -1, 0, 1, 2], shape=(n, n), format="lil", dtype=float)
    ghost_w = st[0]  # weight of f_{-2} in row 0; mirror row uses st[4]
    if boundary == "dirichlet":
        if order == 2:
            m[0, 0] += -ghost_w
            m[n - 1, n - 1] += -st[4]
    else:
        for j, g in enumerate(_GHOST):
            m[0, j] += ghost_w * g
            m[n - 1, n - 1 - j] += st[4] * g
    return LinearOperator(grid, m.tocsr() / h ** order)


def build_first_order(e_y: Expr, e_z: Expr, params, grid: Grid,
                      boundary: str = "dirichlet") -> LinearOperator:
    """Y(x) d/dx + Z(x)."""
    return (mul_operator(e_y, params, grid) @ derivative_operator(1, grid, boundary)
            + mul_operator(e_z, params, grid))


def build_hamiltonian(e_x: Expr, e_v: Expr, params, grid: Grid,
                      boundary: str = "dirichlet") -> LinearOperator:
    """X(x) d^2/dx^2 + V(x)."""
    return (mul_operator(e_x, params, grid) @ derivative_operator(2, grid, boundary)
            + mul_operator(e_v, params, grid))


# ---------------------------------------------------------------------------
# eigen-decomposition

@dataclass
class Spectrum:
    """Lowest eigenpairs; ``vectors`` are h-normalized columns, ``dual @ vectors = I``."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    dual: np.ndarray
    hermitian: bool
    grid: Grid
    condition: float = 1.0
    conditions: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def truncated(self, k: int) -> "Spectrum":
        return Spectrum(self.eigenvalues[:k], self.vectors[:, :k], self.dual[:k],
                        self.hermitian, self.grid,
                        float(np.max(self.conditions[:k], initial=1.0)),
                        self.conditions[:k])

    def select(self, idx: Sequence[int]) -> "Spectrum":
        idx = np.asarray(idx, dtype=int)
        return Spectrum(self.eigenvalues[idx], self.vectors[:, idx], self.dual[idx],
                        self.hermitian, self.grid,
                        float(np.max(self.conditions[idx], initial=1.0)),
                        self.conditions[idx])


def _fix_phase(v: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(v) > 0.5 * np.abs(v).max(axis=0), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(ph) / ph)


def _banded(a: sps.csr_matrix):
    coo = a.tocoo()
    bw = int(np.max(np.abs(coo.row - coo.col), initial=0))
    ab = np.zeros((bw + 1, a.shape[0]), dtype=complex)
    for d in range(bw + 1):
        ab[bw - d, d:] = a.diagonal(d)
    return ab


def solve_eigen(a: LinearOperator, k: int, hermitian: bool | None = None) -> Spectrum:
    """The k eigenpairs with lowest real part."""
    n, h = a.n, a.grid.h
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    if hermitian is None:
        hermitian = hermiticity_defect(a) <= 1e-12
    try:
        if hermitian:
            if a.u is None and a.sparse is not None:
                m = (a.sparse + a.sparse.conj().T) * 0.5
                ab = _banded(m)
                if np.abs(ab.imag).max() == 0:
                    ab = ab.real
                w, v = sla.eig_banded(ab, lower=False, select="i", select_range=(0, k - 1))
            else:
                m = a.matrix
                w, v = sla.eigh(0.5 * (m + m.conj().T), subset_by_index=[0, k - 1])
            v = _fix_phase(v.astype(complex)) / np.sqrt(h)
            dual = h * v.conj().T
            cond = np.ones(k)
            return Spectrum(np.asarray(w, dtype=float), v, dual, True, a.grid, 1.0, cond)
        m = a.matrix
        if np.abs(m.imag).max() == 0:
            m = m.real
        w, vl, vr = sla.eig(m, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc
    order = np.lexsort((w.imag, w.real))[:k]
    w, vl, vr = w[order], vl[:, order], vr[:, order]
    vr = _fix_phase(vr.astype(complex))
    vr = vr / (np.sqrt(h) * np.linalg.norm(vr, axis=0))
    overlap = np.sum(vl.conj() * vr, axis=0)
    cond = np.linalg.norm(vl, axis=0) * np.linalg.norm(vr, axis=0) / np.abs(overlap)
    dual = (vl.conj() / overlap).T
    return Spectrum(w, vr, dual, False, a.grid, float(cond.max()), cond)


# ---------------------------------------------------------------------------
# operator functions

def principal_sqrt(z, tol: float = 1e-9):
    """Principal square root refusing arguments with negative real part."""
    z = np.asarray(z, dtype=complex)
    scale = np.maximum(1.0, np.abs(z))
    if np.any(z.real < -tol * scale):
        bad = z[z.real < -tol * scale][0]
        raise BranchViolation(f"square root of {bad.real:.6g} on the bound spectrum")
    return np.sqrt(np.where(np.abs(z.real) <= tol * scale, np.abs(z.real) + 1j * z.imag, z))


def operator_function(a: LinearOperator, f: Callable, subspace_dim: int | None = None,
                      spectrum: Spectrum | None = None, poles: str = "raise",
                      pole_tol: float = 1e3) -> LinearOperator:
    """f(A) = V f(Lambda) W^H on the lowest eigen-subspace, zero on its complement.

    If ``a`` was itself produced spectrally, its eigenbasis is reused.  With
    ``poles="exclude"`` eigenvalues where f is not finite (or exceeds ``pole_tol``
    times the median magnitude) are zeroed and recorded in ``excluded``.
    """
    if a.spectral is not None and a.sparse is None:
        basis, lam = a.spectral
    else:
        if spectrum is None:
            if subspace_dim is None:
                raise ValueError("subspace_dim or spectrum required")
            spectrum = solve_eigen(a, subspace_dim)
        basis, lam = spectrum, spectrum.eigenvalues
    if basis.condition > MAX_CONDITION:
        raise DefectiveError(f"eigenvector condition {basis.condition:.3g} exceeds {MAX_CONDITION:g}")
    with np.errstate(divide="ignore", invalid="ignore"):
        fv = np.asarray(f(np.asarray(lam)), dtype=complex)
    fv = np.broadcast_to(fv, np.shape(lam)).copy()
    bad = ~np.isfinite(fv)
    if np.any(~bad):
        med = np.median(np.abs(fv[~bad])) or 1.0
        bad |= np.abs(np.where(bad, 0, fv)) > pole_tol * max(med, 1.0)
    excluded = tuple(int(i) for i in np.flatnonzero(bad))
    if excluded:
        if poles != "exclude":
            raise BranchViolation(f"function singular at eigenvalue {lam[excluded[0]]:.6g}")
        fv[bad] = 0.0
    return LinearOperator(a.grid, None, basis.vectors * fv, basis.dual,
                          spectral=(basis, fv), excluded=excluded + a.excluded)


class HFunc:
    """Scalar function of H, optionally a polynomial (built exactly as a sparse operator).

    Arithmetic combines functions pointwise; the functions of H commute, so the
    order inside a product is irrelevant here.
    """

    def __init__(self, fn: Callable, poly: Sequence[complex] | None = None, label: str = ""):
        self.fn = fn
        self.poly = None if poly is None else tuple(complex(c) for c in poly)
        self.label = label

    @staticmethod
    def const(c) -> "HFunc":
        return HFunc(lambda e, c=c: np.full(np.shape(e), c, dtype=complex), (c,), repr(c))

    @staticmethod
    def linear(c0, c1) -> "HFunc":
        return HFunc(lambda e: c0 + c1 * np.asarray(e, dtype=complex), (c0, c1))

    def __call__(self, e):
        if self.poly is not None:
            e = np.asarray(e, dtype=complex)
            return sum(c * e ** j for j, c in enumerate(self.poly)) + 0 * e
        return self.fn(e)

    def _lift(self, other) -> "HFunc":
        return other if isinstance(other, HFunc) else HFunc.const(other)

    def __add__(self, other) -> "HFunc":
        o = self._lift(other)
        poly = None
        if self.poly is not None and o.poly is not None:
            m = max(len(self.poly), len(o.poly))
            p1 = self.poly + (0,) * (m - len(self.poly))
            p2 = o.poly + (0,) * (m - len(o.poly))
            poly = tuple(x + y for x, y in zip(p1, p2))
        return HFunc(lambda e: self(e) + o(e), poly)

    __radd__ = __add__

    def __neg__(self) -> "HFunc":
        return self * -1

    def __sub__(self, other) -> "HFunc":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "HFunc":
        return self._lift(other) - self

    def __mul__(self, other) -> "HFunc":
        o = self._lift(other)
        poly = None
        if self.poly is not None and o.poly is not None:
            poly = tuple(np.polynomial.polynomial.polymul(self.poly, o.poly))
        return HFunc(lambda e: self(e) * o(e), poly)

    __rmul__ = __mul__

    def compose_shift(self, shift: Callable) -> "HFunc":
        """e -> self(shift(e))."""
        return HFunc(lambda e: self(shift(e)))

    def operator(self, h: LinearOperator, spectrum: Spectrum, poles: str = "raise",
                 exact: bool = True) -> LinearOperator:
        """Sparse polynomial when possible (``exact``), else realized on ``spectrum``."""
        if self.poly is not None and len(self.poly) == 1:
            return identity(h.grid) * self.poly[0]
        if exact and self.poly is not None and len(self.poly) <= 3:
            out = identity(h.grid) * self.poly[0]
            power = identity(h.grid)
            for c in self.poly[1:]:
                power = power @ h
                if c != 0:
                    out = out + power * c
            return out
        return operator_function(h, self.fn, spectrum=spectrum, poles=poles)


# ---------------------------------------------------------------------------
# residual metric

def subspace_residual(a: LinearOperator, spectrum: Spectrum, k: int | None = None,
                      scale=0.0, exclude: Sequence[int] = ()) -> float:
    """max_j ||A psi_j||_h / (1 + scale_j) over the k lowest eigenvectors.

    ``scale`` is a scalar or per-state array (typically the largest norm of the
    terms entering the identity being tested).
    """
    k = spectrum.k if k is None else k
    idx = [j for j in range(k) if j not in set(exclude)]
    if not idx:
        return 0.0
    psi = spectrum.vectors[:, idx]
    r = spectrum.grid.norm(a.apply(psi), axis=0)
    sc = np.broadcast_to(np.asarray(scale, dtype=float), (k,))[idx]
    return float(np.max(r / (1.0 + sc)))
