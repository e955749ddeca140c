"""Ladder-generated spectra against the direct eigensolve."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .algebra import assemble_generators, classify_case, solve_xi
from .errors import AmbiguousGroundState
from .families import LadderRealization
from .operators import Grid, LinearOperator

__all__ = [
    "GroundState",
    "ClimbResult",
    "SpectrumComparison",
    "ground_state_from_annihilator",
    "ladder_climb",
    "generators",
    "compare",
]

AMBIGUITY_GAP = 1e-6
COLLAPSE_NORM = 1e-10


@dataclass
class GroundState:
    psi: np.ndarray
    residual: float              # ||J psi|| / ||psi||
    singular_values: np.ndarray  # two smallest, ascending


def ground_state_from_annihilator(J: LinearOperator, grid: Grid,
                                  basis: np.ndarray | None = None) -> GroundState:
    """Normalized minimizer of ||J psi||.

    Without ``basis`` the full matrix is decomposed; operators realized partly on
    an eigen-subspace have a large spurious null space there, so catalog families
    pass the physical subspace as ``basis`` (columns spanning the candidates).
    """
    if basis is None:
        u = np.eye(grid.n) / np.sqrt(grid.h)
    else:
        q, _ = np.linalg.qr(np.sqrt(grid.h) * np.asarray(basis))
        u = q / np.sqrt(grid.h)
    a = np.sqrt(grid.h) * J.apply(u)
    _, s, vh = sla.svd(a, full_matrices=False)
    order = np.argsort(s)
    s = s[order]
    if s.size > 1 and s[1] - s[0] <= AMBIGUITY_GAP * max(s[-1], 1e-300):
        raise AmbiguousGroundState(
            f"two smallest singular values {s[0]:.3g}, {s[1]:.3g} are within {AMBIGUITY_GAP:g}")
    c = vh[order[0]].conj()
    psi = u @ c
    psi = psi / grid.norm(psi)
    psi = _fix_phase(psi)
    res = float(grid.norm(J.apply(psi)))
    return GroundState(psi, res, s[:2])


def _fix_phase(psi: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(psi)))
    return psi * (abs(psi[i]) / psi[i])


@dataclass
class ClimbResult:
    states: list
    energies: list               # Rayleigh quotients <psi, H psi>/<psi, psi>
    stopped: str | None = None   # reason for an early stop


def ladder_climb(Jp: LinearOperator, psi0: np.ndarray, steps: int,
                 H: LinearOperator | None = None) -> ClimbResult:
    """psi_{n+1} = normalize(J+ psi_n); stops early when ||J+ psi_n|| < 1e-10."""
    g = Jp.grid
    psi = psi0 / g.norm(psi0)
    states, energies = [psi], []
    stopped = None
    for step in range(steps + 1):
        if H is not None:
            energies.append(complex(g.inner(psi, H.apply(psi)) / g.inner(psi, psi)))
        if step == steps:
            break
        nxt = Jp.apply(psi)
        nrm = float(g.norm(nxt))
        if nrm < COLLAPSE_NORM:
            stopped = f"norm collapse after {step} steps (||J psi|| = {nrm:.3g})"
            break
        psi = _fix_phase(nxt / nrm)
        states.append(psi)
    return ClimbResult(states, energies, stopped)


# ---------------------------------------------------------------------------

@dataclass
class SpectrumComparison:
    family: str
    direct: list                 # E_n, ascending
    ladder: list                 # Rayleigh quotients along the climb
    j0: list                     # J0 eigenvalues on the direct eigenvectors
    overlaps: list               # |<psi_direct, psi_ladder>|
    annihilation_residual: float
    j0_offset: float
    j0_step_deviation: float     # max | |J0_{n+1} - J0_n| - 1 |
    tower: list | None = None    # family-specific eigenvalue labels (F: -l)
    stopped: str | None = None
    notes: list = field(default_factory=list)

    def rows(self) -> list[dict]:
        out = []
        for n, e in enumerate(self.direct):
            out.append({
                "n": n,
                "E_direct": e,
                "E_ladder": self.ladder[n] if n < len(self.ladder) else None,
                "J0_eig": self.j0[n],
                "overlap": self.overlaps[n] if n < len(self.overlaps) else None,
                "annihilation_residual": self.annihilation_residual if n == 0 else None,
            })
        return out


def generators(real: LadderRealization):
    """(J0, J+, J-) from the fitted dressing function."""
    cls = None if real.recipe.pseudo else classify_case(real)
    xi = solve_xi(cls, real)
    return assemble_generators(real, xi.xi0, xi.xi2, real.recipe.jplus_sign)


def compare(real: LadderRealization, k: int | None = None, gens=None) -> SpectrumComparison:
    """Ground state from the energy-lowering generator, climb with the other one."""
    k = real.k if k is None else k
    sp = real.spectrum
    g = sp.grid
    J0, Jp, Jm = gens if gens is not None else generators(real)
    lower, climb = (Jp, Jm) if real.recipe.energy_lowering == "Jplus" else (Jm, Jp)
    notes = list(real.notes)
    gs = ground_state_from_annihilator(lower, g, basis=sp.vectors)
    steps = k - 1
    cl = ladder_climb(climb, gs.psi, steps, real.H)
    direct = sp.eigenvalues[:k]
    ladder = [complex(e) for e in cl.energies]
    j0 = np.einsum("ij,ji->i", sp.dual[:k], J0.apply(sp.vectors[:, :k]))
    overlaps = []
    for n, psi in enumerate(cl.states[:k]):
        ref = sp.vectors[:, n]
        overlaps.append(float(abs(g.inner(ref, psi)) / (g.norm(ref) * g.norm(psi))))
    steps_j0 = np.abs(np.diff(j0.real))
    dev = float(np.max(np.abs(steps_j0 - 1.0))) if steps_j0.size else 0.0
    tower = None
    if real.recipe.tower is not None:
        m = real.b0_eigenvalues[:k].real
        tower = [float(t) for t in real.recipe.tower(np.real(direct), m, real.params)]
    return SpectrumComparison(
        family=real.spec.id,
        direct=[_num(e) for e in direct],
        ladder=[_num(e) for e in ladder],
        j0=[_num(e) for e in j0],
        overlaps=overlaps,
        annihilation_residual=gs.residual,
        j0_offset=float(j0[0].real),
        j0_step_deviation=dev,
        tower=tower,
        stopped=cl.stopped,
        notes=notes,
    )


def _num(v):
    v = complex(v)
    return v.real if abs(v.imag) <= 1e-10 * max(1.0, abs(v)) else v
