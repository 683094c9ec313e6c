"""Exterior-value forward solver for the perturbed operator.

Solves  (full-space part + weighted regional part + zeroth order) u = F in the
interval, u = f outside, by lifting the exterior datum (zero extension is
exact at dof level) and factoring the interior block.  A singular-value guard
implements the zero-eigenvalue assumption before any solve.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import NonlocalAssembly, assemble_weighted_forms, gagliardo_raw_matrix
from .errors import GuardError
from .mesh import CoefficientField, ExteriorDatum
from .util import make_rng

GUARD_RELATIVE_THRESHOLD = 1e-10


@dataclass(frozen=True)
class SpectrumReport:
    smallest_singular_value: float
    norm: float
    shift_used: float
    passed: bool


@dataclass
class OperatorMatrices:
    """Global system matrix and its interior block for one coefficient pair."""

    B_full: np.ndarray      # K_full + Kb + Mq on box node indexing
    interior: np.ndarray    # indices of the interior dof
    A: np.ndarray           # interior block
    report: SpectrumReport | None = None


@dataclass
class Solution:
    dofs: np.ndarray
    residual: float
    cond_estimate: float


@dataclass
class ForwardProblem:
    assembly: NonlocalAssembly
    b: CoefficientField
    q: CoefficientField
    f: ExteriorDatum | None = None
    F_dofs: np.ndarray | None = None  # right-hand side interpolant on the interval span

    def matrices(self) -> OperatorMatrices:
        asm = self.assembly
        Kb, Mq, _ = assemble_weighted_forms(asm, self.b, self.q)
        B = asm.K_full + asm.embed_omega(Kb + Mq)
        interior = asm.interior_indices()
        A = B[np.ix_(interior, interior)]
        return OperatorMatrices(B_full=B, interior=interior, A=A)


def check_eigenvalue_condition(problem: ForwardProblem,
                               mats: OperatorMatrices | None = None) -> SpectrumReport:
    """Guard for the zero-eigenvalue assumption: sigma_min(A) > 1e-10 * ||A||."""
    if mats is None:
        mats = problem.matrices()
    sv = scipy.linalg.svdvals(mats.A)
    norm = float(sv[0])
    smallest = float(sv[-1])
    report = SpectrumReport(smallest_singular_value=smallest, norm=norm, shift_used=0.0,
                            passed=bool(smallest > GUARD_RELATIVE_THRESHOLD * norm))
    mats.report = report
    return report


def solve_forward(problem: ForwardProblem, mats: OperatorMatrices | None = None,
                  skip_guard: bool = False) -> Solution:
    """Solve the exterior-value problem; exterior dofs of the output equal the datum's.

    The solved interior system is A v = <F, phi> - (K_full f)|interior; the
    returned dof vector is v + f.  Raises GuardError when the spectral guard
    has not passed.
    """
    asm = problem.assembly
    if mats is None:
        mats = problem.matrices()
    if not skip_guard:
        report = mats.report or check_eigenvalue_condition(problem, mats)
        if not report.passed:
            raise GuardError(
                f"interior operator block is numerically singular "
                f"(sigma_min={report.smallest_singular_value:.3e}, norm={report.norm:.3e})")
    n = asm.mesh.n_nodes
    f_dofs = problem.f.dofs if problem.f is not None else np.zeros(n)
    rhs = np.zeros(n)
    if problem.F_dofs is not None:
        sl = asm.omega_slice
        rhs[sl] = asm.M_omega @ np.asarray(problem.F_dofs, dtype=float)
    rhs_int = rhs[mats.interior] - asm.K_full[mats.interior, :] @ f_dofs

    lu, piv = scipy.linalg.lu_factor(mats.A)
    v = scipy.linalg.lu_solve((lu, piv), rhs_int)
    scale = np.linalg.norm(rhs_int)
    residual = float(np.linalg.norm(mats.A @ v - rhs_int) / scale) if scale > 0 else 0.0

    dofs = f_dofs.copy()
    dofs[mats.interior] += v
    sv_report = mats.report
    cond = (sv_report.norm / sv_report.smallest_singular_value) if sv_report else float("nan")
    return Solution(dofs=dofs, residual=residual, cond_estimate=float(cond))


def discrete_ht_norm(assembly: NonlocalAssembly, dofs: np.ndarray) -> float:
    """L2 norm over the box plus the full Gagliardo seminorm (graph norm of order t)."""
    dofs = np.asarray(dofs, dtype=float)
    l2 = dofs @ assembly.M_box @ dofs
    semi = dofs @ (gagliardo_raw_matrix(assembly.mesh.n_elements, assembly.mesh.h,
                                        assembly.t)) @ dofs
    return float(np.sqrt(max(0.0, l2) ) + np.sqrt(max(0.0, semi)))


def stability_probe(problem: ForwardProblem, n_samples: int = 50, seed: int = 0) -> float:
    """Max ratio ||u|| / (||F|| + ||f||) over random data pairs (discrete norms)."""
    asm = problem.assembly
    mesh = asm.mesh
    rng = make_rng(seed)
    mats = problem.matrices()
    check_eigenvalue_condition(problem, mats)
    ext_idx = np.flatnonzero(mesh.exterior_mask)
    sl = asm.omega_slice
    n_omega = sl.stop - sl.start
    worst = 0.0
    for _ in range(n_samples):
        f_dofs = np.zeros(mesh.n_nodes)
        f_dofs[ext_idx] = rng.standard_normal(len(ext_idx))
        f = ExteriorDatum(mesh=mesh, dofs=f_dofs)
        F = rng.standard_normal(n_omega)
        sol = solve_forward(ForwardProblem(asm, problem.b, problem.q, f, F), mats)
        num = discrete_ht_norm(asm, sol.dofs)
        den = float(np.sqrt(F @ asm.M_omega @ F)) + discrete_ht_norm(asm, f_dofs)
        if den > 0:
            worst = max(worst, num / den)
    return worst


def exterior_source_vanishing_on(problem: ForwardProblem, zero_nodes: np.ndarray,
                                 candidate_nodes: np.ndarray) -> ExteriorDatum:
    """Construct a single exterior datum whose discrete solution vanishes on given dofs.

    Solves one forward problem per candidate exterior node and combines them
    in the null space of the zero-dof restriction (needs more candidates than
    constrained dofs).  Among all null combinations the one maximizing the
    solution elsewhere in the interval is returned, so the vanishing set is
    genuinely exceptional rather than the whole interval.
    """
    asm = problem.assembly
    mesh = asm.mesh
    mats = problem.matrices()
    check_eigenvalue_condition(problem, mats)
    other = np.setdiff1d(np.flatnonzero(mesh.interior_mask), zero_nodes)
    cols_zero, cols_other = [], []
    for j in candidate_nodes:
        f_dofs = np.zeros(mesh.n_nodes)
        f_dofs[j] = 1.0
        f = ExteriorDatum(mesh=mesh, dofs=f_dofs)
        sol = solve_forward(ForwardProblem(asm, problem.b, problem.q, f), mats)
        cols_zero.append(sol.dofs[zero_nodes])
        cols_other.append(sol.dofs[other])
    S = np.column_stack(cols_zero)
    if S.shape[1] <= S.shape[0]:
        raise GuardError("need more candidate sources than constrained dofs")
    _, _, vt = np.linalg.svd(S)
    null_basis = vt[len(zero_nodes):].T
    grow = np.column_stack(cols_other) @ null_basis
    _, _, wt = np.linalg.svd(grow, full_matrices=False)
    coef = null_basis @ wt[0]
    coef = coef / np.max(np.abs(coef))
    f_dofs = np.zeros(mesh.n_nodes)
    f_dofs[np.asarray(candidate_nodes)] = coef
    return ExteriorDatum(mesh=mesh, dofs=f_dofs, label="null-combination")
