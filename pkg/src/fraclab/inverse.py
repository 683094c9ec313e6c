"""Coefficient recovery from exterior measurements and the density demonstrations.

Recovery is regularized output least squares on the piecewise-constant cell
values of (b, q): Gauss-Newton with a forward-difference Jacobian over the
cells, backtracking line search, and the spectral guard enforced at every
iterate.  Synthetic data are generated by the same forward pipeline on the
same mesh (deliberate inverse crime, stated as such); the single-measurement
mode additionally reports which cells are unrecoverable because the solution
or its regional half-image vanishes there.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import NonlocalAssembly, weighted_mass_matrix
from .dnmap import DnDatum, NeumannEvaluator, ObservationSet, nonlocal_normal_derivative
from .errors import DivergenceError, DomainError, GuardError
from .forward import ForwardProblem, Solution, check_eigenvalue_condition, solve_forward
from .mesh import CoefficientField, ExteriorDatum
from .regional import RungeReport, _nested_fit, _nested_order
from .util import make_rng, parallel_map

FD_STEP = 1e-6
SUPPORT_THRESHOLD = 1e-8


@dataclass(frozen=True)
class MeasurementSet:
    sources: tuple[ExteriorDatum, ...]
    data: tuple[DnDatum, ...]

    def __post_init__(self):
        if len(self.sources) != len(self.data):
            raise DomainError("one datum per source required")
        for f, d in zip(self.sources, self.data):
            if d.source_label != f.label:
                raise DomainError(f"datum {d.source_label} does not match source {f.label}")

    @property
    def obs(self) -> ObservationSet:
        return self.data[0].obs


def synthesize_measurements(assembly: NonlocalAssembly, b: CoefficientField,
                            q: CoefficientField, sources, obs: ObservationSet) -> MeasurementSet:
    """Noiseless data from the same discretization (inverse-crime synthetic)."""
    sols = _solve_all(assembly, b, q, sources)
    data = tuple(nonlocal_normal_derivative(assembly, s.dofs, obs, label=f.label)
                 for s, f in zip(sols, sources))
    return MeasurementSet(sources=tuple(sources), data=data)


def _solve_all(assembly: NonlocalAssembly, b: CoefficientField, q: CoefficientField,
               sources) -> list[Solution]:
    prob = ForwardProblem(assembly, b, q)
    mats = prob.matrices()
    report = check_eigenvalue_condition(prob, mats)
    if not report.passed:
        raise GuardError("spectral guard failed for the requested coefficients")
    def solve_one(f):
        return solve_forward(ForwardProblem(assembly, b, q, f), mats)
    return parallel_map(solve_one, sources)


# ---------------------------------------------------------------------------
# Integral identity residual
# ---------------------------------------------------------------------------

def identity_residual(assembly: NonlocalAssembly, u_dofs: np.ndarray,
                      db: CoefficientField, dq: CoefficientField,
                      test_dofs: list[np.ndarray]) -> float:
    """Max normalized residual of the coefficient-difference identity.

    For each interior-supported test function phi the residual is
    |int db (Ru)(Rphi) + int dq u phi| with R the regional half-operator,
    normalized by the corresponding product norms of u and phi.
    """
    R = assembly.R_half
    sl = assembly.omega_slice
    w = assembly.rule.weights
    bw = np.asarray(db(assembly.rule.points), dtype=float)
    u_om = np.asarray(u_dofs, dtype=float)[sl]
    Ru = R @ u_om
    Mdq = weighted_mass_matrix(assembly.mesh.nodes[sl], dq)
    u_l2 = float(np.sqrt(u_om @ assembly.M_omega @ u_om))
    Ru_l2 = float(np.sqrt(np.sum(w * Ru ** 2)))
    worst = 0.0
    for phi in test_dofs:
        phi = np.asarray(phi, dtype=float)
        Rphi = R @ phi
        term = float(np.sum(w * bw * Ru * Rphi) + phi @ Mdq @ u_om)
        phi_l2 = float(np.sqrt(phi @ assembly.M_omega @ phi))
        Rphi_l2 = float(np.sqrt(np.sum(w * Rphi ** 2)))
        scale = Ru_l2 * Rphi_l2 + u_l2 * phi_l2
        if scale > 0:
            worst = max(worst, abs(term) / scale)
    return worst


def default_test_set(assembly: NonlocalAssembly, n_random: int = 8, seed: int = 0):
    """Interior hats on a stride plus seeded random interior-supported functions."""
    sl = assembly.omega_slice
    n = sl.stop - sl.start
    rng = make_rng(seed)
    out = []
    for j in range(2, n - 2, max(1, n // 8)):
        phi = np.zeros(n)
        phi[j] = 1.0
        out.append(phi)
    for _ in range(n_random):
        phi = np.zeros(n)
        phi[1:-1] = rng.standard_normal(n - 2)
        out.append(phi)
    return out


# ---------------------------------------------------------------------------
# Gauss-Newton recovery
# ---------------------------------------------------------------------------

@dataclass
class RecoveryResult:
    b_hat: CoefficientField
    q_hat: CoefficientField
    misfit_history: list[float]
    gradient_norms: list[float]
    lambda_tik: float
    identity_residual: float | None = None
    b_unrecoverable: np.ndarray | None = None
    q_unrecoverable: np.ndarray | None = None
    covers_interval: bool | None = None
    log_lines: list[str] = field(default_factory=list)
    converged: bool = False


class _Objective:
    """Stacked weighted residual of the measurement operator at given cell values."""

    def __init__(self, assembly: NonlocalAssembly, meas: MeasurementSet,
                 b_mask: CoefficientField, q_mask: CoefficientField):
        self.assembly = assembly
        self.meas = meas
        self.b_mask = b_mask
        self.q_mask = q_mask
        self.nb = len(b_mask.values)
        self.sqw = np.sqrt(meas.obs.weights)
        self.data = np.concatenate([d.values * self.sqw for d in meas.data])
        self.neumann = NeumannEvaluator(assembly, meas.obs)

    def split(self, theta: np.ndarray):
        return (self.b_mask.with_values(theta[:self.nb]),
                self.q_mask.with_values(theta[self.nb:]))

    def residual(self, theta: np.ndarray) -> np.ndarray:
        b, q = self.split(theta)
        sols = _solve_all(self.assembly, b, q, self.meas.sources)
        pred = np.concatenate([self.neumann(s.dofs).values * self.sqw for s in sols])
        return pred - self.data

    def jacobian(self, theta: np.ndarray, r0: np.ndarray) -> np.ndarray:
        def column(j):
            step = FD_STEP * max(1.0, abs(theta[j]))
            tp = theta.copy()
            tp[j] += step
            return (self.residual(tp) - r0) / step
        cols = parallel_map(column, range(len(theta)))
        return np.column_stack(cols)


def _objective_value(r: np.ndarray, theta: np.ndarray, lam: float) -> float:
    return 0.5 * float(r @ r) + lam * float(theta @ theta)


def gauss_newton_recover(assembly: NonlocalAssembly, meas: MeasurementSet,
                         b_mask: CoefficientField, q_mask: CoefficientField,
                         lambda_tik: float = 0.0, max_iter: int = 30,
                         gtol: float = 1e-9, theta0: np.ndarray | None = None) -> RecoveryResult:
    """Gauss-Newton with forward-difference Jacobian over the coefficient cells.

    The spectral guard is re-checked at every trial point (a failing trial
    halves the step); the iteration stops at gradient norm < gtol or max_iter
    and reports the full misfit history.
    """
    obj = _Objective(assembly, meas, b_mask, q_mask)
    n_par = obj.nb + len(q_mask.values)
    theta = np.zeros(n_par) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    log: list[str] = []
    misfits: list[float] = []
    gnorms: list[float] = []
    r = obj.residual(theta)
    J_val = _objective_value(r, theta, lambda_tik)
    misfits.append(J_val)
    bad_steps = 0
    converged = False
    for it in range(max_iter):
        Jac = obj.jacobian(theta, r)
        grad = Jac.T @ r + 2.0 * lambda_tik * theta
        gnorm = float(np.linalg.norm(grad))
        gnorms.append(gnorm)
        log.append(f"iter {it}: misfit {J_val:.6e} grad {gnorm:.3e}")
        if gnorm < gtol:
            converged = True
            break
        lhs = np.vstack([Jac, np.sqrt(2.0 * lambda_tik) * np.eye(n_par)]) \
            if lambda_tik > 0 else Jac
        rhs = np.concatenate([-r, -np.sqrt(2.0 * lambda_tik) * theta]) \
            if lambda_tik > 0 else -r
        delta, *_ = np.linalg.lstsq(lhs, rhs, rcond=1e-10)
        alpha = 1.0
        accepted = None
        for _ in range(20):
            trial = theta + alpha * delta
            try:
                r_trial = obj.residual(trial)
            except GuardError:
                alpha *= 0.5
                continue
            J_trial = _objective_value(r_trial, trial, lambda_tik)
            if J_trial < J_val:
                accepted = (trial, r_trial, J_trial)
                break
            alpha *= 0.5
        if accepted is None:
            # accept the smallest guarded step so stagnation is observable
            trial = theta + alpha * delta
            try:
                r_trial = obj.residual(trial)
            except GuardError as exc:
                raise GuardError("no step passes the spectral guard") from exc
            accepted = (trial, r_trial, _objective_value(r_trial, trial, lambda_tik))
        theta, r, J_new = accepted
        if J_new > J_val:
            bad_steps += 1
            if bad_steps >= 5:
                raise DivergenceError("misfit increased on 5 consecutive accepted steps")
        else:
            bad_steps = 0
        J_val = J_new
        misfits.append(J_val)
    b_hat, q_hat = obj.split(theta)
    return RecoveryResult(b_hat=b_hat, q_hat=q_hat, misfit_history=misfits,
                          gradient_norms=gnorms, lambda_tik=lambda_tik,
                          log_lines=log, converged=converged)


def recover_all_measurements(assembly: NonlocalAssembly, meas: MeasurementSet,
                             b_mask: CoefficientField, q_mask: CoefficientField,
                             lambda_tik: float = 0.0, max_iter: int = 30,
                             gtol: float = 1e-9) -> RecoveryResult:
    return gauss_newton_recover(assembly, meas, b_mask, q_mask, lambda_tik, max_iter,
                                gtol=gtol)


def recover_single_measurement(assembly: NonlocalAssembly, f: ExteriorDatum,
                               datum: DnDatum, b_mask: CoefficientField,
                               q_mask: CoefficientField, lambda_tik: float = 0.0,
                               max_iter: int = 30,
                               b_true: CoefficientField | None = None,
                               q_true: CoefficientField | None = None,
                               theta0: np.ndarray | None = None,
                               gtol: float = 1e-9) -> RecoveryResult:
    """Single-datum recovery plus the attainability diagnosis.

    After the optimization, cells where the solution (for q) or its regional
    half-image (for b) stays below the support threshold are flagged
    unrecoverable; with the true coefficients supplied, the identity residual
    ||(b_hat-b*) R u|| + ||(q_hat-q*) u|| is evaluated on the recoverable part.
    """
    meas = MeasurementSet(sources=(f,), data=(datum,))
    result = gauss_newton_recover(assembly, meas, b_mask, q_mask, lambda_tik, max_iter,
                                  gtol=gtol, theta0=theta0)
    sol = _solve_all(assembly, result.b_hat, result.q_hat, (f,))[0]
    sl = assembly.omega_slice
    u_om = sol.dofs[sl]
    Ru = assembly.R_half @ u_om
    pts = assembly.rule.points
    u_at = np.abs(np.interp(pts, assembly.mesh.nodes[sl], u_om))
    tau_u = SUPPORT_THRESHOLD * np.max(u_at)
    tau_r = SUPPORT_THRESHOLD * np.max(np.abs(Ru))

    def cell_flags(mask: CoefficientField, vals: np.ndarray, tau: float) -> np.ndarray:
        flags = np.zeros(len(mask.values), dtype=bool)
        for c in range(len(mask.values)):
            inside = (pts >= mask.edges[c]) & (pts < mask.edges[c + 1])
            flags[c] = bool(np.all(vals[inside] < tau)) if np.any(inside) else True
        return flags

    result.q_unrecoverable = cell_flags(q_mask, u_at, tau_u)
    result.b_unrecoverable = cell_flags(b_mask, np.abs(Ru), tau_r)
    covered = np.zeros(len(pts), dtype=bool)
    for c in range(len(q_mask.values)):
        if result.q_unrecoverable[c]:
            covered |= (pts >= q_mask.edges[c]) & (pts < q_mask.edges[c + 1])
    covered_b = np.zeros(len(pts), dtype=bool)
    for c in range(len(b_mask.values)):
        if result.b_unrecoverable[c]:
            covered_b |= (pts >= b_mask.edges[c]) & (pts < b_mask.edges[c + 1])
    result.covers_interval = bool(np.all(covered | covered_b))

    if b_true is not None and q_true is not None:
        w = assembly.rule.weights
        db = np.asarray(result.b_hat(pts)) - np.asarray(b_true(pts))
        dq = np.asarray(result.q_hat(pts)) - np.asarray(q_true(pts))
        u_signed = np.interp(pts, assembly.mesh.nodes[sl], u_om)
        res = (np.sqrt(np.sum(w * (db * Ru) ** 2)) +
               np.sqrt(np.sum(w * (dq * u_signed) ** 2)))
        result.identity_residual = float(res)
    return result


# ---------------------------------------------------------------------------
# Density demonstrations driven by exterior sources
# ---------------------------------------------------------------------------

def _source_columns(assembly: NonlocalAssembly, b: CoefficientField, q: CoefficientField,
                    window: tuple[float, float], max_size: int):
    mesh = assembly.mesh
    nodes = np.flatnonzero(mesh.exterior_mask &
                           (mesh.nodes >= window[0]) & (mesh.nodes <= window[1]))
    if len(nodes) == 0:
        raise DomainError("no admissible exterior nodes inside the source window")
    order = _nested_order(mesh.nodes[nodes])
    chosen = nodes[order][:max_size]
    sources = []
    for j in chosen:
        dofs = np.zeros(mesh.n_nodes)
        dofs[j] = 1.0
        sources.append(ExteriorDatum(mesh=mesh, dofs=dofs, label=f"hat@{mesh.nodes[j]:g}"))
    sols = _solve_all(assembly, b, q, sources)
    return sources, sols


def runge_sq_demo(assembly: NonlocalAssembly, b: CoefficientField, q: CoefficientField,
                  sub, target_fn, window: tuple[float, float],
                  basis_sizes=(10, 20, 40)) -> RungeReport:
    """Approximate an L2 target on a subdomain by regional half-images of solutions."""
    pts = assembly.rule.points
    wts = assembly.rule.weights
    mask = sub.contains(pts)
    _, sols = _source_columns(assembly, b, q, window, max(basis_sizes))
    sl = assembly.omega_slice
    cols = [(assembly.R_half @ s.dofs[sl])[mask] for s in sols]
    G = np.column_stack(cols) if cols else np.zeros((int(mask.sum()), 0))
    G = G * np.sqrt(wts[mask])[:, None]
    tvals = np.asarray(target_fn(pts[mask]), dtype=float) * np.sqrt(wts[mask])
    return _nested_fit(G, tvals, basis_sizes, 1e-10)


def runge_solution_demo(assembly: NonlocalAssembly, b: CoefficientField,
                        q: CoefficientField, target_fn, window: tuple[float, float],
                        basis_sizes=(10, 20, 40)) -> RungeReport:
    """Approximate an L2 target on the whole interval by solution restrictions."""
    pts = assembly.rule.points
    wts = assembly.rule.weights
    _, sols = _source_columns(assembly, b, q, window, max(basis_sizes))
    sl = assembly.omega_slice
    cols = [np.interp(pts, assembly.mesh.nodes[sl], s.dofs[sl]) for s in sols]
    G = np.column_stack(cols) if cols else np.zeros((len(pts), 0))
    G = G * np.sqrt(wts)[:, None]
    tvals = np.asarray(target_fn(pts), dtype=float) * np.sqrt(wts)
    return _nested_fit(G, tvals, basis_sizes, 1e-10)
