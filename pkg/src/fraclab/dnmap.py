"""Exterior measurement operators: the nonlocal Neumann functional and the
Dirichlet-to-Neumann values, with their structural relation as a dual-route check.

Discrete P1 functions have kinks at every node, where the pointwise operator
of order 2t > 1 diverges; observation points are therefore snapped to the
nearest element midpoint once, and every route below is evaluated at the same
snapped points.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import NonlocalAssembly
from .errors import ObservationError
from .kernels import frac_constant, m_function
from .mesh import ExteriorDatum, Mesh1D, eval_p1
from .quadrature import gauss_panel, slope_jumps_from_dofs


@dataclass(frozen=True)
class ObservationSet:
    """Finite exterior observation set with trapezoid weights.

    Points must be exterior with at least one cell between them and the
    interval; they are snapped to element midpoints at construction (stored
    in `points`), and `requested` keeps the original locations.
    """

    mesh: Mesh1D
    points: np.ndarray
    weights: np.ndarray
    requested: np.ndarray

    @classmethod
    def create(cls, mesh: Mesh1D, points) -> "ObservationSet":
        req = np.sort(np.asarray(points, dtype=float))
        if len(req) == 0:
            raise ObservationError("observation set must be nonempty")
        geom = mesh.geom
        dist = np.minimum(np.abs(req - geom.omega_lo), np.abs(req - geom.omega_hi))
        inside = (req >= geom.omega_lo) & (req <= geom.omega_hi)
        if np.any(inside) or np.any(dist < mesh.h - 1e-12):
            raise ObservationError(
                "observation points must lie outside the interval, at least one cell away")
        if np.any(np.abs(req) > geom.trunc_radius - mesh.h):
            raise ObservationError("observation points must stay inside the computational box")
        elem = np.clip(np.floor((req - mesh.nodes[0]) / mesh.h).astype(int),
                       0, mesh.n_elements - 1)
        snapped = mesh.nodes[elem] + 0.5 * mesh.h
        # trapezoid weights per contiguous cluster (a two-sided set must not
        # bridge the interval with one giant panel)
        if len(snapped) == 1:
            w = np.array([1.0])
        else:
            diffs = np.diff(snapped)
            med = float(np.median(diffs))
            breaks = np.flatnonzero(diffs > 3.0 * med) + 1
            w = np.empty_like(snapped)
            for seg in np.split(np.arange(len(snapped)), breaks):
                if len(seg) == 1:
                    w[seg] = med
                    continue
                s = snapped[seg]
                w[seg[0]] = 0.5 * (s[1] - s[0])
                w[seg[-1]] = 0.5 * (s[-1] - s[-2])
                w[seg[1:-1]] = 0.5 * (s[2:] - s[:-2])
        return cls(mesh=mesh, points=snapped, weights=w, requested=req)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class DnDatum:
    obs: ObservationSet
    values: np.ndarray
    source_label: str = "f"

    def __post_init__(self):
        if len(self.values) != len(self.obs):
            raise ObservationError("one value per observation point required")


class NeumannEvaluator:
    """Precomputed quadrature of the Neumann functional on one observation set.

    N u (x_k) = C_t * int_Omega (u(x_k) - u(y)) |x_k - y|^(-1-2t) dy reduces to
    u(x_k) * m(x_k) minus a fixed weighted-kernel matrix applied to the
    interval quadrature values of u.  The kernel is smooth for exterior x_k
    (the points are at least one cell away); a doubled per-element Gauss order
    keeps the near field accurate.
    """

    def __init__(self, assembly: NonlocalAssembly, obs: ObservationSet, n_gauss: int = 12):
        mesh = assembly.mesh
        self.mesh = mesh
        self.obs = obs
        i_lo = mesh.node_index(mesh.geom.omega_lo)
        i_hi = mesh.node_index(mesh.geom.omega_hi)
        ys, ws = [], []
        for e in range(i_lo, i_hi):
            a, b = mesh.nodes[e], mesh.nodes[e + 1]
            mid = 0.5 * (a + b)
            for lo, hi in ((a, mid), (mid, b)):
                y, w = gauss_panel(lo, hi, n_gauss)
                ys.append(y)
                ws.append(w)
        self.y = np.concatenate(ys)
        w = np.concatenate(ws)
        gamma = 1.0 + 2.0 * assembly.t
        const = frac_constant(assembly.t)
        kern = np.abs(obs.points[:, None] - self.y[None, :]) ** (-gamma)
        self.Kw = const * kern * w[None, :]
        self.m_at = self.Kw.sum(axis=1)  # = C*int_Omega k(x_k - y) dy by the same rule

    def __call__(self, u_dofs: np.ndarray, label: str = "f") -> DnDatum:
        u_obs = eval_p1(self.mesh, u_dofs, self.obs.points)
        u_quad = eval_p1(self.mesh, u_dofs, self.y)
        vals = u_obs * self.m_at - self.Kw @ u_quad
        return DnDatum(obs=self.obs, values=vals, source_label=label)


def nonlocal_normal_derivative(assembly: NonlocalAssembly, u_dofs: np.ndarray,
                               obs: ObservationSet, n_gauss: int = 12,
                               label: str = "f") -> DnDatum:
    """One-shot Neumann functional evaluation (see NeumannEvaluator)."""
    return NeumannEvaluator(assembly, obs, n_gauss)(u_dofs, label)


def dn_operator(assembly: NonlocalAssembly, u_dofs: np.ndarray, obs: ObservationSet,
                label: str = "f") -> DnDatum:
    """Dirichlet-to-Neumann values: the order-2t operator of the discrete solution
    at the observation points, via the exact kink-sum of the second-difference form."""
    mesh = assembly.mesh
    const = frac_constant(assembly.t)
    jumps = slope_jumps_from_dofs(mesh.nodes, u_dofs, mesh.h)
    t = assembly.t
    d = np.abs(obs.points[:, None] - mesh.nodes[None, :])
    if abs(t - 0.5) < 1e-13:
        vals = const * (np.log(d) @ jumps)
    else:
        vals = const / (2.0 * t * (1.0 - 2.0 * t)) * (d ** (1.0 - 2.0 * t) @ jumps)
    return DnDatum(obs=obs, values=vals, source_label=label)


def zero_extension_term(assembly: NonlocalAssembly, f: ExteriorDatum,
                        obs: ObservationSet) -> np.ndarray:
    """(-Delta)^t of the zero extension of the exterior datum at the observation points."""
    return dn_operator(assembly, f.dofs, obs, label=f.label).values


@dataclass(frozen=True)
class RelationReport:
    max_abs_discrepancy: float
    lhs: np.ndarray
    rhs: np.ndarray


def verify_ln_relation(assembly: NonlocalAssembly, f: ExteriorDatum, u_dofs: np.ndarray,
                       obs: ObservationSet) -> RelationReport:
    """Check  Lambda f = Neumann(u_f) - m f + (-Delta)^t (E0 f)  pointwise.

    Left side by the kink-sum route, right side by per-element Gauss plus the
    closed-form exterior mass; the three routes share only the normalization
    constant, so agreement validates all of them at once.
    """
    lhs = dn_operator(assembly, u_dofs, obs).values
    neu = nonlocal_normal_derivative(assembly, u_dofs, obs).values
    m = np.asarray(m_function(assembly.t, assembly.mesh.geom, obs.points))
    fv = f(obs.points)
    rhs = neu - m * fv + zero_extension_term(assembly, f, obs)
    return RelationReport(max_abs_discrepancy=float(np.max(np.abs(lhs - rhs))),
                          lhs=lhs, rhs=rhs)
