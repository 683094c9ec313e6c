"""Galerkin assembly of the nonlocal bilinear forms on the uniform P1 mesh.

The double integral over element pairs depends only on the element distance,
so one set of reference blocks per distance assembles the whole matrix.
Touching pairs are handled by a Duffy-type change of variables (the singular
direction separates and is integrated in closed form or with geometric
grading); disjoint pairs by tensor Gauss rules with a doubled-order
stabilization check.
"""

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, QuadratureError
from .kernels import frac_constant, tail_potential, validate_order
from .mesh import CoefficientField, InteriorRule, Mesh1D, interior_rule
from .quadrature import (
    frac_pl_exact,
    gauss_panel,
    graded_rule,
    halfhat_segments,
)

_REFINE_TOL = 1e-8


# ---------------------------------------------------------------------------
# Reference blocks on the unit element pair
# ---------------------------------------------------------------------------

def _same_element_block(a: float) -> np.ndarray:
    """2x2 block for an element paired with itself.

    Both shape differences are proportional to (xi - zeta), so the integrand
    is |xi - zeta|^(1-2a); the diagonal split reduces it to the edge integral
    2 * int_0^1 u^(1-2a) (1-u) du.  A power change of variables u = w^p makes
    the integrand bounded for every order, then panels graded toward w = 0
    finish the job; a doubled-order pass guards the tolerance.
    """
    p = float(np.ceil(2.0 / (2.0 - 2.0 * a)) + 1.0)
    mu = p * (2.0 - 2.0 * a) - 1.0

    def value(n):
        w, wt = graded_rule(0.0, 1.0, n, toward_left=True, levels=40)
        return 2.0 * p * float(np.sum(wt * w ** mu * (1.0 - w ** p)))

    coarse, fine = value(12), value(24)
    if abs(fine - coarse) > _REFINE_TOL * abs(fine):
        raise QuadratureError("graded rule failed to stabilize the same-element block")
    return fine * np.array([[1.0, -1.0], [-1.0, 1.0]])


def _adjacent_block(a: float, n_eta: int = 24) -> np.ndarray:
    """3x3 block for elements sharing one node (corner singularity).

    Duffy maps each of the two triangles around the shared corner so the
    radial direction separates with exponent 2-2a and closed antiderivative
    1/(3-2a); the angular factor is smooth and Gauss-integrated.
    """
    gamma = 1.0 + 2.0 * a

    def angular(n):
        eta, w = gauss_panel(0.0, 1.0, n)
        out = np.zeros((3, 3))
        for gammas, g in ((np.stack([np.ones_like(eta), eta - 1.0, -eta]), 1.0 + eta),
                          (np.stack([1.0 - eta, eta, -np.ones_like(eta)]), 2.0 - eta)):
            kern = w * g ** (-gamma)
            out += np.einsum("ik,jk,k->ij", gammas, gammas, kern)
        return out

    coarse = angular(n_eta)
    fine = angular(2 * n_eta)
    scale = np.max(np.abs(fine))
    if np.max(np.abs(fine - coarse)) > _REFINE_TOL * scale:
        raise QuadratureError("angular quadrature of the adjacent-element block did not stabilize")
    return fine / (3.0 - 2.0 * a)


def _far_blocks(a: float, n_dist: int, n_q: int = 24) -> np.ndarray:
    """4x4 blocks for all element distances d = 2 .. n_dist, tensor Gauss.

    Returns an array B with B[d] the block for distance d (entries below
    d = 2 unused).  The kernel argument (d + zeta - xi) stays >= d - 1 >= 1,
    so plain tensor rules converge geometrically; a doubled-order pass guards
    the tolerance.
    """
    gamma = 1.0 + 2.0 * a
    dvals = np.arange(2, n_dist + 1, dtype=float)

    def compute(n):
        xi, wx = gauss_panel(0.0, 1.0, n)
        zeta, wz = gauss_panel(0.0, 1.0, n)
        fields = np.stack([
            np.broadcast_to((1.0 - xi)[:, None], (n, n)),
            np.broadcast_to(xi[:, None], (n, n)),
            np.broadcast_to(-(1.0 - zeta)[None, :], (n, n)),
            np.broadcast_to(-zeta[None, :], (n, n)),
        ])
        wmat = wx[:, None] * wz[None, :]
        prods = np.einsum("aij,bij,ij->abij", fields, fields, wmat).reshape(16, n * n)
        arg = dvals[:, None] + (zeta[None, :] - xi[:, None]).reshape(1, n * n)
        kern = arg ** (-gamma)
        return (kern @ prods.T).reshape(len(dvals), 4, 4)

    if len(dvals) == 0:
        return np.zeros((n_dist + 1, 4, 4))
    coarse = compute(n_q // 2)
    fine = compute(n_q)
    scale = np.max(np.abs(fine), axis=(1, 2), keepdims=True)
    if np.max(np.abs(fine - coarse) / scale) > _REFINE_TOL:
        raise QuadratureError("tensor quadrature of a disjoint-element block did not stabilize")
    out = np.zeros((n_dist + 1, 4, 4))
    out[2:] = fine
    return out


@lru_cache(maxsize=16)
def _reference_blocks(a: float, n_dist: int):
    return _same_element_block(a), _adjacent_block(a), _far_blocks(a, n_dist)


def gagliardo_raw_matrix(n_el: int, h: float, a: float) -> np.ndarray:
    """Unnormalized Galerkin matrix of the double integral over the span squared:

        A[i,j] = int int (phi_i(x)-phi_i(y)) (phi_j(x)-phi_j(y)) |x-y|^(-1-2a) dy dx

    over a span of n_el uniform elements (n_el + 1 nodes)."""
    validate_order(a)
    t0, t1, tfar = _reference_blocks(float(a), max(n_el - 1, 0))
    n = n_el + 1
    scale = h ** (1.0 - 2.0 * a)
    A = np.zeros((n, n))
    e = np.arange(n_el)
    for r in range(2):
        for c in range(2):
            A[e + r, e + c] += scale * t0[r, c]
    if n_el >= 2:
        e = np.arange(n_el - 1)
        for r in range(3):
            for c in range(3):
                A[e + r, e + c] += 2.0 * scale * t1[r, c]
    for d in range(2, n_el):
        e = np.arange(n_el - d)
        offs = (0, 1, d, d + 1)
        for r in range(4):
            for c in range(4):
                A[e + offs[r], e + offs[c]] += 2.0 * scale * tfar[d, r, c]
    return A


# ---------------------------------------------------------------------------
# Tail matrix and mass matrices
# ---------------------------------------------------------------------------

def _poly_power_integral(coeffs, xl: float, xr: float, pole: float, sign: float,
                         gamma: float) -> float:
    """int_xl^xr p(x) |sign*(x-pole)|^(-gamma) dx with the pole off (xl, xr).

    Substituting the distance variable makes every term an elementary power
    (or log) antiderivative; `coeffs` are polynomial coefficients in x,
    ascending order.
    """
    p = np.polynomial.Polynomial(coeffs)
    q = p(np.polynomial.Polynomial([pole, sign]))  # p as a polynomial in xi = sign*(x-pole)
    lo, hi = sorted((sign * (xl - pole), sign * (xr - pole)))
    total = 0.0
    for m, c in enumerate(q.coef):
        if c == 0.0:
            continue
        pw = m - gamma + 1.0
        if abs(pw) < 1e-13:
            total += c * np.log(hi / lo)
        else:
            total += c * (hi ** pw - lo ** pw) / pw
    return total


def tail_matrix(mesh: Mesh1D, a: float, const: float, skip_pinned: bool = True) -> np.ndarray:
    """Matrix of int phi_i phi_j psi dx with psi the box-exterior tail weight.

    psi(x) = const * int_{|y|>R} |x-y|^(-1-2a) dy blows up at the box ends;
    combinations involving the pinned end dofs are skipped by default (their
    entries diverge for a >= 1/2 and the dofs are never used).  For a < 1/2
    they are finite and skip_pinned=False includes them.
    """
    validate_order(a)
    if not skip_pinned and a >= 0.5:
        raise DomainError("end-node tail entries diverge for orders >= 1/2")
    n = mesh.n_nodes
    h = mesh.h
    R = mesh.geom.trunc_radius
    gamma = 2.0 * a
    A = np.zeros((n, n))
    for e in range(mesh.n_elements):
        xl, xr = mesh.nodes[e], mesh.nodes[e + 1]
        shapes = (np.array([xr / h, -1.0 / h]), np.array([-xl / h, 1.0 / h]))
        for r in range(2):
            if skip_pinned and (e + r == 0 or e + r == n - 1):
                continue
            for c in range(r, 2):
                if skip_pinned and e + c == n - 1:
                    continue
                prod = np.polynomial.polynomial.polymul(shapes[r], shapes[c])
                val = _poly_power_integral(prod, xl, xr, R, -1.0, gamma)
                val += _poly_power_integral(prod, xl, xr, -R, 1.0, gamma)
                val *= const / (2.0 * a)
                A[e + r, e + c] += val
                if c != r:
                    A[e + c, e + r] += val
    return A


def mass_matrix(n_el: int, h: float) -> np.ndarray:
    """Consistent P1 mass matrix over a span of n_el uniform elements."""
    n = n_el + 1
    M = np.zeros((n, n))
    e = np.arange(n_el)
    M[e, e] += h / 3.0
    M[e + 1, e + 1] += h / 3.0
    M[e, e + 1] += h / 6.0
    M[e + 1, e] += h / 6.0
    return M


def weighted_mass_matrix(nodes: np.ndarray, coef: CoefficientField) -> np.ndarray:
    """P1 mass matrix weighted by a piecewise-constant coefficient.

    Cells are expected to be mesh-aligned; the coefficient is sampled at
    element midpoints, which is exact in that case.
    """
    n = len(nodes)
    h = float(nodes[1] - nodes[0])
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    vals = np.asarray(coef(mids), dtype=float)
    M = np.zeros((n, n))
    e = np.arange(n - 1)
    M[e, e] += vals * h / 3.0
    M[e + 1, e + 1] += vals * h / 3.0
    M[e, e + 1] += vals * h / 6.0
    M[e + 1, e] += vals * h / 6.0
    return M


# ---------------------------------------------------------------------------
# Regional half-operator at interior quadrature points
# ---------------------------------------------------------------------------

def fullspace_hat_values(points: np.ndarray, centers: np.ndarray, h: float, a: float,
                         const: float) -> np.ndarray:
    """(-Delta)^a of every width-2h hat at every point, by the kink-sum closed form."""
    d0 = np.abs(points[:, None] - centers[None, :])
    dm = np.abs(points[:, None] - (centers[None, :] - h))
    dp = np.abs(points[:, None] - (centers[None, :] + h))
    if abs(a - 0.5) < 1e-13:
        return const * (np.log(dm) - 2.0 * np.log(d0) + np.log(dp)) / h
    ex = 1.0 - 2.0 * a
    coef = const / (2.0 * a * (1.0 - 2.0 * a))
    return coef * (dm ** ex - 2.0 * d0 ** ex + dp ** ex) / h


def assemble_regional_halfop(mesh: Mesh1D, s_half: float,
                             rule: InteriorRule | None = None) -> np.ndarray:
    """Matrix of the region-restricted operator of order 2*s_half at quadrature points.

    Column j holds (-Delta)^{s/2}_Omega phi_j evaluated at the interior rule
    points, computed as the full-space operator minus the tail potential times
    the basis value.  Columns run over all nodes of the closed interval; the
    two boundary columns are the zero-extended boundary half hats (so the
    all-ones coefficient vector reproduces the indicator of the interval,
    which the operator annihilates identically).
    """
    validate_order(s_half, "s/2")
    if abs(s_half - 0.5) < 1e-12:
        warnings.warn(
            "order s/2 = 1/2 sits on the borderline square-integrability case; "
            "values involving boundary-touching hats may be outside L^2",
            stacklevel=2)
    if rule is None:
        rule = interior_rule(mesh)
    geom = mesh.geom
    const = frac_constant(s_half)
    i_lo = mesh.node_index(geom.omega_lo)
    i_hi = mesh.node_index(geom.omega_hi)
    centers = mesh.nodes[i_lo:i_hi + 1]
    pts = rule.points
    h = mesh.h

    full = np.empty((len(pts), len(centers)))
    full[:, 1:-1] = fullspace_hat_values(pts, centers[1:-1], h, s_half, const)
    seg_lo = halfhat_segments(geom.omega_lo, h, rising=False)
    seg_hi = halfhat_segments(geom.omega_hi, h, rising=True)
    full[:, 0] = [frac_pl_exact(seg_lo, float(x), s_half, const) for x in pts]
    full[:, -1] = [frac_pl_exact(seg_hi, float(x), s_half, const) for x in pts]

    phi = tail_potential(s_half, geom, pts)
    hat_vals = np.maximum(0.0, 1.0 - np.abs(pts[:, None] - centers[None, :]) / h)
    hat_vals[:, 0] = np.where(pts <= geom.omega_lo + h,
                              np.maximum(0.0, 1.0 - (pts - geom.omega_lo) / h), 0.0)
    hat_vals[:, -1] = np.where(pts >= geom.omega_hi - h,
                               np.maximum(0.0, 1.0 - (geom.omega_hi - pts) / h), 0.0)
    return full - phi[:, None] * hat_vals


# ---------------------------------------------------------------------------
# Bundled assembly
# ---------------------------------------------------------------------------

@dataclass
class NonlocalAssembly:
    """All matrices of the bilinear form on one mesh, for orders (t, s).

    K_full carries the full-space Gagliardo form of order t of the box basis
    (double integral over the box plus the closed-form exterior tail); the
    pinned box-end rows/columns are zero.  R_half evaluates the regional
    half-operator at the interior quadrature rule; it is built lazily since
    pure zeroth-order runs never need it.
    """

    mesh: Mesh1D
    t: float
    s: float
    K_full: np.ndarray
    M_box: np.ndarray
    M_omega: np.ndarray
    rule: InteriorRule
    _r_half: np.ndarray | None = None

    @property
    def omega_slice(self) -> slice:
        i_lo = self.mesh.node_index(self.mesh.geom.omega_lo)
        i_hi = self.mesh.node_index(self.mesh.geom.omega_hi)
        return slice(i_lo, i_hi + 1)

    @property
    def R_half(self) -> np.ndarray:
        if self._r_half is None:
            self._r_half = assemble_regional_halfop(self.mesh, 0.5 * self.s, self.rule)
        return self._r_half

    def interior_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mesh.interior_mask)

    def embed_omega(self, A_omega: np.ndarray) -> np.ndarray:
        """Embed an Omega-span matrix into global (box) node indexing."""
        n = self.mesh.n_nodes
        out = np.zeros((n, n))
        sl = self.omega_slice
        out[sl, sl] = A_omega
        return out


def assemble_full_gagliardo(mesh: Mesh1D, t: float) -> np.ndarray:
    """Full-space Gagliardo stiffness of order t for the box basis (tail included)."""
    validate_order(t)
    const = frac_constant(t)
    A = 0.5 * const * gagliardo_raw_matrix(mesh.n_elements, mesh.h, t)
    A += tail_matrix(mesh, t, const)
    A[0, :] = A[:, 0] = 0.0
    A[-1, :] = A[:, -1] = 0.0
    return A


def build_assembly(mesh: Mesh1D, t: float, s: float) -> NonlocalAssembly:
    if not 0.0 < s < t < 1.0:
        raise DomainError(f"orders must satisfy 0 < s < t < 1, got s={s}, t={t}")
    rule = interior_rule(mesh)
    sl_lo = mesh.node_index(mesh.geom.omega_lo)
    sl_hi = mesh.node_index(mesh.geom.omega_hi)
    return NonlocalAssembly(
        mesh=mesh, t=t, s=s,
        K_full=assemble_full_gagliardo(mesh, t),
        M_box=mass_matrix(mesh.n_elements, mesh.h),
        M_omega=mass_matrix(sl_hi - sl_lo, mesh.h),
        rule=rule,
    )


def assemble_weighted_forms(assembly: NonlocalAssembly, b: CoefficientField,
                            q: CoefficientField):
    """(Kb, Mq, M) over the closed-interval node span.

    Kb = R^T diag(w * b) R realizes the coefficient-weighted product of
    regional half-operators; Mq and M are the weighted and plain mass
    matrices.  Both coefficients must vanish within one cell of the boundary.
    """
    mesh = assembly.mesh
    b.check_support(mesh)
    q.check_support(mesh)
    R = assembly.R_half
    w = assembly.rule.weights * np.asarray(b(assembly.rule.points), dtype=float)
    Kb = (R.T * w) @ R
    nodes = mesh.nodes[assembly.omega_slice]
    Mq = weighted_mass_matrix(nodes, q)
    return Kb, Mq, assembly.M_omega.copy()


def gagliardo_seminorm(mesh: Mesh1D, dofs: np.ndarray, r: float,
                       region: str = "omega") -> float:
    """Double-integral seminorm of a P1 function over the interval or the box.

    region="omega" restricts both integration variables to the interval;
    region="full" uses the whole computational box.
    """
    validate_order(r)
    dofs = np.asarray(dofs, dtype=float)
    if region == "omega":
        sl = slice(mesh.node_index(mesh.geom.omega_lo), mesh.node_index(mesh.geom.omega_hi) + 1)
        v = dofs[sl]
        A = gagliardo_raw_matrix(len(v) - 1, mesh.h, r)
    elif region == "full":
        v = dofs
        A = gagliardo_raw_matrix(mesh.n_elements, mesh.h, r)
    else:
        raise DomainError("region must be 'omega' or 'full'")
    return float(np.sqrt(max(0.0, v @ A @ v)))


def matrix_to_rows(A: np.ndarray):
    """Yield (row, col, value) triples of the nonzero entries, row-major."""
    for i, j in zip(*np.nonzero(A)):
        yield int(i), int(j), float(A[i, j])
