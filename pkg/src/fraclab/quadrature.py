"""Quadrature rules and exact integration primitives for power-law kernels.

Pointwise fractional evaluations of piecewise-linear (P1) functions reduce to
per-piece moments of polynomial * z^(-gamma), which have elementary
antiderivatives; continuous P1 functions additionally admit a closed kink-sum
form. Numerical rules (Gauss-Legendre panels with geometric grading toward a
singular endpoint) are kept alongside as the independent quadrature routes.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import SingularInputError

_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_rule(n: int):
    """Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1] (cached)."""
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = leggauss(n)
    return _GAUSS_CACHE[n]


def gauss_panel(a: float, b: float, n: int):
    """n-point Gauss-Legendre rule mapped to [a, b]."""
    x, w = gauss_rule(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def graded_rule(a: float, b: float, n: int, toward_left: bool, ratio: float = 0.5,
                levels: int = 40):
    """Composite Gauss rule on [a, b] with panels graded geometrically toward one end.

    The panel edges accumulate at the `toward_left` end with the given ratio;
    the innermost sliver is integrated too, so no part of [a, b] is dropped.
    """
    fr = ratio ** np.arange(levels - 1, -1, -1)  # increasing: r^{L-1} .. 1
    if toward_left:
        edges = np.concatenate(([a], a + (b - a) * fr))
    else:
        edges = np.concatenate((b - (b - a) * fr[::-1], [b]))
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gauss_panel(lo, hi, n)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def power_moments(zl, zr, gamma: float, degree: int):
    """Moments M_m = int_zl^zr z^(m - gamma) dz for m = 0..degree, elementwise.

    zl, zr are arrays with 0 < zl < zr; the exponent hitting -1 exactly
    (2a integral) takes the log branch.
    """
    zl = np.asarray(zl, dtype=float)
    zr = np.asarray(zr, dtype=float)
    out = np.empty((degree + 1,) + zl.shape)
    for m in range(degree + 1):
        p = m - gamma + 1.0
        if abs(p) < 1e-13:
            out[m] = np.log(zr / zl)
        else:
            out[m] = (zr ** p - zl ** p) / p
    return out


# ---------------------------------------------------------------------------
# Piecewise-linear segment tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segments:
    """A compactly supported piecewise-linear function, jumps allowed.

    On segment j (bp[j], bp[j+1]):  u(x) = val[j] + slope[j] * (x - bp[j]);
    u = 0 outside (bp[0], bp[-1]).  Values exactly at breakpoints are taken
    right-continuously and should not be relied on across jumps.
    """

    bp: np.ndarray
    val: np.ndarray
    slope: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.bp, x, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.slope))
        j = np.clip(idx, 0, len(self.slope) - 1)
        y = np.where(inside, self.val[j] + self.slope[j] * (x - self.bp[j]), 0.0)
        return y if y.ndim else float(y)


def segments_from_dofs(nodes, dofs) -> Segments:
    """Continuous P1 interpolant through (nodes, dofs), zero outside the node range.

    The end dofs must vanish, otherwise the zero extension would jump.
    """
    nodes = np.asarray(nodes, dtype=float)
    dofs = np.asarray(dofs, dtype=float)
    slope = np.diff(dofs) / np.diff(nodes)
    return Segments(bp=nodes, val=dofs[:-1].copy(), slope=slope)


def hat_segments(center: float, h: float) -> Segments:
    """The P1 hat of width 2h centered at `center`."""
    bp = np.array([center - h, center, center + h])
    return Segments(bp=bp, val=np.array([0.0, 1.0]), slope=np.array([1.0 / h, -1.0 / h]))


def halfhat_segments(corner: float, h: float, rising: bool) -> Segments:
    """Zero-extended restriction of a boundary hat: one linear piece, one jump.

    rising=False: value 1 at `corner`, 0 at corner + h, 0 left of corner.
    rising=True : value 0 at corner - h, 1 at `corner`, 0 right of corner.
    """
    if rising:
        bp = np.array([corner - h, corner])
        return Segments(bp=bp, val=np.array([0.0]), slope=np.array([1.0 / h]))
    bp = np.array([corner, corner + h])
    return Segments(bp=bp, val=np.array([1.0]), slope=np.array([-1.0 / h]))


# ---------------------------------------------------------------------------
# Pointwise fractional Laplacian of P1 functions
# ---------------------------------------------------------------------------

def kink_sum_coefficient(a: float, const: float) -> float:
    """Prefactor of the kink-sum closed form (a != 1/2 branch)."""
    return const / (2.0 * a * (1.0 - 2.0 * a))


def frac_pl_kink_sum(kinks, jumps, x, a: float, const: float):
    """(-Delta)^a of a continuous, compactly supported P1 function, exactly.

    The function is described by its slope jumps: `jumps[k]` is
    u'(kinks[k]+) - u'(kinks[k]-), with sum(jumps) = 0 (compact support).
    For a != 1/2 the value at x (off every kink) is

        const/(2a(1-2a)) * sum_k jumps[k] * |x - kinks[k]|^(1-2a)

    and for a = 1/2 the limit  const * sum_k jumps[k] * log|x - kinks[k]|.
    """
    kinks = np.asarray(kinks, dtype=float)
    jumps = np.asarray(jumps, dtype=float)
    x = np.asarray(x, dtype=float)
    d = np.abs(x[..., None] - kinks)
    if np.any(d <= 0.0):
        raise SingularInputError("pointwise fractional evaluation at a kink of the P1 function")
    if abs(a - 0.5) < 1e-13:
        vals = const * np.sum(jumps * np.log(d), axis=-1)
    else:
        vals = kink_sum_coefficient(a, const) * np.sum(jumps * d ** (1.0 - 2.0 * a), axis=-1)
    return vals if vals.ndim else float(vals)


def slope_jumps_from_dofs(nodes, dofs, h: float):
    """Slope jumps of the zero-extended P1 interpolant at every node."""
    dofs = np.asarray(dofs, dtype=float)
    padded = np.concatenate(([0.0], dofs, [0.0]))
    return (padded[2:] - 2.0 * padded[1:-1] + padded[:-2]) / h


def frac_pl_exact(seg: Segments, x: float, a: float, const: float,
                  kink_tol: float = 1e-12) -> float:
    """(-Delta)^a of a (possibly discontinuous) P1 function at a single point.

    Integrates const * int_0^inf (2u(x) - u(x+z) - u(x-z)) z^(-1-2a) dz piece
    by piece: between consecutive breakpoint distances the numerator is linear
    in z, so each piece has an elementary antiderivative.  x must lie strictly
    inside a linear piece; the leading piece then vanishes identically.
    """
    gamma = 1.0 + 2.0 * a
    ux = seg(x)
    zb = np.unique(np.abs(seg.bp - x))
    if zb[0] < kink_tol * max(1.0, abs(x), seg.bp[-1] - seg.bp[0]):
        raise SingularInputError(f"evaluation point {x} coincides with a breakpoint")
    if len(zb) > 1:  # merge distances equal up to roundoff (symmetric midpoints)
        keep = np.concatenate(([True], np.diff(zb) > 1e-13 * zb[-1]))
        zb = zb[keep]
    if len(zb) == 1:
        return const * 2.0 * ux * zb[0] ** (-2.0 * a) / (2.0 * a)
    zl = zb[:-1]
    zr = zb[1:]
    span = zr - zl
    z1 = zl + 0.25 * span
    z2 = zl + 0.75 * span
    n1v = 2.0 * ux - seg(x + z1) - seg(x - z1)
    n2v = 2.0 * ux - seg(x + z2) - seg(x - z2)
    c1 = (n2v - n1v) / (z2 - z1)
    c0 = n1v - c1 * z1
    mom = power_moments(zl, zr, gamma, 1)
    total = float(np.sum(c0 * mom[0] + c1 * mom[1]))
    # first piece [0, zb[0]]: both x+z and x-z stay on the linear pieces
    # around x, so the symmetrized numerator is identically zero there
    total += 2.0 * ux * zb[-1] ** (-2.0 * a) / (2.0 * a)
    return const * total


def regional_pl_quad(seg: Segments, x: float, a: float, const: float,
                     lo: float, hi: float, order: int = 16,
                     grade_levels: int = 24) -> float:
    """Region-restricted principal value integral, by graded composite Gauss.

    Evaluates const * p.v. int_lo^hi (u(x) - u(y)) |x-y|^(-1-2a) dy for P1 u
    at an interior non-kink point x: the symmetric range pairs the two sides
    of the singularity, the remainder is one-sided and regular.  This is the
    quadrature route kept deliberately independent of the closed-form one.
    """
    if not lo < x < hi:
        raise SingularInputError("regional evaluation point must lie inside the region")
    gamma = 1.0 + 2.0 * a
    ux = seg(x)
    z_near = min(x - lo, hi - x)
    z_far = max(x - lo, hi - x)
    left_is_far = (x - lo) > (hi - x)

    dists = np.abs(seg.bp - x)
    total = 0.0

    def integrate(zlo, zhi, numer, grade: bool):
        cuts = np.unique(np.concatenate(([zlo, zhi], dists[(dists > zlo) & (dists < zhi)])))
        acc = 0.0
        for pl, pr in zip(cuts[:-1], cuts[1:]):
            if grade and pl < 0.25 * (pr - pl):
                z, w = graded_rule(pl, pr, order, toward_left=True, levels=grade_levels)
            else:
                z, w = gauss_panel(pl, pr, order)
            acc += float(np.sum(w * numer(z) * z ** (-gamma)))
        return acc

    # paired part: numerator vanishes identically on (0, nearest breakpoint)
    z0 = dists[dists > 0].min()
    if z0 <= 0:
        raise SingularInputError(f"evaluation point {x} coincides with a breakpoint")
    start = min(z0, z_near)
    if start < z_near:
        total += integrate(start, z_near, lambda z: 2.0 * ux - seg(x + z) - seg(x - z), grade=True)
    if z_far > z_near:
        if left_is_far:
            total += integrate(z_near, z_far, lambda z: ux - seg(x - z), grade=False)
        else:
            total += integrate(z_near, z_far, lambda z: ux - seg(x + z), grade=False)
    return const * total


def frac_smooth_quad(f, x: float, a: float, const: float, support: tuple[float, float],
                     kinks=(), epsabs: float = 1e-12, epsrel: float = 1e-10) -> float:
    """(-Delta)^a of a smooth compactly supported function by adaptive quadrature.

    Second-difference form with the tail beyond the support integrated in
    closed form.  `kinks` lists abscissae where f has reduced smoothness, so
    the adaptive routine can place subinterval ends there.
    """
    import warnings

    from scipy.integrate import IntegrationWarning, quad

    gamma = 1.0 + 2.0 * a
    fx = f(x)
    z_max = max(x - support[0], support[1] - x)
    if z_max <= 0:
        raise SingularInputError("evaluation point outside the admissible range")

    def integrand(z):
        return (2.0 * fx - f(x + z) - f(x - z)) * z ** (-gamma)

    pts = sorted({abs(x - k) for k in (*kinks, *support) if 0.0 < abs(x - k) < z_max})
    with warnings.catch_warnings():
        # algebraic endpoint kinks make the extrapolation report roundoff
        # saturation; the returned value is still far below our tolerances
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(integrand, 0.0, z_max, points=pts or None, limit=400,
                      epsabs=epsabs, epsrel=epsrel)
    tail = 2.0 * fx * z_max ** (-2.0 * a) / (2.0 * a)
    return const * (val + tail)
