"""Level-1 contour, gauge function, and exact drift verification (N=3).

The gauge is built around the ellipse  e(y2, y3) = a*y2^2 + b*(y2-y3)^2 = 1.
Two tangent lines with prescribed outward normals (1, -Delta) and
(-Delta, 1) touch it at T2 (below the y2 axis) and T3 (third quadrant)
when Delta is large enough.  The closed contour L joins

    K3 = (0, u3)  --chord-->  K2 = (u2, 0)  --tangent-->  T2
       --ellipse arc-->  T3  --tangent-->  K3

where K2, K3 are the tangent/axis intersections.  Every ray from the
origin crosses L exactly once, so the radial gauge phi (phi(y) = r with
y/r on L) is positive, 1-homogeneous, and piecewise explicit:

    positive quadrant sector:  phi = y2/u2 + y3/u3
    T3--K3 sector:             phi = (-Delta*y2 + y3)/u3
    K2--T2 sector:             phi = (y2 - Delta*y3)/u2
    arc sector:                phi = sqrt(e(y))

Tangency points come from the closed form T = Q^{-1} n / sqrt(n' Q^{-1} n)
for the quadratic form matrix Q of e, which also gives u = n . T.

``drift_report`` verifies the negative-drift condition by exact kernel
enumeration at every integer point of an annulus c0 < phi <= c1 and
reports the supremum of E[phi(next)] on the inner ball, which together
instantiate the ergodicity criterion on a finite window.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._accel import njit
from .errors import (
    AssumptionViolated,
    BadQuadrant,
    BadRadii,
    LengthMismatch,
    UndefinedAtCorner,
)


@dataclass(frozen=True)
class Contour:
    """Level-1 curve data; immutable after build_contour."""

    a: float
    b: float
    delta: float
    t2: tuple
    t3: tuple
    u2: float
    u3: float
    y2_star: tuple  # arc point with outward normal along Oy3
    y3_star: tuple  # arc point with outward normal along Oy2


def ellipse_value(contour, y):
    y2, y3 = float(y[0]), float(y[1])
    return contour.a * y2 * y2 + contour.b * (y2 - y3) * (y2 - y3)


def build_contour(a, b, delta):
    """Solve the tangency geometry; BadQuadrant if Delta is too small."""
    a = float(a)
    b = float(b)
    delta = float(delta)
    if not (a > 0.0 and b > 0.0 and delta > 0.0):
        raise BadQuadrant(f"need a, b, delta > 0, got {(a, b, delta)}")
    # inverse of the quadratic form matrix [[a+b, -b], [-b, b]]
    inv11 = 1.0 / a
    inv12 = 1.0 / a
    inv22 = (a + b) / (a * b)

    def tangency(n2c, n3c):
        w2 = inv11 * n2c + inv12 * n3c
        w3 = inv12 * n2c + inv22 * n3c
        u = math.sqrt(n2c * w2 + n3c * w3)
        return (w2 / u, w3 / u), u

    t3, u3 = tangency(-delta, 1.0)
    t2, u2 = tangency(1.0, -delta)
    if not (t3[0] < 0.0 and t3[1] < 0.0):
        raise BadQuadrant(
            f"tangency point {t3} with normal (-{delta}, 1) left the third "
            f"quadrant; need delta > 1 + a/b = {1.0 + a / b}")
    if not t2[1] < 0.0:
        raise BadQuadrant(
            f"tangency point {t2} with normal (1, -{delta}) not below the y2 axis")
    s = math.sqrt(b / (a * (a + b)))
    return Contour(
        a=a, b=b, delta=delta, t2=t2, t3=t3, u2=u2, u3=u3,
        y2_star=(-s, -s * (a + b) / b),
        y3_star=(-1.0 / math.sqrt(a), -1.0 / math.sqrt(a)),
    )


class Region(str, enum.Enum):
    """Sign-pattern regions of the relative plane (precedence top-down)."""

    ORIGIN = "origin"
    E_1 = "E_1"            # open positive quadrant
    E_AXIS_Y2 = "E_axis_y2"  # y2 > 0, y3 = 0
    E_AXIS_Y3 = "E_axis_y3"  # y2 = 0, y3 > 0
    E_3 = "E_3"            # y2 < 0, y3 > y2
    E_MINUS = "E_minus"    # remaining points with min(y2, y3) < 0


_REGION_BY_CODE = (Region.ORIGIN, Region.E_1, Region.E_AXIS_Y2,
                   Region.E_AXIS_Y3, Region.E_3, Region.E_MINUS)


@njit
def _region_code(y2, y3):
    if y2 == 0 and y3 == 0:
        return 0
    if y2 > 0 and y3 > 0:
        return 1
    if y2 > 0 and y3 == 0:
        return 2
    if y2 == 0 and y3 > 0:
        return 3
    if y2 < 0 and y3 > y2:
        return 4
    return 5


def classify_region(y):
    return _REGION_BY_CODE[_region_code(int(y[0]), int(y[1]))]


# sector codes: 0 positive-quadrant chord, 1 T3--K3 segment, 2 arc,
# 3 K2--T2 segment
@njit
def _sector_code(t2x, t2y, t3x, t3y, y2, y3):
    if y2 >= 0.0 and y3 >= 0.0:
        return 0
    if y2 <= 0.0 and t3x * y3 - t3y * y2 <= 0.0:
        return 1
    if y3 <= 0.0 and t2x * y3 - t2y * y2 >= 0.0:
        return 3
    return 2


@njit
def _phi_raw(a, b, delta, u2, u3, t2x, t2y, t3x, t3y, y2, y3):
    if y2 == 0.0 and y3 == 0.0:
        return 0.0
    s = _sector_code(t2x, t2y, t3x, t3y, y2, y3)
    if s == 0:
        return y2 / u2 + y3 / u3
    if s == 1:
        return (-delta * y2 + y3) / u3
    if s == 3:
        return (y2 - delta * y3) / u2
    return math.sqrt(a * y2 * y2 + b * (y2 - y3) * (y2 - y3))


def _consts(contour):
    return (contour.a, contour.b, contour.delta, contour.u2, contour.u3,
            contour.t2[0], contour.t2[1], contour.t3[0], contour.t3[1])


def phi(contour, y):
    """Radial gauge of the contour: 1-homogeneous, level-1 set is L."""
    return _phi_raw(*_consts(contour), float(y[0]), float(y[1]))


def _on_corner_ray(y2, y3):
    return (y2 == 0.0 and y3 == 0.0) or (y3 == 0.0 and y2 > 0.0) \
        or (y2 == 0.0 and y3 > 0.0)


def outer_normal(contour, y):
    """Unit outward normal of L at the contour point on the ray through y.

    Undefined on rays through the corners K2, K3 (and at the origin).
    """
    y2, y3 = float(y[0]), float(y[1])
    if _on_corner_ray(y2, y3):
        raise UndefinedAtCorner(f"normal undefined on the ray through {y}")
    s = _sector_code(contour.t2[0], contour.t2[1], contour.t3[0],
                     contour.t3[1], y2, y3)
    if s == 0:
        v = (1.0 / contour.u2, 1.0 / contour.u3)
    elif s == 1:
        v = (-contour.delta, 1.0)
    elif s == 3:
        v = (1.0, -contour.delta)
    else:
        f = phi(contour, y)
        p2, p3 = y2 / f, y3 / f
        v = (contour.a * p2 + contour.b * (p2 - p3), -contour.b * (p2 - p3))
    norm = math.hypot(v[0], v[1])
    return (v[0] / norm, v[1] / norm)


def grad_phi(contour, y):
    """Gradient of phi, constant along rays: n(y*) / <y*, n(y*)>."""
    y2, y3 = float(y[0]), float(y[1])
    if _on_corner_ray(y2, y3):
        raise UndefinedAtCorner(f"gradient undefined on the ray through {y}")
    n2, n3 = outer_normal(contour, y)
    f = phi(contour, y)
    denom = (y2 * n2 + y3 * n3) / f  # <y*, n>
    return (n2 / denom, n3 / denom)


def auto_tune_delta(params, a, b):
    """Smallest doubling-search Delta aligning the contour with the drift.

    Requires lambda_1 strictly below lambda_2 and lambda_3.  Doubles
    Delta from 2 until build_contour succeeds and the free mean jump
    has inner product <= -0.1 times the achievable limit with both
    tangent normals (the limits being the opposite jump component).
    """
    if params.n != 3:
        raise LengthMismatch("contour tuning is specific to 3 processors")
    l1, l2, l3 = params.lambdas
    if not (l1 < l2 and l1 < l3):
        raise AssumptionViolated(
            f"need lambda_1 < min(lambda_2, lambda_3), got {params.lambdas}")
    m2 = (l2 - l1) / params.z
    m3 = (l3 - l1) / params.z
    delta = 2.0
    for _ in range(60):
        try:
            build_contour(a, b, delta)
        except BadQuadrant:
            delta *= 2.0
            continue
        hyp = math.hypot(1.0, delta)
        ip2 = (m2 - delta * m3) / hyp
        ip3 = (m3 - delta * m2) / hyp
        if ip2 <= -0.1 * m3 and ip3 <= -0.1 * m2:
            return delta
        delta *= 2.0
    raise AssumptionViolated("no Delta aligned the tangent normals")


# ---------------------------------------------------------------------------
# exact drift over an annulus


@njit
def _drift_parts(lam, bet, b, z, a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                 y2, y3):
    """(free, rollback) drift of phi at integer (y2, y3), 3 processors."""
    f0 = _phi_raw(a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                  float(y2), float(y3))
    free = 0.0
    free += lam[0] / z * (_phi_raw(a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                                   float(y2 - 1), float(y3 - 1)) - f0)
    free += lam[1] / z * (_phi_raw(a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                                   float(y2 + 1), float(y3)) - f0)
    free += lam[2] / z * (_phi_raw(a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                                   float(y2), float(y3 + 1)) - f0)
    rb = 0.0
    m12 = bet[0] / z
    if m12 > 0.0 and y2 > 0:
        top = y2 if y2 < y3 - 1 else y3 - 1
        b2 = b[1]
        if top < 0:
            rb += m12 * (_phi_raw(a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                                  0.0, float(y3)) - f0)
        else:
            stop = b2 ** (top + 1)
            rb += m12 * stop * (_phi_raw(a, bc, delta, u2, u3, t2x, t2y,
                                         t3x, t3y, 0.0, float(y3)) - f0)
            if b2 < 1.0:
                p = 1.0 - b2
                for v in range(top + 1):
                    rb += m12 * p * (_phi_raw(a, bc, delta, u2, u3, t2x, t2y,
                                              t3x, t3y, 0.0, float(v)) - f0)
                    p *= b2
    m23 = bet[1] / z
    if m23 > 0.0 and y3 > y2:
        rb += m23 * (_phi_raw(a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                              float(y2), float(y2)) - f0)
    return free, rb


@njit
def _expect_phi(lam, bet, b, z, a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                y2, y3):
    """E[phi(next)] at integer (y2, y3) including self-loop mass."""
    f0 = _phi_raw(a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                  float(y2), float(y3))
    free, rb = _drift_parts(lam, bet, b, z, a, bc, delta, u2, u3,
                            t2x, t2y, t3x, t3y, y2, y3)
    return f0 + free + rb


@njit
def _drift_scan(lam, bet, b, z, a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                c0, c1, y2lo, y2hi, y3lo, y3hi):
    nreg = 6
    count = np.zeros(nreg, np.int64)
    mx_full = np.full(nreg, -np.inf)
    mx_free = np.full(nreg, -np.inf)
    mx_rb = np.full(nreg, -np.inf)
    arg = np.zeros((nreg, 2), np.int64)
    inner_count = 0
    inner_sup = -np.inf
    inner_arg = np.zeros(2, np.int64)
    for y2 in range(y2lo, y2hi + 1):
        for y3 in range(y3lo, y3hi + 1):
            f = _phi_raw(a, bc, delta, u2, u3, t2x, t2y, t3x, t3y,
                         float(y2), float(y3))
            if f > c1:
                continue
            if f <= c0:
                e = _expect_phi(lam, bet, b, z, a, bc, delta, u2, u3,
                                t2x, t2y, t3x, t3y, y2, y3)
                inner_count += 1
                if e > inner_sup:
                    inner_sup = e
                    inner_arg[0] = y2
                    inner_arg[1] = y3
                continue
            free, rb = _drift_parts(lam, bet, b, z, a, bc, delta, u2, u3,
                                    t2x, t2y, t3x, t3y, y2, y3)
            full = free + rb
            r = _region_code(y2, y3)
            count[r] += 1
            if full > mx_full[r]:
                mx_full[r] = full
                arg[r, 0] = y2
                arg[r, 1] = y3
            if free > mx_free[r]:
                mx_free[r] = free
            if rb > mx_rb[r]:
                mx_rb[r] = rb
    return (count, mx_full, mx_free, mx_rb, arg,
            inner_count, inner_sup, inner_arg)


@dataclass(frozen=True)
class RegionDrift:
    region: str
    points: int
    max_full_drift: float
    max_free_drift: float
    max_rollback_drift: float
    argmax: tuple


@dataclass(frozen=True)
class DriftReport:
    """Exact drifts of phi over the annulus c0 < phi <= c1.

    ``verdict`` holds when the worst full drift on the annulus is
    negative and E[phi(next)] is finite on the inner ball; epsilon is
    the certified drift margin and {phi <= c0} the finite exception set.
    """

    c0: float
    c1: float
    contour: Contour
    regions: tuple
    annulus_points: int
    worst_drift: float
    worst_point: tuple
    epsilon: float
    inner_points: int
    inner_sup: float
    inner_sup_point: tuple
    verdict: bool


def drift_report(params, contour, c0, c1):
    """Exact per-region drift table of phi on c0 < phi <= c1."""
    if params.n != 3:
        raise LengthMismatch("drift verification is specific to 3 processors")
    l1, l2, l3 = params.lambdas
    if not (l1 < l2 and l1 < l3):
        raise AssumptionViolated(
            f"need lambda_1 < min(lambda_2, lambda_3), got {params.lambdas}")
    c0 = float(c0)
    c1 = float(c1)
    if not (0.0 < c0 < c1):
        raise BadRadii(f"need 0 < c0 < c1, got ({c0}, {c1})")
    a, bc = contour.a, contour.b
    # contour extents: leftmost arc point is y3_star, lowest is y2_star
    y2lo = math.floor(-c1 / math.sqrt(a)) - 1
    y2hi = math.ceil(c1 * max(contour.u2, 1.0 / math.sqrt(a))) + 1
    y3lo = math.floor(-c1 * math.sqrt((a + bc) / (a * bc))) - 1
    y3hi = math.ceil(c1 * max(contour.u3, math.sqrt((a + bc) / (a * bc)))) + 1
    lam = np.asarray(params.lambdas, dtype=np.float64)
    bet = np.asarray(params.betas, dtype=np.float64)
    b = np.asarray(params.b, dtype=np.float64)
    (count, mx_full, mx_free, mx_rb, arg, inner_count, inner_sup,
     inner_arg) = _drift_scan(
        lam, bet, b, params.z, *_consts(contour),
        c0, c1, y2lo, y2hi, y3lo, y3hi)
    regions = []
    worst = -math.inf
    worst_point = (0, 0)
    for r in range(6):
        if count[r] == 0:
            continue
        regions.append(RegionDrift(
            region=_REGION_BY_CODE[r].value,
            points=int(count[r]),
            max_full_drift=float(mx_full[r]),
            max_free_drift=float(mx_free[r]),
            max_rollback_drift=float(mx_rb[r]),
            argmax=(int(arg[r, 0]), int(arg[r, 1])),
        ))
        if mx_full[r] > worst:
            worst = float(mx_full[r])
            worst_point = (int(arg[r, 0]), int(arg[r, 1]))
    verdict = worst < 0.0 and math.isfinite(inner_sup)
    return DriftReport(
        c0=c0,
        c1=c1,
        contour=contour,
        regions=tuple(regions),
        annulus_points=int(count.sum()),
        worst_drift=worst,
        worst_point=worst_point,
        epsilon=-worst,
        inner_points=int(inner_count),
        inner_sup=float(inner_sup),
        inner_sup_point=(int(inner_arg[0]), int(inner_arg[1])),
        verdict=verdict,
    )
