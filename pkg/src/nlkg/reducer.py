"""Explicit changes of unknowns taking a classified system to its model representative.

Every reduction is certified by pushing the input through the product of the
chain with the substitution oracle and comparing against the catalog entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import least_squares

from .classifier import (
    classify_family,
    curve_intersections,
    ell_vanishes,
    kernel_direction,
    z2_condition,
    z2_discriminant,
    z2_discriminant_sign,
)
from .cubic_system import (
    Coefficients,
    GL2Transform,
    ModelSystemId,
    canonical_decoupled,
    model_catalog,
    transform_by_substitution,
)
from .errors import (
    CertificationError,
    DegenerateTangencyError,
    InvalidTransformError,
    InconsistentExtractionError,
    PreconditionError,
    UnsupportedClassError,
)
from .matrix_rep import coeffs_to_matrix
from .scalars import REL_TOL, all_exact, exact_sqrt, is_exact, sign

TANGENCY_TOL = 1e-8
EXTRACTION_TOL = 1e-7


@dataclass
class ReductionResult:
    chain: list
    total: GL2Transform
    model: ModelSystemId
    model_coeffs: Coefficients
    residual: object
    family: str = ""
    params: dict = field(default_factory=dict)

    @property
    def exact(self):
        return self.total.exact and self.residual == 0 and is_exact(self.residual)


def compose(chain):
    total = GL2Transform.identity()
    for m in chain:
        total = m @ total
    return total


def residual_bound(c: Coefficients):
    return 1e-8 * max(1.0, c.norm())


def _finish(c, chain, model, family, params, certify=True):
    total = compose(chain)
    target = model_catalog(model)
    got = transform_by_substitution(c, total)
    residual = max(abs(x - y) for x, y in zip(got, target))
    if certify and residual > residual_bound(c):
        raise CertificationError(
            f"reduction to {model} left residual {float(residual):.3g}"
            f" above {residual_bound(c):.3g}")
    return ReductionResult(list(chain), total, model, target, residual, family, params)


def _require(c, family):
    got = classify_family(c)[0]
    if got != family:
        raise PreconditionError(f"system is in {got}, not {family}")


def _dot(x, y):
    return sum(a * b for a, b in zip(x, y))


def _apply(a, v):
    return tuple(_dot(r, v) for r in a.rows)


def _solve2(p, q, d):
    """Least-squares (x, y) with d ≈ x p + y q; exact when the inputs are."""
    g11, g12, g22 = _dot(p, p), _dot(p, q), _dot(q, q)
    r1, r2 = _dot(p, d), _dot(q, d)
    det = g11 * g22 - g12 * g12
    if all_exact((g11, g12, g22, r1, r2)):
        det = Fraction(det)
    x = (r1 * g22 - r2 * g12) / det
    y = (g11 * r2 - g12 * r1) / det
    res = max(abs(di - x * pi - y * qi) for di, pi, qi in zip(d, p, q))
    return x, y, res


def _cone_point(s, co):
    return (1 + s, co, 1 - s)


def _cone_form(s, co):
    """Linear form (p, q) with (p², pq, q²) = (1+sinθ, cosθ, 1-sinθ)."""
    if s == -1 or (not is_exact(s) and 1 + s <= 1e-15):
        return 0, exact_sqrt(2)
    return exact_sqrt(1 + s), sign(co) * exact_sqrt(1 - s)


def _cone_form_angle(theta):
    """Same form from the angle: 1 ± sinθ = 2 sin²/cos²(θ/2 + π/4), no cancellation near θ = 3π/2."""
    phi = theta / 2 + math.pi / 4
    return math.sqrt(2) * math.sin(phi), math.sqrt(2) * math.cos(phi)


def _decoupled_finish(c, chain, c1, c8, family, params, certify, zero=None):
    """Rescale (□+1)v1 = c1 v1³, (□+1)v2 = c8 v2³ to coefficients in {0, ±1}."""
    scale = max(abs(float(c1)), abs(float(c8)))
    if zero is None:
        zero = [abs(float(x)) <= REL_TOL * scale for x in (c1, c8)]
    signs = [0 if z else sign(x) for x, z in zip((c1, c8), zero)]
    p, q = (1 if z else exact_sqrt(abs(x)) for x, z in zip((c1, c8), zero))
    chain = chain + [GL2Transform.diag(p, q)]
    (l1, l8), swapped = canonical_decoupled(*signs)
    if swapped:
        chain.append(GL2Transform.swap())
    params["swapped"] = swapped
    return _finish(c, chain, ModelSystemId("Decoupled", (l1, l8)), family, params, certify)


def reduce_z1_plus(c: Coefficients, certify=True) -> ReductionResult:
    _require(c, "Z1_plus")
    a = coeffs_to_matrix(c)
    nu = kernel_direction(a)
    thetas = curve_intersections(nu)
    if len(thetas) != 2 or thetas[1] - thetas[0] < TANGENCY_TOL:
        raise DegenerateTangencyError("the two cone directions nearly coincide")
    t1, t2 = thetas
    s1, c1, s2, c2 = math.sin(t1), math.cos(t1), math.sin(t2), math.cos(t2)
    p1, p2 = _cone_point(s1, c1), _cone_point(s2, c2)
    n = (c1 * (1 - s2) - c2 * (1 - s1), -2 * (s1 - s2), -c1 * (1 + s2) + c2 * (1 + s1))
    d = tuple(float(x) / _dot(n, n) for x in _apply(a, n))
    k1, k2, solve_res = _solve2(p1, p2, d)
    gap = 1 - math.cos(t1 - t2)
    coef1, coef2 = 2 * k1 / 3 * gap, -2 * k2 / 3 * gap
    # k1 k2 = 0 exactly when the image direction of A lies on the cone
    on_cone, _ = ell_vanishes(a)
    zero = [False, False]
    if on_cone:
        zero[int(abs(k2) < abs(k1))] = True
    m1 = GL2Transform(*_cone_form_angle(t1), *_cone_form_angle(t2))
    params = {"theta1": t1, "theta2": t2, "k1": k1, "k2": k2,
              "coef1": coef1, "coef2": coef2, "solve_residual": solve_res}
    return _decoupled_finish(c, [m1], coef1, coef2, "Z1_plus", params, certify, zero)


def z1_zero_parameters(c: Coefficients):
    """θ, σ, k, ℓ for a system whose kernel normal is tangent to the cone."""
    a = coeffs_to_matrix(c)
    nu = kernel_direction(a)
    na, nb, nc = nu.row if nu.exact else nu.nu
    if nu.exact:
        na, nb, nc = Fraction(na), Fraction(nb), Fraction(nc)
    tot = na + nc
    s, co = (nc - na) / tot, -nb / tot
    if not nu.exact:
        h = math.hypot(s, co)
        s, co = s / h, co / h
    theta = math.atan2(float(s), float(co)) % (2 * math.pi)
    n = (1 - s, -2 * co, 1 + s)
    d = tuple(x / _dot(n, n) for x in _apply(a, n))
    p = _cone_point(s, co)
    q = (co, -s, -co)
    k, ell, solve_res = _solve2(p, q, d)
    vanishes, _ = ell_vanishes(a)
    if vanishes:
        ell = 0
    return {"theta": theta, "sigma": sign(tot), "k": k, "ell": ell,
            "sin": s, "cos": co, "solve_residual": solve_res}


def reduce_z1_zero(c: Coefficients, certify=True) -> ReductionResult:
    _require(c, "Z1_zero")
    par = z1_zero_parameters(c)
    s, co, k, ell = par["sin"], par["cos"], par["k"], par["ell"]
    if is_exact(s) and is_exact(co):
        p, q = _cone_form(s, co)
    else:
        p, q = _cone_form_angle(par["theta"])
    at_bottom = p == 0 or abs(p) <= 1e-12 * abs(q)
    if ell != 0:
        m = GL2Transform(p, q, k * p + ell * q, k * q - ell * p)
        r = exact_sqrt(abs(Fraction(ell) if is_exact(ell) else ell) / 3)
        chain = [m, GL2Transform.diag(r, r)]
        model = ModelSystemId("NewA", (sign(ell),))
    else:
        k = Fraction(k) if is_exact(k) else k
        if at_bottom:
            m = GL2Transform(p, q, 3 / (k * q), 0)
        else:
            m = GL2Transform(p, q, 0, -3 / (k * p))
        chain = [m]
        if not c.exact:
            # the model is fixed by diag(α, α³); pick α to even out the row norms
            (a, b), (cc, d) = m.as_array()
            alpha = (math.hypot(a, b) / math.hypot(cc, d)) ** 0.5
            chain.append(GL2Transform.diag(alpha, alpha ** 3))
        model = ModelSystemId("Sunagawa")
    par["theta_is_3pi_2"] = at_bottom
    return _finish(c, chain, model, "Z1_zero", par, certify)


def reduce_z1_minus(c: Coefficients, certify=True) -> ReductionResult:
    _require(c, "Z1_minus")
    nu = kernel_direction(coeffs_to_matrix(c))
    a0, b0, c0 = nu.nu
    if a0 < 0:
        a0, b0, c0 = -a0, -b0, -c0
    m1 = GL2Transform(2 * c0, -b0, 0, math.sqrt(4 * a0 * c0 - b0 * b0))
    lt = [float(x) for x in transform_by_substitution(c, m1)]
    rc = [lt[0], -lt[2] / 3, lt[5] / 3, -lt[7]]
    rs = [-lt[1] / 3, lt[3], lt[4], -lt[6] / 3]
    scale = max(1.0, max(abs(x) for x in lt))
    spread = max(max(rc) - min(rc), max(rs) - min(rs))
    if spread > EXTRACTION_TOL * scale:
        raise InconsistentExtractionError(
            f"transformed coefficients do not fit the rotation pattern (spread {spread:.3g})")
    rcos, rsin = float(np.mean(rc)), float(np.mean(rs))
    r = math.hypot(rcos, rsin)
    theta = math.atan2(rsin, rcos) % (2 * math.pi)
    h = theta / 2
    sr = math.sqrt(r)
    m2 = GL2Transform(sr * math.cos(h), -sr * math.sin(h), sr * math.sin(h), sr * math.cos(h))
    params = {"a0": a0, "b0": b0, "c0": c0, "r": r, "theta": theta, "extraction_spread": spread}
    return _finish(c, [m1, m2], ModelSystemId("New2"), "Z1_minus", params, certify)


def reduce_z2(c: Coefficients, certify=True) -> ReductionResult:
    if not z2_condition(c):
        raise PreconditionError("system does not have the form V(u)·u with V quadratic")
    l1, l2, l3 = c.lam[:3]
    s, _ = z2_discriminant_sign(c)
    disc = z2_discriminant(c)
    scale = max(abs(float(x)) for x in c.lam)
    l1_zero, l3_zero = (x == 0 if c.exact else abs(x) <= REL_TOL * scale for x in (l1, l3))
    params = {"discriminant": disc}
    chain = []
    if s < 0:
        r1 = exact_sqrt(abs(l1))
        m = GL2Transform(r1, sign(l1) * l2 / (2 * r1), 0, exact_sqrt(-disc) / (2 * r1))
        chain = [m]
        model = ModelSystemId("ComplexGauge", (sign(l1),))
    elif s == 0:
        if not l1_zero:
            # the form is l1 (u1 + t u2)²; v2 is whichever of u1, u2 keeps the chain well conditioned
            r1 = exact_sqrt(abs(l1))
            t = (Fraction(l2) if is_exact(l2) else l2) / (2 * l1)
            if abs(t) >= 1:
                chain = [GL2Transform(r1, r1 * t, 1, 0)]
            else:
                chain = [GL2Transform(r1, r1 * t, 0, 1)]
            model = ModelSystemId("NewB", (sign(l1),))
        else:
            chain = [GL2Transform(0, exact_sqrt(abs(l3)), 1, 0)]
            model = ModelSystemId("NewB", (sign(l3),))
    else:
        if not l1_zero:
            r1 = exact_sqrt(abs(l1))
            m = GL2Transform(r1, sign(l1) * l2 / (2 * r1), 0, exact_sqrt(disc) / (2 * r1))
            chain = [m] if l1 > 0 else [m, GL2Transform.swap()]
        else:
            l2f = Fraction(l2) if is_exact(l2) else l2
            chain = [GL2Transform(1, (4 * l3 + l2 * l2) / (4 * l2f), 1, (4 * l3 - l2 * l2) / (4 * l2f))]
        model = ModelSystemId("New3")
    return _finish(c, chain, model, "Z2", params, certify)


_REDUCERS = {
    "Z1_plus": reduce_z1_plus,
    "Z1_zero": reduce_z1_zero,
    "Z1_minus": reduce_z1_minus,
    "Z2": reduce_z2,
}


def _polish(c, res, family):
    """Least-squares correction of a float reduction: the closed-form steps lose
    accuracy on badly conditioned inputs, and a few Gauss-Newton steps on the
    four entries of the total recover it."""
    target = model_catalog(res.model).as_array()
    lam = Coefficients(tuple(float(x) for x in c.lam))

    def misfit(m):
        try:
            return transform_by_substitution(lam, GL2Transform(*m)).as_array() - target
        except InvalidTransformError:
            return np.full(8, 1e300)

    start = np.array(res.total.as_array(), dtype=float).ravel()
    fit = least_squares(misfit, start, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if np.max(np.abs(fit.fun)) >= float(res.residual):
        return res
    total = GL2Transform(*fit.x)
    chain = res.chain + [total @ res.total.inverse()]
    return _finish(c, chain, res.model, family, res.params, certify=False)


def reduce(c: Coefficients) -> ReductionResult:
    family = classify_family(c)[0]
    if family not in _REDUCERS:
        raise UnsupportedClassError(f"no reduction is available for family {family}")
    res = _REDUCERS[family](c, certify=False)
    if not res.exact and res.residual > 1e-13 * max(1.0, c.norm()):
        res = _polish(c, res, family)
    return _finish(c, res.chain, res.model, family, res.params)
