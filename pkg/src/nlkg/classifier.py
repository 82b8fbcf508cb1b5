"""Equivalence-class label of a cubic system.

Rank of the structure matrix splits the space first. In rank 1 the sign of
b² - 4ac for the kernel normal ν = (a, b, c) decides how many times the plane
ν^⊥ meets the cone b² = ac, which separates the three rank-one families. In
rank 2 only the systems of the form (λ1u1² + λ2u1u2 + λ3u2²)(u1, u2) are
handled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .cubic_system import Z1_ROSTER, Z2_ROSTER, Coefficients, ModelSystemId
from .errors import NotRankOneError
from .matrix_rep import StructureMatrix, coeffs_to_matrix, rank_margin, rank_of
from .scalars import ABS_TOL, REL_TOL, all_exact, close, sign

FAMILIES = ("Z1_plus", "Z1_zero", "Z1_minus", "Z2", "Rank0", "Rank2_nonZ2", "Rank3")
REDUCIBLE = ("Z1_plus", "Z1_zero", "Z1_minus", "Z2")
DISC_TOL = 1e-9
# a decisive quantity within this factor of its tolerance marks the label as borderline
BORDERLINE_FACTOR = 10.0


@dataclass(frozen=True)
class KernelDirection:
    nu: tuple
    sign_convention: str = "first_nonzero_positive"
    # unnormalized row of A parallel to ν; exact when A is
    row: tuple = ()

    @property
    def exact(self):
        return bool(self.row) and all_exact(self.row)


@dataclass
class ClassLabel:
    family: str
    model: Optional[ModelSystemId] = None
    roster_index: Optional[int] = None
    borderline: bool = False
    rank: int = 0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family}")
        if (self.model is not None) != (self.family in REDUCIBLE):
            raise ValueError("model must be present exactly for reducible families")

    def to_json(self):
        lam_model = None
        if self.model is not None and self.model.params:
            p = self.model.params
            lam_model = p[0] if len(p) == 1 else list(p)
        return {
            "family": self.family,
            "model": None if self.model is None else self.model.kind,
            "model_id": None if self.model is None else str(self.model),
            "lambda_model": lam_model,
            "roster_index": self.roster_index,
            "borderline": self.borderline,
            "rank": self.rank,
        }


def kernel_direction(a: StructureMatrix) -> KernelDirection:
    """Unit normal ν of ker A for a rank-one A = d νᵀ."""
    if rank_of(a) != 1:
        raise NotRankOneError("kernel direction needs a rank-one matrix")
    rows = a.rows
    if a.exact:
        row = max(rows, key=lambda r: sum(Fraction(x) ** 2 for x in r))
        lead = next(x for x in row if x != 0)
    else:
        row = max(rows, key=lambda r: sum(float(x) ** 2 for x in r))
        n = math.sqrt(sum(float(x) ** 2 for x in row))
        lead = next(x for x in row if abs(x) > ABS_TOL * max(1.0, n))
    s = sign(lead)
    row = tuple(s * x for x in row)
    n = math.sqrt(sum(float(x) ** 2 for x in row))
    return KernelDirection(tuple(float(x) / n for x in row), row=row)


def discriminant(nu: KernelDirection):
    """b² - 4ac of the unit normal (computed from the exact row when available)."""
    if nu.exact:
        a, b, c = (Fraction(x) for x in nu.row)
        return (b * b - 4 * a * c) / (a * a + b * b + c * c)
    a, b, c = nu.nu
    return b * b - 4 * a * c


def discriminant_sign(nu: KernelDirection) -> int:
    d = discriminant(nu)
    if nu.exact:
        return sign(d)
    return 0 if abs(d) <= DISC_TOL else sign(d)


def curve_intersections(nu: KernelDirection):
    """Angles θ in [0, 2π) with ν·(1+sinθ, cosθ, 1-sinθ) = 0, ascending."""
    a, b, c = nu.nu
    count = {1: 2, 0: 1, -1: 0}[discriminant_sign(nu)]
    if count == 0:
        return []
    # (a-c) sinθ + b cosθ = R sin(θ+φ)
    r = math.hypot(a - c, b)
    phi = math.atan2(b, a - c)
    x = -(a + c) / r
    if count == 1:
        roots = [math.copysign(math.pi / 2, x) - phi]
    else:
        x = min(1.0, max(-1.0, x))
        base = math.asin(x)
        roots = [base - phi, math.pi - base - phi]
    return sorted(t % (2 * math.pi) for t in roots)


def z2_condition(c: Coefficients) -> bool:
    l1, l2, l3, l4, l5, l6, l7, l8 = c.lam
    scale = max(abs(float(x)) for x in c.lam)
    if c.exact:
        return (l1, l2, l3) != (0, 0, 0) and l4 == 0 and l5 == 0 and (l6, l7, l8) == (l1, l2, l3)
    tol = max(ABS_TOL, REL_TOL * scale)
    return (max(abs(l1), abs(l2), abs(l3)) > tol
            and abs(l4) <= tol and abs(l5) <= tol
            and close(l6, l1, scale) and close(l7, l2, scale) and close(l8, l3, scale))


def ell_vanishes(a: StructureMatrix):
    """Whether the image direction of a rank-one A lies on the cone b² = ac.

    Returns (vanishes, margin); margin is None on the exact path.
    """
    cols = [tuple(r[j] for r in a.rows) for j in range(3)]
    if a.exact:
        col = max(cols, key=lambda v: sum(Fraction(x) ** 2 for x in v))
        d1, d2, d3 = (Fraction(x) for x in col)
        return d2 * d2 == d1 * d3, None
    col = max(cols, key=lambda v: sum(float(x) ** 2 for x in v))
    n2 = sum(float(x) ** 2 for x in col)
    d1, d2, d3 = col
    q = abs(d2 * d2 - d1 * d3) / n2
    return q <= DISC_TOL, _margin(q, DISC_TOL)


def z2_discriminant(c: Coefficients):
    l1, l2, l3 = c.lam[:3]
    return l2 * l2 - 4 * l1 * l3


def z2_discriminant_sign(c: Coefficients):
    d = z2_discriminant(c)
    if c.exact:
        return sign(d), None
    l1, l2, l3 = (float(x) for x in c.lam[:3])
    scale = l1 * l1 + l2 * l2 + l3 * l3
    q = d / scale
    return (0 if abs(q) <= DISC_TOL else sign(q)), _margin(abs(q), DISC_TOL)


def _margin(q, tol):
    if q == 0:
        return math.inf
    return max(q / tol, tol / q)


def _near(margin):
    return margin is not None and margin < BORDERLINE_FACTOR


def classify_family(c: Coefficients):
    """Family, rank and borderline flag, without constructing the reduction."""
    a = coeffs_to_matrix(c)
    r = rank_of(a)
    borderline = _near(rank_margin(a))
    if r == 0:
        return "Rank0", r, borderline
    if r == 3:
        return "Rank3", r, borderline
    if r == 2:
        return ("Z2" if z2_condition(c) else "Rank2_nonZ2"), r, borderline
    nu = kernel_direction(a)
    s = discriminant_sign(nu)
    if not nu.exact:
        borderline |= _near(_margin(abs(discriminant(nu)), DISC_TOL))
    return {1: "Z1_plus", 0: "Z1_zero", -1: "Z1_minus"}[s], r, borderline


def roster_index(model: ModelSystemId):
    for roster in (Z1_ROSTER, Z2_ROSTER):
        if model in roster:
            return roster.index(model) + 1
    return None


def classify(c: Coefficients) -> ClassLabel:
    family, r, borderline = classify_family(c)
    details = {}
    model = None
    if family == "Z1_minus":
        model = ModelSystemId("New2")
    elif family == "Z1_zero":
        vanishes, margin = ell_vanishes(coeffs_to_matrix(c))
        borderline |= _near(margin)
        if vanishes:
            model = ModelSystemId("Sunagawa")
        else:
            from .reducer import z1_zero_parameters  # reducer depends on this module

            params = z1_zero_parameters(c)
            model = ModelSystemId("NewA", (sign(params["ell"]),))
            details["ell"] = params["ell"]
    elif family == "Z1_plus":
        from .reducer import reduce_z1_plus

        model = reduce_z1_plus(c, certify=False).model
    elif family == "Z2":
        s, margin = z2_discriminant_sign(c)
        borderline |= _near(margin)
        l1, l3 = c.lam[0], c.lam[2]
        if s < 0:
            model = ModelSystemId("ComplexGauge", (sign(l1),))
        elif s == 0:
            lead = l1 if not close(l1, 0, max(abs(float(x)) for x in c.lam)) else l3
            model = ModelSystemId("NewB", (sign(lead),))
        else:
            model = ModelSystemId("New3")
    return ClassLabel(family, model, roster_index(model) if model else None,
                      bool(borderline), r, details)
