"""Cubic Klein-Gordon systems as coefficient vectors.

A system

    (□+1)u1 = λ1 u1³ + λ2 u1²u2 + λ3 u1u2² + λ4 u2³
    (□+1)u2 = λ5 u1³ + λ6 u1²u2 + λ7 u1u2² + λ8 u2³

is stored as the 8-tuple (λ1, ..., λ8). The change of unknowns v = M u acts on
it by direct polynomial substitution, which is the reference every matrix
formula in the package is tested against.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError, InvalidTransformError
from .scalars import all_exact, to_scalar

MONOMIALS = ("u1^3", "u1^2 u2", "u1 u2^2", "u2^3")


@dataclass(frozen=True)
class Coefficients:
    lam: tuple

    def __post_init__(self):
        vals = tuple(to_scalar(x) for x in self.lam)
        if len(vals) != 8:
            raise InvalidInputError(f"expected 8 coefficients, got {len(vals)}")
        object.__setattr__(self, "lam", vals)

    def __iter__(self):
        return iter(self.lam)

    def __getitem__(self, i):
        return self.lam[i]

    def __len__(self):
        return 8

    @property
    def exact(self):
        return all_exact(self.lam)

    @property
    def first(self):
        return self.lam[:4]

    @property
    def second(self):
        return self.lam[4:]

    def as_array(self):
        return np.array([float(x) for x in self.lam])

    def norm(self):
        return math.sqrt(sum(float(x) ** 2 for x in self.lam))

    def is_zero(self):
        return all(x == 0 for x in self.lam)

    def to_json(self):
        return {"lambda": list(self.lam)}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, dict):
            if "lambda" not in obj:
                raise InvalidInputError('coefficient JSON needs a "lambda" key')
            obj = obj["lambda"]
        if not isinstance(obj, (list, tuple)):
            raise InvalidInputError("coefficients must be a list of 8 numbers")
        return cls(tuple(obj))

    def __repr__(self):
        return f"Coefficients({', '.join(str(x) for x in self.lam)})"


def _det_floor(entries):
    fro2 = sum(float(x) ** 2 for x in entries)
    return 1e-12 * max(1.0, fro2)


@dataclass(frozen=True)
class GL2Transform:
    """Invertible 2×2 matrix M = [[a, b], [c, d]] acting as v = M u."""

    a: object
    b: object
    c: object
    d: object

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, to_scalar(getattr(self, name)))
        det = self.det
        if self.exact:
            if det == 0:
                raise InvalidTransformError("singular transform (det = 0)")
        elif abs(det) <= _det_floor(self.entries):
            raise InvalidTransformError(f"singular transform (det = {float(det):.3g})")

    @property
    def entries(self):
        return (self.a, self.b, self.c, self.d)

    @property
    def exact(self):
        return all_exact(self.entries)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    def inverse(self):
        det = self.det
        if self.exact:
            det = Fraction(det)
        return GL2Transform(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def __matmul__(self, other):
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return GL2Transform(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def as_array(self):
        return np.array([[float(self.a), float(self.b)], [float(self.c), float(self.d)]])

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def swap(cls):
        return cls(0, 1, 1, 0)

    @classmethod
    def diag(cls, p, q):
        return cls(p, 0, 0, q)

    @classmethod
    def from_rows(cls, rows):
        try:
            (a, b), (c, d) = rows
        except (TypeError, ValueError) as exc:
            raise InvalidInputError("transform must be a 2x2 nested list") from exc
        return cls(a, b, c, d)

    def to_json(self):
        return {"m": [list(r) for r in self.rows]}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, dict):
            if "m" not in obj:
                raise InvalidInputError('transform JSON needs an "m" key')
            obj = obj["m"]
        return cls.from_rows(obj)


def _polymul(f, g):
    out = [0] * (len(f) + len(g) - 1)
    for i, x in enumerate(f):
        for j, y in enumerate(g):
            out[i + j] += x * y
    return out


def _linpow(p, q, n):
    """Coefficients of (p v1 + q v2)^n in the basis v1^n, v1^(n-1) v2, ..., v2^n."""
    out = [1]
    for _ in range(n):
        out = _polymul(out, [p, q])
    return out


def transform_by_substitution(coeffs: Coefficients, m: GL2Transform) -> Coefficients:
    """Coefficients of the system solved by v = M u.

    Writes u = M⁻¹ v, expands each cubic monomial in v and recombines the two
    equations with the rows of M.
    """
    inv = m.inverse()
    (p11, p12), (p21, p22) = inv.rows
    # u1^(3-k) u2^k expressed in v-monomials
    basis = [_polymul(_linpow(p11, p12, 3 - k), _linpow(p21, p22, k)) for k in range(4)]
    rhs = []
    for j in range(2):
        lam = coeffs.lam[4 * j: 4 * j + 4]
        rhs.append([sum(lam[k] * basis[k][i] for k in range(4)) for i in range(4)])
    out = []
    for row in m.rows:
        out.extend(row[0] * rhs[0][i] + row[1] * rhs[1][i] for i in range(4))
    return Coefficients(tuple(out))


def nonlinearity(coeffs: Coefficients, u1, u2):
    """Evaluate (F1, F2) at (u1, u2); works on scalars and numpy arrays."""
    lam = [float(x) for x in coeffs.lam]
    # plain products: array ** 3 goes through the slow generic pow
    p11, p12, p22 = u1 * u1, u1 * u2, u2 * u2
    f1 = u1 * (lam[0] * p11 + lam[1] * p12 + lam[2] * p22) + lam[3] * u2 * p22
    f2 = u1 * (lam[4] * p11 + lam[5] * p12 + lam[6] * p22) + lam[7] * u2 * p22
    return f1, f2


# --- model systems -----------------------------------------------------------

KINDS = ("Decoupled", "ComplexGauge", "Sunagawa", "NewA", "NewB", "New2", "New3")
_SIGNED = ("ComplexGauge", "NewA", "NewB")


@dataclass(frozen=True)
class ModelSystemId:
    kind: str
    params: tuple = ()

    def __post_init__(self):
        params = tuple(int(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown model system {self.kind!r}")
        if self.kind == "Decoupled":
            ok = len(params) == 2 and all(p in (-1, 0, 1) for p in params) and params != (0, 0)
        elif self.kind in _SIGNED:
            ok = len(params) == 1 and params[0] in (-1, 1)
        else:
            ok = params == ()
        if not ok:
            raise InvalidInputError(f"bad parameters {params} for {self.kind}")

    def __str__(self):
        if not self.params:
            return self.kind
        return f"{self.kind}({','.join(str(p) for p in self.params)})"

    @classmethod
    def parse(cls, text):
        m = re.fullmatch(r"\s*(\w+)\s*(?:\(([^)]*)\))?\s*", text)
        if not m:
            raise InvalidInputError(f"cannot parse model id {text!r}")
        kind, args = m.groups()
        params = ()
        if args is not None and args.strip():
            try:
                params = tuple(int(a) for a in args.split(","))
            except ValueError as exc:
                raise InvalidInputError(f"bad model parameters in {text!r}") from exc
        return cls(kind, params)


def model_catalog(model: ModelSystemId) -> Coefficients:
    p = model.params
    if model.kind == "Decoupled":
        lam = (p[0], 0, 0, 0, 0, 0, 0, p[1])
    elif model.kind == "ComplexGauge":
        lam = (p[0], 0, p[0], 0, 0, p[0], 0, p[0])
    elif model.kind == "Sunagawa":
        lam = (0, 0, 0, 0, 1, 0, 0, 0)
    elif model.kind == "NewA":
        lam = (p[0], 0, 0, 0, 0, 3 * p[0], 0, 0)
    elif model.kind == "NewB":
        lam = (p[0], 0, 0, 0, 0, p[0], 0, 0)
    elif model.kind == "New2":
        lam = (1, 0, -3, 0, 0, 3, 0, -1)
    else:
        lam = (1, 0, -1, 0, 0, 1, 0, -1)
    return Coefficients(lam)


# rosters of signed representatives, in display order
Z1_ROSTER = tuple(ModelSystemId.parse(s) for s in (
    "Decoupled(1,1)", "Decoupled(-1,-1)", "Decoupled(1,-1)", "Decoupled(1,0)",
    "Decoupled(-1,0)", "NewA(1)", "NewA(-1)", "Sunagawa", "New2",
))
Z2_ROSTER = tuple(ModelSystemId.parse(s) for s in (
    "ComplexGauge(1)", "ComplexGauge(-1)", "NewB(1)", "NewB(-1)", "New3",
))
ALL_MODELS = Z1_ROSTER + Z2_ROSTER

# the seven named systems, one representative each
NAMED_MODELS = tuple(ModelSystemId.parse(s) for s in (
    "Decoupled(1,1)", "ComplexGauge(1)", "Sunagawa", "NewA(1)", "NewB(1)", "New2", "New3",
))

# qualitative behaviour of the second component at large time
GROUPS = {
    "Decoupled": 1, "ComplexGauge": 1,
    "Sunagawa": 2, "NewA": 2, "NewB": 2,
    "New2": 3, "New3": 3,
}


def canonical_decoupled(l1, l8):
    """Representative of Decoupled(l1, l8) up to swapping the unknowns, and whether a swap is needed."""
    if l1 == 0 or (l1, l8) == (-1, 1):
        return (l8, l1), True
    return (l1, l8), False


def resolve_system(text_or_obj) -> Coefficients:
    """Accept a model id string, a JSON-ish list/dict of coefficients or a Coefficients."""
    if isinstance(text_or_obj, Coefficients):
        return text_or_obj
    if isinstance(text_or_obj, str):
        return model_catalog(ModelSystemId.parse(text_or_obj))
    return Coefficients.from_json(text_or_obj)

