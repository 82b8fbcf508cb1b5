"""Structure matrix of a cubic system and the induced 3×3 action of GL2.

The coefficient vector corresponds bijectively to a traceless 3×3 matrix A, and
a change of unknowns by M acts on it by A' = det(M)⁻¹ D(M) A D(M)⁻¹.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cubic_system import Coefficients, GL2Transform
from .errors import InvalidInputError, NotInZError
from .scalars import ABS_TOL, REL_TOL, all_exact, to_scalar


def _rows3(rows):
    try:
        out = tuple(tuple(to_scalar(x) for x in r) for r in rows)
    except TypeError as exc:
        raise InvalidInputError("matrix must be a 3x3 nested list") from exc
    if len(out) != 3 or any(len(r) != 3 for r in out):
        raise InvalidInputError("matrix must be 3x3")
    return out


def matmul3(x, y):
    return tuple(tuple(sum(x[i][k] * y[k][j] for k in range(3)) for j in range(3)) for i in range(3))


def det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


@dataclass(frozen=True)
class StructureMatrix:
    rows: tuple

    def __post_init__(self):
        rows = _rows3(self.rows)
        object.__setattr__(self, "rows", rows)
        tr = rows[0][0] + rows[1][1] + rows[2][2]
        if self.exact:
            bad = tr != 0
        else:
            scale = max(abs(float(x)) for r in rows for x in r)
            bad = abs(tr) > max(ABS_TOL, 1e-12 * scale)
        if bad:
            raise NotInZError(f"matrix is not traceless (trace = {float(tr):.6g})")

    @property
    def exact(self):
        return all_exact(x for r in self.rows for x in r)

    def as_array(self):
        return np.array([[float(x) for x in r] for r in self.rows])

    def to_json(self):
        return {"A": [list(r) for r in self.rows]}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, dict):
            if "A" not in obj:
                raise InvalidInputError('matrix JSON needs an "A" key')
            obj = obj["A"]
        return cls(obj)


@dataclass(frozen=True)
class D3Transform:
    rows: tuple
    source: GL2Transform

    def as_array(self):
        return np.array([[float(x) for x in r] for r in self.rows])


def coeffs_to_matrix(c: Coefficients) -> StructureMatrix:
    l1, l2, l3, l4, l5, l6, l7, l8 = c.lam
    return StructureMatrix((
        (l2, l6 - 3 * l1, -3 * l5),
        (l3, l7 - l2, -l6),
        (3 * l4, 3 * l8 - l3, -l7),
    ))


def matrix_to_coeffs(a: StructureMatrix) -> Coefficients:
    (a11, a12, a13), (a21, a22, a23), (a31, a32, a33) = a.rows
    l2, l3 = a11, a21
    l6 = -a23
    l7 = -a33
    l5 = -a13 / 3
    l4 = a31 / 3
    l1 = (l6 - a12) / 3
    l8 = (a32 + l3) / 3
    # a22 = l7 - l2 is implied by the trace condition
    return Coefficients((l1, l2, l3, l4, l5, l6, l7, l8))


def _over_det(m: GL2Transform):
    det = m.det
    return 1 / Fraction(det) if m.exact else 1 / det


def d_of_m(m: GL2Transform) -> D3Transform:
    a, b, c, d = m.entries
    s = _over_det(m)
    rows = (
        (d * d * s, -2 * d * c * s, c * c * s),
        (-b * d * s, (a * d + b * c) * s, -a * c * s),
        (b * b * s, -2 * a * b * s, a * a * s),
    )
    return D3Transform(rows, m)


def d_inverse(m: GL2Transform) -> D3Transform:
    a, b, c, d = m.entries
    s = _over_det(m)
    rows = (
        (a * a * s, 2 * a * c * s, c * c * s),
        (a * b * s, (a * d + b * c) * s, c * d * s),
        (b * b * s, 2 * b * d * s, d * d * s),
    )
    return D3Transform(rows, m)


def conjugate(a: StructureMatrix, m: GL2Transform) -> StructureMatrix:
    """Structure matrix of the system after v = M u."""
    s = _over_det(m)
    prod = matmul3(matmul3(d_of_m(m).rows, a.rows), d_inverse(m).rows)
    rows = [[x * s for x in r] for r in prod]
    if not all_exact(x for r in rows for x in r):
        # the formula is traceless; remove the rounding residue
        tr = (rows[0][0] + rows[1][1] + rows[2][2]) / 3
        for i in range(3):
            rows[i][i] -= tr
    return StructureMatrix(tuple(tuple(r) for r in rows))


# --- rank and kernel ---------------------------------------------------------

def _rref(rows):
    """Reduced row echelon form over the rationals. Returns (matrix, pivot columns)."""
    m = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    r = 0
    for col in range(3):
        piv = next((i for i in range(r, 3) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][col]
        m[r] = [x / p for x in m[r]]
        for i in range(3):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == 3:
            break
    return m, pivots


def singular_values(a: StructureMatrix):
    return np.linalg.svd(a.as_array(), compute_uv=False)


def rank_of(a: StructureMatrix) -> int:
    if a.exact:
        return len(_rref(a.rows)[1])
    sv = singular_values(a)
    if sv[0] < ABS_TOL:
        return 0
    return int(np.sum(sv > REL_TOL * sv[0]))


def rank_margin(a: StructureMatrix):
    """Ratio of the decisive singular value to its threshold, or None on the exact path.

    The decisive value is the smallest singular value counted as nonzero or the
    largest one counted as zero, whichever is nearer the cut.
    """
    if a.exact:
        return None
    sv = singular_values(a)
    if sv[0] < ABS_TOL:
        return sv[0] / ABS_TOL
    rel = sv / sv[0]
    cut = REL_TOL
    ratios = [max(r / cut, cut / r) if r > 0 else np.inf for r in rel[1:]]
    return min(ratios) if ratios else np.inf


def null_space(a: StructureMatrix):
    """Basis of ker A: Fractions on the exact path, orthonormal floats otherwise."""
    if a.exact:
        m, pivots = _rref(a.rows)
        free = [j for j in range(3) if j not in pivots]
        basis = []
        for f in free:
            v = [Fraction(0)] * 3
            v[f] = Fraction(1)
            for i, p in enumerate(pivots):
                v[p] = -m[i][f]
            basis.append(tuple(v))
        return basis
    r = rank_of(a)
    _, _, vt = np.linalg.svd(a.as_array())
    return [tuple(float(x) for x in vt[i]) for i in range(r, 3)]
