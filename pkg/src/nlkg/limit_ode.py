"""Resonant limit ODE for the profiles (α1, α2), its conserved quantities and closed forms.

    dα_j/ds = -(i/2) [3λ_{4j-3}|α1|²α1 + λ_{4j-2}(2|α1|²α2 + α1²ᾱ2)
                      + λ_{4j-1}(2α1|α2|² + ᾱ1α2²) + 3λ_{4j}|α2|²α2]

All stepping code is vectorized: states are arrays of shape (2, ...) so that a
batch of initial data (and optionally a batch of coefficient vectors) can be
advanced together.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cubic_system import Coefficients
from .errors import BlowUpError, InvalidInputError
from .matrix_rep import coeffs_to_matrix, null_space

BLOWUP_MODULUS = 1e12
DEFAULT_KAPPA = 701 / 200

# Largest s for which RK4 at dt = 1e-3 keeps quadratic invariants of unit data
# within 1e-8 (measured with scripts/ode_horizon.py). The New2 and New3 systems
# have exponentially growing solutions, so this is finite for them.
RECOMMENDED_S_MAX = {
    "Decoupled": math.inf, "ComplexGauge": math.inf, "Sunagawa": math.inf,
    "NewA": math.inf, "NewB": math.inf, "New2": 4.0, "New3": 10.0,
}


@dataclass(frozen=True)
class OdeState:
    alpha1: complex
    alpha2: complex
    s: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.alpha1, self.alpha2, self.s])):
            raise InvalidInputError("state must be finite")

    def as_array(self):
        return np.array([self.alpha1, self.alpha2], dtype=complex)


def _lam(c):
    if isinstance(c, Coefficients):
        return c.as_array()
    return np.asarray(c, dtype=float)


def _bracket(l, a1, a2, j):
    """Resonant cubic bracket of equation j (0 or 1); l may broadcast against a1, a2."""
    l1, l2, l3, l4 = l[4 * j], l[4 * j + 1], l[4 * j + 2], l[4 * j + 3]
    m1, m2 = np.abs(a1) ** 2, np.abs(a2) ** 2
    return (3 * l1 * m1 * a1
            + l2 * (2 * m1 * a2 + a1 * a1 * np.conj(a2))
            + l3 * (2 * a1 * m2 + np.conj(a1) * a2 * a2)
            + 3 * l4 * m2 * a2)


def rhs_array(alpha, lam):
    """dα/ds for alpha of shape (2, ...); lam of shape (8,) or (8, ...)."""
    a1, a2 = alpha[0], alpha[1]
    return -0.5j * np.stack([_bracket(lam, a1, a2, 0), _bracket(lam, a1, a2, 1)])


def ode_rhs(state: OdeState, c: Coefficients):
    d = rhs_array(state.as_array(), _lam(c))
    return complex(d[0]), complex(d[1])


@dataclass
class Trajectory:
    s: np.ndarray
    alpha: np.ndarray  # shape (n_steps + 1, 2, ...)

    def state(self, i):
        return OdeState(complex(self.alpha[i, 0]), complex(self.alpha[i, 1]), float(self.s[i]))


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _grid(t0, t_end, dt):
    if dt <= 0:
        raise InvalidInputError("dt must be positive")
    if t_end < t0:
        raise InvalidInputError("end point must not precede the start")
    n = int(math.ceil((t_end - t0) / dt - 1e-9))
    return t0 + np.minimum(np.arange(n + 1) * dt, t_end - t0)


def integrate_field(f, y0, t0, t_end, dt, record=True):
    """Fixed-step RK4 for y' = f(t, y) with blow-up detection.

    Returns (times, values); values holds every step when record is set, else
    only the endpoints.
    """
    ts = _grid(t0, t_end, dt)
    y = np.array(y0, dtype=complex)
    out = [y] if record else None
    for i in range(len(ts) - 1):
        y_new = rk4_step(f, ts[i], y, ts[i + 1] - ts[i])
        if not np.all(np.isfinite(y_new)) or np.max(np.abs(y_new)) > BLOWUP_MODULUS:
            partial = (ts[: i + 1], np.array(out)) if record else None
            raise BlowUpError(f"solution left the finite range after t = {ts[i]:.6g}",
                              at=float(ts[i]), partial=partial)
        y = y_new
        if record:
            out.append(y)
    if record:
        return ts, np.array(out)
    return ts[[0, -1]], np.array([np.asarray(y0, dtype=complex), y])


def integrate(c, initial, s_end, dt, record=True) -> Trajectory:
    """RK4 trajectory of the limit ODE from s = initial.s to s_end.

    `initial` may be an OdeState or an array of shape (2, ...) for a batch; `c`
    may be Coefficients or an array of shape (8,) / (8, ...).
    """
    lam = _lam(c)
    if isinstance(initial, OdeState):
        y0, s0 = initial.as_array(), initial.s
    else:
        y0, s0 = np.asarray(initial, dtype=complex), 0.0
    s, ys = integrate_field(lambda _, y: rhs_array(y, lam), y0, s0, s_end, dt, record)
    return Trajectory(s, ys)


# --- conserved quantities ---------------------------------------------------

@dataclass(frozen=True)
class ConservedQuantity:
    kind: str  # "quadratic" or "imag_pairing"
    coeffs: tuple = ()

    def value_at(self, alpha):
        """Value at a state; alpha is an OdeState or an array with leading axis of length 2."""
        if isinstance(alpha, OdeState):
            alpha = alpha.as_array()
        a1, a2 = np.asarray(alpha)[0], np.asarray(alpha)[1]
        pair = np.conj(a1) * a2
        if self.kind == "imag_pairing":
            return 2 * pair.imag
        a, b, c = (float(x) for x in self.coeffs)
        return a * np.abs(a1) ** 2 + 2 * b * pair.real + c * np.abs(a2) ** 2

    def label(self):
        if self.kind == "imag_pairing":
            return "2Im(conj(a1)a2)"
        a, b, c = (format(float(x), ".6g") for x in self.coeffs)
        return f"Q[{a},{b},{c}]"


def imag_pairing_conserved(c: Coefficients) -> bool:
    l1, l2, l3, l4, l5, l6, l7, l8 = c.lam
    if c.exact:
        return l4 == 0 and l5 == 0 and (l6, l7, l8) == (l1, l2, l3)
    scale = max(1.0, max(abs(float(x)) for x in c.lam))
    tol = 1e-9 * scale
    return max(abs(l4), abs(l5), abs(l6 - l1), abs(l7 - l2), abs(l8 - l3)) <= tol


def conserved_quantities(c: Coefficients):
    out = [ConservedQuantity("quadratic", tuple(v)) for v in null_space(coeffs_to_matrix(c))]
    if imag_pairing_conserved(c):
        out.append(ConservedQuantity("imag_pairing"))
    return out


def quadratic_derivative(coeffs, alpha, c: Coefficients):
    """d/ds of a|α1|² + 2b Re(ᾱ1α2) + c|α2|² along the flow, from the chain rule."""
    a, b, cc = (float(x) for x in coeffs)
    alpha = np.asarray(alpha, dtype=complex)
    d = rhs_array(alpha, _lam(c))
    a1, a2 = alpha
    return (2 * a * (np.conj(a1) * d[0]).real
            + 2 * b * (np.conj(d[0]) * a2 + np.conj(a1) * d[1]).real
            + 2 * cc * (np.conj(a2) * d[1]).real)


# --- closed forms -------------------------------------------------------------

def _as_alpha(initial):
    if isinstance(initial, OdeState):
        return initial.alpha1, initial.alpha2
    a = np.asarray(initial, dtype=complex)
    return a[0], a[1]


def closed_form_new1(initial, s):
    """Exact solution of the limit ODE of the New2 system, (1,0,-3,0,0,3,0,-1).

    `s` is measured from the time of `initial`; array s broadcasts. Returns an
    array with leading axis (α1, α2).
    """
    a1, a2 = _as_alpha(initial)
    cp, cm = (a1 + 1j * a2) / 2, (a1 - 1j * a2) / 2
    s = np.asarray(s, dtype=float)
    ep = np.exp(-6j * cp * np.conj(cm) * s)
    em = np.exp(-6j * np.conj(cp) * cm * s)
    return np.stack([cp * ep + cm * em, -1j * cp * ep + 1j * cm * em])


def closed_form_new2(initial, s):
    """Exact solution of the limit ODE of the New3 system, (1,0,-1,0,0,1,0,-1)."""
    a1, a2 = _as_alpha(initial)
    cp, cm = (a1 + a2) / 2, (a1 - a2) / 2
    s = np.asarray(s, dtype=float)
    x = cp * np.conj(cm)
    ep = np.exp(-2j * (x + 2 * np.conj(x)) * s)
    em = np.exp(-2j * (2 * x + np.conj(x)) * s)
    return np.stack([cp * ep + cm * em, cp * ep - cm * em])


def pairing_invariants(alpha, system="New2"):
    """(β1, β2) of a state: β1 = |α1|² - |α2|², β2 = 2Re(ᾱ1α2) for New2, 2Im(ᾱ1α2) for New3."""
    a1, a2 = _as_alpha(alpha)
    b1 = np.abs(a1) ** 2 - np.abs(a2) ** 2
    pair = 2 * np.conj(a1) * a2
    return b1, (pair.real if system == "New2" else pair.imag)


# --- non-resonant terms -------------------------------------------------------

def rhs_with_nonresonant_array(tau, alpha, z, lam, kappa=DEFAULT_KAPPA):
    """dα/dτ including the oscillating e^{2iτ}, e^{-2iτ}, e^{-4iτ} terms."""
    a1, a2 = alpha[0], alpha[1]
    w = 1.0 / np.cosh(kappa * z) ** 2
    c1, c2 = np.conj(a1), np.conj(a2)
    out = []
    for j in range(2):
        l1, l2, l3, l4 = lam[4 * j: 4 * j + 4]
        res = _bracket(lam, a1, a2, j)
        plus2 = l1 * a1**3 + l2 * a1**2 * a2 + l3 * a1 * a2**2 + l4 * a2**3
        minus2 = (3 * l1 * np.abs(a1) ** 2 * c1 + l2 * c1**2 * a2
                  + l3 * a1 * c2**2 + 3 * l4 * np.abs(a2) ** 2 * c2)
        minus4 = l1 * c1**3 + l2 * c1**2 * c2 + l3 * c1 * c2**2 + l4 * c2**3
        nr = w * (plus2 * np.exp(2j * tau) + minus2 * np.exp(-2j * tau) + minus4 * np.exp(-4j * tau))
        out.append(-0.5j * (w * res + nr) / tau)
    return np.stack(out)


def rhs_with_nonresonant(tau, state: OdeState, z, c: Coefficients, kappa=DEFAULT_KAPPA):
    d = rhs_with_nonresonant_array(tau, state.as_array(), z, _lam(c), kappa)
    return complex(d[0]), complex(d[1])


def s_of_tau(tau, z, tau0=1.0, kappa=DEFAULT_KAPPA):
    """Slow variable s = (cosh κz)⁻² log(τ/τ0)."""
    return np.log(np.asarray(tau) / tau0) / np.cosh(kappa * z) ** 2


def integrate_nonresonant(c, initial, tau0, tau_end, dt, z=0.0, kappa=DEFAULT_KAPPA, record=True):
    """RK4 in τ of the full oscillatory equation; returns (tau, alpha)."""
    lam = _lam(c)
    y0 = initial.as_array() if isinstance(initial, OdeState) else np.asarray(initial, dtype=complex)
    if tau0 < 1:
        raise InvalidInputError("tau0 must be at least 1")
    return integrate_field(lambda t, y: rhs_with_nonresonant_array(t, y, z, lam, kappa),
                           y0, tau0, tau_end, dt, record)
