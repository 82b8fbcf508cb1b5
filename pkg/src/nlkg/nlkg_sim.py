"""Pseudo-spectral solver for 1D cubic Klein-Gordon systems and hyperbolic-coordinate diagnostics.

Time stepping is Strang splitting: the linear equation u_tt = u_xx - u is
propagated exactly in Fourier space (ω = √(1+k²)) for half a step on each side
of a pointwise kick v += dt·F(u). The domain is periodic on [-X, X) and must be
wide enough that the solution never reaches the boundary.

Profiles are read off along the hyperbolas t + 2B = τ cosh z, x = τ sinh z:
U = τ^{1/2} cosh(κz) u and α = (U - i ∂_τU) e^{-iτ} / 2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .cubic_system import Coefficients, nonlinearity, resolve_system
from .errors import BlowUpError, InsufficientSamplesError, InvalidInputError, SupportViolationError
from .limit_ode import DEFAULT_KAPPA

# Gaussian tail below double precision: exp(-r²) < 1e-16 for r > 6.07
GAUSSIAN_RADIUS = math.sqrt(math.log(1e16))
SUPPORT_RATIO = 1e-6


@dataclass
class Profile:
    """Gaussian bump amplitude·exp(-((x - center)/width)²)."""

    amplitude: float = 0.0
    width: float = 1.0
    center: float = 0.0

    def sample(self, x):
        return self.amplitude * np.exp(-(((x - self.center) / self.width) ** 2))

    def radius(self):
        if self.amplitude == 0:
            return 0.0
        return abs(self.center) + GAUSSIAN_RADIUS * self.width


@dataclass
class SimConfig:
    coefficients: Coefficients = field(default_factory=lambda: Coefficients((0,) * 8))
    epsilon: float = 0.05
    u10: Profile = field(default_factory=lambda: Profile(1.0))
    u11: Profile = field(default_factory=Profile)
    u20: Profile = field(default_factory=lambda: Profile(1.0))
    u21: Profile = field(default_factory=Profile)
    X: float = 256.0
    N: int = 4096
    dt: float = 0.02
    T: float = 200.0
    kappa: float = DEFAULT_KAPPA
    tau0: Optional[float] = None
    snapshot_every: int = 5
    # half-width of the stored window around x = 0; None keeps the whole grid
    snapshot_window: Optional[float] = None
    support_radius: Optional[float] = None
    # time offset of the hyperbola vertex, t + offset = τ cosh z; None means 2B
    vertex_offset: Optional[float] = None
    taus: tuple = ()
    z: tuple = (0.0,)
    check_support: bool = True

    @property
    def dx(self):
        return 2 * self.X / self.N

    @property
    def B(self):
        if self.support_radius is not None:
            return self.support_radius
        return max(1.0, max(p.radius() for p in self.profiles()))

    @property
    def offset(self):
        return 2 * self.B if self.vertex_offset is None else self.vertex_offset

    @property
    def tau_min(self):
        return self.tau0 if self.tau0 is not None else max(1.0, 2 * self.B) + 1.0

    def profiles(self):
        return (self.u10, self.u11, self.u20, self.u21)

    def grid(self):
        return -self.X + self.dx * np.arange(self.N)

    def max_frequency(self):
        return math.sqrt(1 + (math.pi / self.dx) ** 2)

    def validate(self):
        if self.N <= 0 or self.N & (self.N - 1):
            raise InvalidInputError("N must be a power of two")
        if self.dt <= 0 or self.T < 0:
            raise InvalidInputError("dt must be positive and T non-negative")
        if self.dt * self.max_frequency() >= 1:
            raise InvalidInputError(
                f"dt·ω_max = {self.dt * self.max_frequency():.3g} must stay below 1")
        margin = 8 * self.dx
        if self.X < self.T + self.B + margin:
            raise InvalidInputError(
                f"domain half-width {self.X} is below T + B + margin = {self.T + self.B + margin:.4g}")
        if self.kappa <= 3.5:
            raise InvalidInputError("kappa must exceed 7/2")
        if self.tau_min <= max(1.0, 2 * self.B):
            raise InvalidInputError("tau0 must exceed max(1, 2B)")
        if self.vertex_offset is not None and self.vertex_offset < 0:
            raise InvalidInputError("vertex_offset must be non-negative")
        if self.snapshot_every < 1:
            raise InvalidInputError("snapshot_every must be at least 1")
        return self

    def to_json(self):
        out = asdict(self)
        out["coefficients"] = list(self.coefficients.as_array())
        out["taus"] = list(self.taus)
        out["z"] = list(self.z)
        return out

    @classmethod
    def from_json(cls, obj):
        obj = dict(obj)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        if "coefficients" in obj:
            obj["coefficients"] = resolve_system(obj["coefficients"])
        for key in ("u10", "u11", "u20", "u21"):
            if key in obj:
                try:
                    obj[key] = Profile(**obj[key])
                except TypeError as exc:
                    raise InvalidInputError(f"bad profile for {key}: {exc}") from exc
        for key in ("taus", "z"):
            if key in obj:
                obj[key] = tuple(float(t) for t in obj[key])
        try:
            return cls(**obj)
        except TypeError as exc:
            raise InvalidInputError(str(exc)) from exc


@dataclass
class SimState:
    t: float
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    @property
    def u(self):
        return np.stack([self.u1, self.u2])

    @property
    def v(self):
        return np.stack([self.v1, self.v2])


@dataclass
class Snapshot:
    t: float
    x: np.ndarray
    u: np.ndarray  # (2, n)
    v: np.ndarray
    ux: np.ndarray


@dataclass
class SimResult:
    snapshots: list
    final: SimState
    times: np.ndarray  # snapshot times
    sup_norms: np.ndarray  # (n_snap, 2) max|u_j| on the whole grid
    energies: np.ndarray  # free-field energy at snapshots
    support_ratio: float  # worst outside/inside ratio seen
    steps: int
    error: Optional[BlowUpError] = None


def initial_state(cfg: SimConfig) -> SimState:
    x = cfg.grid()
    e = cfg.epsilon
    return SimState(0.0, e * cfg.u10.sample(x), e * cfg.u20.sample(x),
                    e * cfg.u11.sample(x), e * cfg.u21.sample(x))


@lru_cache(maxsize=16)
def _spectral(n, x_half, h):
    k = 2 * np.pi * np.fft.rfftfreq(n, d=2 * x_half / n)
    w = np.sqrt(1 + k * k)
    return k, w, np.cos(w * h), np.sin(w * h)


def _linear(uh, vh, n, x_half, h):
    _, w, c, s = _spectral(n, x_half, h)
    return c * uh + (s / w) * vh, -w * s * uh + c * vh


def _kick(uh, vh, coeffs, h, n):
    u = np.fft.irfft(uh, n=n)
    f1, f2 = nonlinearity(coeffs, u[0], u[1])
    return vh + h * np.fft.rfft(np.stack([f1, f2]))


def step(state: SimState, cfg: SimConfig) -> SimState:
    """Advance one time step dt by Strang splitting."""
    n, h = cfg.N, cfg.dt
    uh, vh = np.fft.rfft(state.u), np.fft.rfft(state.v)
    uh, vh = _linear(uh, vh, n, cfg.X, h / 2)
    if not cfg.coefficients.is_zero():
        vh = _kick(uh, vh, cfg.coefficients, h, n)
    uh, vh = _linear(uh, vh, n, cfg.X, h / 2)
    u, v = np.fft.irfft(uh, n=n), np.fft.irfft(vh, n=n)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise BlowUpError(f"non-finite field at t = {state.t + h:.6g}", at=state.t + h)
    return SimState(state.t + h, u[0], u[1], v[0], v[1])


def energy(state: SimState, cfg: SimConfig):
    """Free-field energy Σ_j ∫ (v_j² + (∂x u_j)² + u_j²) dx."""
    k, _, _, _ = _spectral(cfg.N, cfg.X, cfg.dt)
    ux = np.fft.irfft(1j * k * np.fft.rfft(state.u), n=cfg.N)
    return float(np.sum(state.v**2 + ux**2 + state.u**2) * cfg.dx)


def _support_ratio(u, x, t, cfg):
    inside = np.abs(x) <= t + cfg.B + 2 * cfg.dx
    worst = 0.0
    for comp in u:
        top = np.max(np.abs(comp))
        if top == 0:
            continue
        outside = np.max(np.abs(comp[~inside]), initial=0.0)
        worst = max(worst, outside / top)
    return worst


def run(cfg: SimConfig) -> SimResult:
    """Integrate to T, snapshotting every `snapshot_every` steps.

    On blow-up the partial series is returned with `error` set.
    """
    cfg.validate()
    # overflow is expected on blow-up and is reported through `error`
    with np.errstate(over="ignore", invalid="ignore"):
        return _run(cfg)


def _run(cfg):
    n = cfg.N
    x = cfg.grid()
    k, _, _, _ = _spectral(n, cfg.X, cfg.dt)
    n_steps = int(math.ceil(cfg.T / cfg.dt - 1e-9))
    h = cfg.T / n_steps if n_steps else cfg.dt
    if cfg.snapshot_window is None:
        window = slice(None)
    else:
        idx = np.nonzero(np.abs(x) <= cfg.snapshot_window)[0]
        window = slice(idx[0], idx[-1] + 1)
    free = cfg.coefficients.is_zero()

    s0 = initial_state(cfg)
    uh, vh = np.fft.rfft(s0.u), np.fft.rfft(s0.v)
    snaps, times, sups, energies = [], [], [], []
    worst = 0.0

    def record(t, uh, vh):
        nonlocal worst
        u, v = np.fft.irfft(uh, n=n), np.fft.irfft(vh, n=n)
        ux = np.fft.irfft(1j * k * uh, n=n)
        if cfg.check_support:
            ratio = _support_ratio(u, x, t, cfg)
            worst = max(worst, ratio)
            if ratio > SUPPORT_RATIO:
                raise SupportViolationError(
                    f"solution escaped |x| <= t + B at t = {t:.6g} (ratio {ratio:.3g})")
        snaps.append(Snapshot(t, x[window].copy(), u[:, window].copy(), v[:, window].copy(),
                              ux[:, window].copy()))
        times.append(t)
        sups.append(np.max(np.abs(u), axis=1))
        energies.append(float(np.sum(v**2 + ux**2 + u**2) * cfg.dx))
        return u, v

    def result(t, uh, vh, steps, error=None):
        u, v = np.fft.irfft(uh, n=n), np.fft.irfft(vh, n=n)
        return SimResult(snaps, SimState(t, u[0], u[1], v[0], v[1]), np.array(times),
                         np.array(sups), np.array(energies), worst, steps, error)

    record(0.0, uh, vh)
    for i in range(1, n_steps + 1):
        prev = uh, vh
        uh, vh = _linear(uh, vh, n, cfg.X, h / 2)
        if not free:
            vh = _kick(uh, vh, cfg.coefficients, h, n)
        uh, vh = _linear(uh, vh, n, cfg.X, h / 2)
        t = i * h
        if not (np.all(np.isfinite(uh)) and np.all(np.isfinite(vh))):
            err = BlowUpError(f"non-finite field at t = {t:.6g}", at=t)
            return result((i - 1) * h, *prev, i - 1, err)
        if i % cfg.snapshot_every == 0 or i == n_steps:
            record(t, uh, vh)
    return result(n_steps * h, uh, vh, n_steps)


# --- diagnostics --------------------------------------------------------------

@dataclass
class ProfileDiagnostics:
    tau: float
    z: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    envelope1: np.ndarray
    envelope2: np.ndarray
    # z values whose hyperbola point fell outside the stored window (alpha zero-filled)
    off_support: np.ndarray


def _lagrange_weights(nodes, x):
    w = np.ones(len(nodes))
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if i != j:
                w[i] *= (x - xj) / (xi - xj)
    return w


def _stencil(grid, x):
    """Four grid indices around x and the cubic interpolation weights."""
    i = int(np.searchsorted(grid, x)) - 1
    i = min(max(i - 1, 0), len(grid) - 4)
    idx = np.arange(i, i + 4)
    return idx, _lagrange_weights(grid[idx], x)


def _fields_at(series: SimResult, t, x):
    """Cubic interpolation of (u, v, ux) at (t, x); returns three arrays of length 2."""
    tidx, tw = _stencil(series.times, t)
    snap0 = series.snapshots[tidx[0]]
    xidx, xw = _stencil(snap0.x, x)
    out = []
    for name in ("u", "v", "ux"):
        vals = np.stack([getattr(series.snapshots[j], name)[:, xidx] @ xw for j in tidx])
        out.append(tw @ vals)
    return out


def extract_profiles(series: SimResult, cfg: SimConfig, taus=None, z=None):
    """α_j(τ, z) at each requested τ ≥ τ0 on the given z values."""
    taus = cfg.taus if taus is None else taus
    zs = np.asarray(cfg.z if z is None else z, dtype=float)
    t_lo, t_hi = series.times[1], series.times[-2]
    x_lo, x_hi = series.snapshots[0].x[1], series.snapshots[0].x[-2]
    shift = cfg.offset
    out = []
    for tau in taus:
        if tau < cfg.tau_min:
            raise InvalidInputError(f"tau {tau} is below tau0 = {cfg.tau_min}")
        t_of_z = tau * np.cosh(zs) - shift
        if np.any(t_of_z < t_lo) or np.any(t_of_z > t_hi):
            raise InvalidInputError(f"tau {tau} leaves the simulated time range")
        a1 = np.zeros(len(zs), dtype=complex)
        a2 = np.zeros(len(zs), dtype=complex)
        off = np.zeros(len(zs), dtype=bool)
        for i, zz in enumerate(zs):
            t, x = t_of_z[i], tau * math.sinh(zz)
            if not x_lo <= x <= x_hi:
                off[i] = True
                continue
            u, v, ux = _fields_at(series, t, x)
            weight = math.sqrt(tau) * math.cosh(cfg.kappa * zz)
            big_u = weight * u
            du = weight * (math.cosh(zz) * v + math.sinh(zz) * ux) + 0.5 / tau * big_u
            alpha = 0.5 * (big_u - 1j * du) * np.exp(-1j * tau)
            a1[i], a2[i] = alpha
        t_all = tau * np.cosh(zs) - shift
        scale = 2 / (np.sqrt(tau) * np.cosh(cfg.kappa * zs)) * np.sqrt(np.maximum(t_all, 0))
        out.append(ProfileDiagnostics(float(tau), zs.copy(), a1, a2,
                                      scale * np.abs(a1), scale * np.abs(a2), zs[off]))
    return out


@dataclass
class FitReport:
    n: int
    tau_min: float
    tau_max: float
    slope: float  # b in |α2| ≈ a + b log τ
    intercept: float
    r2_log: float
    power_exponent: float  # p in |α2| ≈ C τ^p
    power_coefficient: float
    r2_power: float
    verdict: str  # "log" or "power"
    alpha1_relative_spread: float
    phase_slope: float  # d arg α1 / d log τ

    def to_json(self):
        return asdict(self)


def _r2(y, fit):
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 0.0
    return 1 - float(np.sum((y - fit) ** 2)) / ss_tot


def fit_series(tau, y):
    """Fit y against a + b log τ and against C τ^p; returns the pieces of a FitReport."""
    tau, y = np.asarray(tau, dtype=float), np.asarray(y, dtype=float)
    lt = np.log(tau)
    b, a = np.polyfit(lt, y, 1)
    r2_log = _r2(y, a + b * lt)
    if np.all(y > 0):
        p0, logc0 = np.polyfit(lt, np.log(y), 1)
        guess = (math.exp(logc0), p0)
    else:
        guess = (float(np.mean(y)), 0.0)
    try:
        with warnings.catch_warnings():
            # flat data leaves the covariance undefined; only the estimate is used
            warnings.simplefilter("ignore", OptimizeWarning)
            (cc, p), _ = curve_fit(lambda t, c, p: c * t**p, tau, y, p0=guess, maxfev=10000)
    except RuntimeError:
        cc, p = guess
    r2_pow = _r2(y, cc * tau**p)
    return float(b), float(a), r2_log, float(p), float(cc), r2_pow


def fit_log_growth(diags, z=0.0) -> FitReport:
    """Compare logarithmic and power-law growth of |α2(τ, z)| over the sampled τ."""
    pts = []
    for d in diags:
        hit = np.nonzero(np.isclose(d.z, z))[0]
        if len(hit) and d.z[hit[0]] not in d.off_support:
            pts.append((d.tau, d.alpha1[hit[0]], d.alpha2[hit[0]]))
    if len(pts) < 5:
        raise InsufficientSamplesError(f"need at least 5 samples at z = {z}, got {len(pts)}")
    pts.sort(key=lambda p: p[0])
    tau = np.array([p[0] for p in pts])
    if tau[-1] < 5 * tau[0]:
        raise InsufficientSamplesError("samples must span a factor of at least 5 in tau")
    a1 = np.array([p[1] for p in pts])
    a2 = np.array([p[2] for p in pts])
    b, a, r2_log, p, cc, r2_pow = fit_series(tau, np.abs(a2))
    m1 = np.abs(a1)
    spread = float((m1.max() - m1.min()) / m1.mean()) if m1.mean() > 0 else 0.0
    phase = np.unwrap(np.angle(a1)) if m1.min() > 0 else np.zeros_like(m1)
    phase_slope = float(np.polyfit(np.log(tau), phase, 1)[0])
    return FitReport(len(tau), float(tau[0]), float(tau[-1]), b, a, r2_log, p, cc, r2_pow,
                     "log" if r2_log > r2_pow else "power", spread, phase_slope)


def decay_exponent(result: SimResult, t_lo=20.0, t_hi=200.0, component=0):
    """Slope of log sup|u_j| against log t on [t_lo, t_hi]."""
    t = result.times
    sel = (t >= t_lo) & (t <= t_hi)
    return float(np.polyfit(np.log(t[sel]), np.log(result.sup_norms[sel, component]), 1)[0])


def energy_drift_per_1000(result: SimResult):
    """Largest relative energy change over the run, scaled to 1000 steps."""
    e = result.energies
    rel = float(np.max(np.abs(e - e[0])) / e[0])
    return rel * 1000 / max(result.steps, 1)
