"""Time-dependent canonical transformation for the beta = 0 family.

U(t) = exp(i (a + b p)) acts as a phase times a translation,
``(U psi)(x) = e^{ia} psi(x + b)``, so that ``U x U^+ = x + b`` and
``U p U^+ = p``.  With ``b = -(c0 + mu1) / alpha`` the mass term of
``U H U^+`` becomes ``p (mu1 - alpha x) p``, and the frame term
``-i U dU^+/dt = -(a' + b' p)`` supplies the constant and linear pieces of

    K = mu1 (p + mu2)^2 - alpha p x p + mu3.

Two gauge modes are provided.  ``as-published`` builds a = eps*delta0 and
b = eps*delta1 from the epsilon, delta0, delta1 formulas.  ``gauge-exact``
takes a and b as primitive and integrates ``a' = V0 - mu3 - mu1 mu2^2``.
K is time independent only when c0 is linear in t: a rate
``2 alpha mu1 mu2`` gives K above, a constant c0 gives the same K without
the linear ``2 mu1 mu2 p`` term.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .errors import ConfigInvalid, ExactnessViolated, PoleOnPath, SupportTooWide
from .model import (
    OperatorMatrix,
    diagonal,
    hamiltonian_matrix,
    momentum_matrix,
    norm,
    sandwich,
)
from .timefuncs import Polynomial, as_time_function

MODES = ("as-published", "gauge-exact")
POLE_TOL = 1e-10
EPS_DT = 1e-6


@dataclass(frozen=True)
class QCTConstraints:
    mu1: float
    mu2: float
    mu3: float = 0.0
    epsilon0: float = 1.0

    def __post_init__(self):
        if self.mu1 == 0:
            raise ConfigInvalid("canonical.mu1", "constraint mu1 != 0 violated")
        if self.mu2 == 0:
            raise ConfigInvalid("canonical.mu2", "constraint μ₂ ≠ 0 violated")
        if self.epsilon0 == 0:
            raise ConfigInvalid("canonical.epsilon0", "epsilon0 must be nonzero")

    @property
    def shift(self):
        """mu3 + mu1 mu2^2, the constant that a' must absorb."""
        return self.mu3 + self.mu1 * self.mu2**2

    def exact_rate(self, alpha):
        """The dc0/dt that reproduces K with its linear p term."""
        return 2.0 * alpha * self.mu1 * self.mu2


def _check_path(c0, mu1, t, samples=4097):
    tau = np.linspace(0.0, t, samples)
    d = mu1 + np.asarray(c0(tau), dtype=float)
    if np.min(np.abs(d)) < POLE_TOL or np.any(np.sign(d) != np.sign(d[0])):
        raise PoleOnPath(f"mu1 + c0(tau) vanishes on [0, {t:g}]")


def epsilon_of_t(c0, constraints, alpha, t):
    """eps0 * exp(2 alpha mu1 mu2 * integral_0^t dtau / (mu1 + c0(tau)))."""
    c0 = as_time_function(c0)
    k = constraints
    if t == 0:
        if abs(k.mu1 + c0(0.0)) < POLE_TOL:
            raise PoleOnPath("mu1 + c0(0) vanishes")
        return float(k.epsilon0)
    _check_path(c0, k.mu1, t)
    if c0.is_constant:
        integral = t / (k.mu1 + c0(0.0))
    else:
        integral, _ = quad(lambda s: 1.0 / (k.mu1 + c0(s)), 0.0, t, epsabs=1e-14, epsrel=1e-13, limit=200)
    return float(k.epsilon0 * np.exp(2.0 * alpha * k.mu1 * k.mu2 * integral))


class GaugeFunctions:
    """epsilon, delta0, delta1 and the composite gauges a, b as functions of t.

    Values on ``t_grid`` are tabulated at construction.  Off-grid times are
    evaluated directly (as-published) or by cubic Hermite interpolation of
    the RK4 table with the exact rate a' (gauge-exact).
    """

    def __init__(self, c0, V0, constraints, alpha, mode, t_grid):
        if mode not in MODES:
            raise ConfigInvalid("canonical.mode", f"unknown gauge mode {mode!r}")
        if alpha == 0:
            raise ConfigInvalid("profile.alpha", "the transformation needs alpha != 0")
        self.c0 = as_time_function(c0)
        self.V0 = as_time_function(V0)
        self.constraints = constraints
        self.alpha = float(alpha)
        self.mode = mode
        self.t = np.asarray(t_grid, dtype=float)
        if self.t.ndim != 1 or len(self.t) < 2 or np.any(np.diff(self.t) <= 0):
            raise ValueError("t_grid must be increasing with at least two points")
        _check_path(self.c0, constraints.mu1, self.t[-1])
        if self.t[0] < 0:
            _check_path(self.c0, constraints.mu1, self.t[0])
        self._spline = None
        if mode == "gauge-exact":
            self._spline = self._integrate_a()

    # gauge-exact quadrature
    def a_rate(self, t):
        return self.V0(t) - self.constraints.shift

    def _integrate_a(self):
        t = self.t
        a = np.empty(len(t))
        a[0] = self._published_a(t[0])
        for k in range(1, len(t)):
            lo, hi = t[k - 1], t[k]
            dt = hi - lo
            # RK4 on a right-hand side that depends on t only
            a[k] = a[k - 1] + dt / 6.0 * (
                self.a_rate(lo) + 4.0 * self.a_rate(0.5 * (lo + hi)) + self.a_rate(hi)
            )
        return CubicHermiteSpline(t, a, self.a_rate(t))

    # printed route
    def epsilon(self, t):
        return epsilon_of_t(self.c0, self.constraints, self.alpha, float(t))

    def _published_delta1(self, t):
        return -(self.c0(t) + self.constraints.mu1) / (self.alpha * self.epsilon(t))

    def _published_a(self, t):
        k = self.constraints
        d1 = self._published_delta1(t)
        d0 = -(self.V0(t) - k.shift) * d1 / (2.0 * k.mu1 * k.mu2)
        return self.epsilon(t) * d0

    def b(self, t):
        if self.mode == "gauge-exact":
            return float(-(self.c0(t) + self.constraints.mu1) / self.alpha)
        return float(self.epsilon(t) * self._published_delta1(t))

    def a(self, t):
        if self.mode == "gauge-exact":
            return float(self._spline(t))
        return float(self._published_a(t))

    def delta1(self, t):
        return self.b(t) / self.epsilon(t)

    def delta0(self, t):
        return self.a(t) / self.epsilon(t)

    def table(self):
        """Rows (t, epsilon, delta0, delta1, a, b) on the construction grid."""
        return [
            (float(t), self.epsilon(t), self.delta0(t), self.delta1(t), self.a(t), self.b(t))
            for t in self.t
        ]


def gauge_functions(c0, V0, constraints, mode, t_grid, alpha):
    return GaugeFunctions(c0, V0, constraints, alpha, mode, t_grid)


@dataclass(frozen=True)
class ConstraintResiduals:
    r1: float
    r2: float
    r3: float

    def max(self):
        return max(abs(self.r1), abs(self.r2), abs(self.r3))


def constraint_residuals(gauges, c0, V0, constraints, t, dt=EPS_DT):
    """Residuals of the three restrictions on mu1, mu2, mu3 at time t."""
    c0 = as_time_function(c0)
    V0 = as_time_function(V0)
    k = constraints
    eps = gauges.epsilon(t)
    eps_dot = (gauges.epsilon(t + dt) - gauges.epsilon(t - dt)) / (2.0 * dt)
    d0, d1 = gauges.delta0(t), gauges.delta1(t)
    mass = c0(t) + gauges.alpha * eps * d1
    r1 = mass + k.mu1
    r2 = eps_dot * d1 / (2.0 * mass) - k.mu2
    r3 = V0(t) - eps_dot * d0 - k.mu1 * k.mu2**2 - k.mu3
    return ConstraintResiduals(float(r1), float(r2), float(r3))


# --- the unitary on grid states ------------------------------------------------

def _translate(grid, psi, shift, margin, leak_tol):
    """psi(x + shift) by zero-padded spectral interpolation."""
    n = grid.n
    m = 1 << int(np.ceil(np.log2(4 * n)))
    pad = np.zeros(m, dtype=complex)
    lo = (m - n) // 2
    pad[lo : lo + n] = psi
    k = 2.0 * np.pi * np.fft.fftfreq(m, d=grid.h)
    out = np.fft.ifft(np.fft.fft(pad) * np.exp(1j * k * shift))
    total = np.sum(np.abs(out) ** 2)
    inside = np.zeros(m, dtype=bool)
    inside[lo + margin : lo + n - margin] = True
    leak = np.sqrt(np.sum(np.abs(out[~inside]) ** 2) / total) if total > 0 else 0.0
    if leak > leak_tol:
        raise SupportTooWide(f"shift {shift:g} pushes {leak:.2e} of the norm into the wall margin")
    res = out[lo : lo + n].copy()
    res[0] = res[-1] = 0.0
    return res


def apply_qct(grid, psi, a, b, direction="forward", margin=5, leak_tol=1e-6):
    """Forward: e^{ia} psi(x + b).  Inverse: e^{-ia} psi(x - b)."""
    if direction == "forward":
        phase, shift = np.exp(1j * a), b
    elif direction == "inverse":
        phase, shift = np.exp(-1j * a), -b
    else:
        raise ValueError("direction must be 'forward' or 'inverse'")
    psi = np.asarray(psi, dtype=complex)
    if shift == 0:
        return phase * psi
    return phase * _translate(grid, psi, shift, margin, leak_tol)


# --- K ------------------------------------------------------------------------------

@dataclass(frozen=True)
class TransformedHamiltonianSpec:
    """K = mu1 (p + mu2)^2 - alpha p x p + mu3.

    ``linear_term=False`` drops ``2 mu1 mu2 p``, the form that a constant c0
    produces; the constant ``mu1 mu2^2`` stays.
    """

    mu1: float
    mu2: float
    mu3: float
    alpha: float
    linear_term: bool = True

    @classmethod
    def for_profile(cls, constraints, profile):
        linear = profile.time_dependent
        return cls(constraints.mu1, constraints.mu2, constraints.mu3, profile.alpha, linear)


def transformed_hamiltonian(spec, grid):
    """Grid K; the p (mu1 - alpha x) p part uses the same closure as H."""
    P = momentum_matrix(grid)
    kin = sandwich(grid, spec.mu1 - spec.alpha * grid.x, P)
    const = diagonal(grid, spec.mu3 + spec.mu1 * spec.mu2**2)
    K = kin + const
    if spec.linear_term:
        K = K + P.scale(2.0 * spec.mu1 * spec.mu2)
    return OperatorMatrix(K.matrix, 2, True)


def exactness(profile, constraints, spec, t=0.0, tol=1e-10):
    """(ok, message): whether K is exactly U H U^+ - i U dU^+/dt."""
    c0 = profile.c0
    if isinstance(c0, Polynomial):
        linear = all(abs(c) <= tol for c in c0.coeffs[2:])
    else:
        linear = c0.is_constant
    if not linear:
        return False, "c0 is not linear in t; K is time dependent"
    rate = float(c0.derivative(t))
    want = constraints.exact_rate(profile.alpha) if spec.linear_term else 0.0
    if abs(rate - want) > tol:
        return False, f"dc0/dt = {rate:g} but K needs {want:g}"
    return True, "exact"


def verify_transformation(psi, t, gauges, profile, potential, K, grid, dt=1e-5, strict=False, K_spec=None):
    """||U H U^+ psi - i U dU^+/dt psi - K psi|| / ||psi||.

    Returns ``(residual, exact)``.  With ``strict=True`` a setup outside the
    exactness window raises ExactnessViolated instead of being flagged.
    """
    exact = True
    if K_spec is not None:
        exact, msg = exactness(profile, gauges.constraints, K_spec, t)
        if not exact and strict:
            raise ExactnessViolated(msg)
    if gauges.mode != "gauge-exact":
        exact = False
        if strict:
            raise ExactnessViolated("verification needs gauge-exact mode")
    a, b = gauges.a(t), gauges.b(t)
    H = hamiltonian_matrix(profile, potential, grid, t)
    back = apply_qct(grid, psi, a, b, "inverse")
    uhu = apply_qct(grid, H @ back, a, b, "forward")
    # U(t) U^+(t') = exp(i (a - a') + i (b - b') p): one translation of psi
    plus = apply_qct(grid, psi, a - gauges.a(t + dt), b - gauges.b(t + dt), "forward")
    minus = apply_qct(grid, psi, a - gauges.a(t - dt), b - gauges.b(t - dt), "forward")
    frame = -1j * (plus - minus) / (2.0 * dt)
    phi = uhu + frame
    return norm(grid, phi - K @ psi) / norm(grid, psi), exact


# --- pullback ------------------------------------------------------------------------

@dataclass
class Pullback:
    t: np.ndarray
    states: list
    residuals: np.ndarray
    failed_at: float = None


def k_grid(grid, gauges, t0=None):
    """Grid for K whose nodes map onto ``grid`` under U^+(t0)."""
    t0 = gauges.t[0] if t0 is None else t0
    return grid.shifted(-gauges.b(t0))


def pullback_state(grid, phi, E, gauges, t, t0=None):
    """U^+(t) e^{-iEt} phi, with phi given on :func:`k_grid` nodes."""
    t0 = gauges.t[0] if t0 is None else t0
    db = gauges.b(t) - gauges.b(t0)
    phase = np.exp(-1j * (E * t + gauges.a(t)))
    if db == 0:
        return phase * np.asarray(phi, dtype=complex)
    return phase * _translate(grid, np.asarray(phi, dtype=complex), -db, 5, 1e-6)


def pullback_solution(phi, E, gauges, t_grid, grid, profile, potential, dt=1e-5):
    """Pull a K eigenpair back and measure the Schrodinger residual at each t.

    ``phi`` lives on ``k_grid(grid, gauges)``.  The residual is
    ``||i (psi(t+dt) - psi(t-dt)) / 2dt - H(t) psi(t)|| / ||psi(t)||``.  When
    a growing shift b(t) pushes the state into the walls the run stops and
    records the first failing time.
    """
    ts, states, res = [], [], []
    failed = None
    for t in np.asarray(t_grid, dtype=float):
        try:
            psi = pullback_state(grid, phi, E, gauges, t)
            dpsi = (pullback_state(grid, phi, E, gauges, t + dt) - pullback_state(grid, phi, E, gauges, t - dt)) / (2 * dt)
        except SupportTooWide as exc:
            failed = float(t)
            exc.t = failed
            break
        H = hamiltonian_matrix(profile, potential, grid, t)
        r = 1j * dpsi - H @ psi
        ts.append(float(t))
        states.append(psi)
        res.append(norm(grid, r) / norm(grid, psi))
    return Pullback(np.array(ts), states, np.array(res), failed)


# --- artifacts -------------------------------------------------------------------------

def write_gauge_csv(path, gauges):
    k = gauges.constraints
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "epsilon", "delta0", "delta1", "a", "b", "r1", "r2", "r3"])
        for row in gauges.table():
            r = constraint_residuals(gauges, gauges.c0, gauges.V0, k, row[0])
            w.writerow([repr(float(v)) for v in (*row, r.r1, r.r2, r.r3)])


def verification_json(mode, n, dt, residual, exact):
    return json.dumps(
        {"mode": mode, "N": n, "dt": dt, "residual": residual, "exactness_flag": bool(exact)},
        sort_keys=True,
        indent=2,
    )
