"""Lewis-Riesenfeld invariant I(t) = A2 O2 + A3 O3 + A4 O4 + A6 O6 + A7 O7.

The coefficients obey the linear system

    A2' = 0
    A3' = A4' = -A2 + alpha A6 + beta A7
    A6' = beta  (A3 + A4)
    A7' = alpha (A3 + A4)

solved here in closed form (hyperbolic, trigonometric and polynomial
branches) and by classical RK4.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrequency, StepTooLarge, TimeDependentMassNotSupported
from .model import OperatorMatrix, hamiltonian_matrix, interior_norm, generator_matrices, norm

LABELS = ("A2", "A3", "A4", "A6", "A7")


def ode_matrix(alpha, beta):
    """M with d/dt [A2, A3, A4, A6, A7] = M [A2, A3, A4, A6, A7]."""
    a, b = alpha, beta
    return np.array(
        [
            [0, 0, 0, 0, 0],
            [-1, 0, 0, a, b],
            [-1, 0, 0, a, b],
            [0, b, b, 0, 0],
            [0, a, a, 0, 0],
        ],
        dtype=float,
    )


@dataclass(frozen=True)
class InvariantConstants:
    """Integration constants; alpha3 = 0 gives a Hermitian invariant."""

    alpha3: float = 0.0
    alpha6: float = 0.0
    alpha7: float = 0.0
    a0: float = 1.0
    theta0: float = 0.0

    @property
    def hermitian(self):
        return self.alpha3 == 0


@dataclass(frozen=True)
class InvariantCoefficients:
    A2: object
    A3: object
    A4: object
    A6: object
    A7: object

    @classmethod
    def from_vector(cls, y):
        return cls(*[y[k] for k in range(5)])

    def vector(self):
        return np.array([self.A2, self.A3, self.A4, self.A6, self.A7])

    def perturbed(self, **delta):
        vals = {k: getattr(self, k) + delta.get(k, 0.0) for k in LABELS}
        return InvariantCoefficients(**vals)


def ode_residual(alpha, beta, values, rates):
    """Left-hand sides of the five equations, which vanish on solutions."""
    y = np.asarray(values.vector(), dtype=float)
    dy = np.asarray(rates.vector(), dtype=float)
    return dy - np.tensordot(ode_matrix(alpha, beta), y, axes=1)


def closed_form_coefficients(alpha, beta, consts, t, polynomial_branch=True):
    """Closed-form coefficients at time(s) ``t``.

    alpha*beta > 0 uses cosh/sinh with frequency 2 sqrt(alpha beta).
    alpha*beta < 0 is the continuation cosh(i z) = cos z, sinh(i z) = i sin z
    with theta0 taken along the imaginary axis, which leaves every
    coefficient real.  alpha*beta = 0 integrates the triangular system
    exactly with A3(0) = alpha3/2 + a0/2, A4(0) = -alpha3/2 + a0/2,
    A6(0) = alpha6, A7(0) = alpha7.
    """
    t = np.asarray(t, dtype=float)
    c = consts
    A2 = c.alpha6 * alpha + c.alpha7 * beta
    ab = alpha * beta
    if ab > 0:
        s = np.sqrt(ab)
        phase = 2 * s * t + c.theta0
        ch, sh = np.cosh(phase), np.sinh(phase)
        A3 = c.alpha3 / 2 + c.a0 / (2 * ab) * ch
        A4 = -c.alpha3 / 2 + c.a0 / (2 * ab) * ch
        A6 = c.alpha6 + c.a0 / (2 * alpha * s) * sh
        A7 = c.alpha7 + c.a0 / (2 * beta * s) * sh
    elif ab < 0:
        r = np.sqrt(-ab)
        phase = 2 * r * t + c.theta0
        co, si = np.cos(phase), np.sin(phase)
        A3 = c.alpha3 / 2 + c.a0 / (2 * ab) * co
        A4 = -c.alpha3 / 2 + c.a0 / (2 * ab) * co
        A6 = c.alpha6 + c.a0 / (2 * alpha * r) * si
        A7 = c.alpha7 + c.a0 / (2 * beta * r) * si
    else:
        if not polynomial_branch:
            raise DegenerateFrequency("alpha*beta == 0 and the polynomial branch is disabled")
        initial = InvariantCoefficients(
            A2, c.alpha3 / 2 + c.a0 / 2, -c.alpha3 / 2 + c.a0 / 2, c.alpha6, c.alpha7
        )
        return polynomial_coefficients(alpha, beta, initial, t)
    A2 = A2 + 0.0 * t
    return InvariantCoefficients(A2, A3, A4, A6, A7)


def polynomial_coefficients(alpha, beta, initial, t):
    """Exact solution for alpha*beta == 0 from values at t = 0."""
    if alpha * beta != 0:
        raise ValueError("polynomial branch needs alpha*beta == 0")
    t = np.asarray(t, dtype=float)
    y0 = initial
    # with alpha*beta = 0 the common rate of A3 and A4 is constant
    g = -y0.A2 + alpha * y0.A6 + beta * y0.A7
    s0 = y0.A3 + y0.A4
    ramp = s0 * t + g * t**2
    return InvariantCoefficients(
        y0.A2 + 0.0 * t,
        y0.A3 + g * t,
        y0.A4 + g * t,
        y0.A6 + beta * ramp,
        y0.A7 + alpha * ramp,
    )


class ClosedFormSolution:
    """Coefficient source backed by :func:`closed_form_coefficients`."""

    def __init__(self, alpha, beta, consts=InvariantConstants()):
        self.alpha = alpha
        self.beta = beta
        self.consts = consts
        self._M = ode_matrix(alpha, beta)

    def __call__(self, t):
        return closed_form_coefficients(self.alpha, self.beta, self.consts, t)

    def rates(self, t):
        y = np.asarray(self(t).vector(), dtype=float)
        return InvariantCoefficients.from_vector(np.tensordot(self._M, y, axes=1))

    def initial(self, t0=0.0):
        return self(t0)


@dataclass
class CoefficientTrajectory:
    alpha: float
    beta: float
    t: np.ndarray
    values: np.ndarray  # shape (5, len(t))

    def __call__(self, t):
        """Cubic Hermite interpolation using the exact rates M y."""
        from scipy.interpolate import CubicHermiteSpline

        rates = ode_matrix(self.alpha, self.beta) @ self.values
        spline = CubicHermiteSpline(self.t, self.values, rates, axis=1)
        return InvariantCoefficients.from_vector(spline(t))

    def rates(self, t):
        y = self(t).vector()
        return InvariantCoefficients.from_vector(np.tensordot(ode_matrix(self.alpha, self.beta), y, axes=1))

    def column(self, label):
        return self.values[LABELS.index(label)]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *LABELS])
            for k, tk in enumerate(self.t):
                w.writerow([repr(float(tk))] + [repr(float(v)) for v in self.values[:, k]])


def _check_uniform(t_grid):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2:
        raise ValueError("t_grid needs at least two points")
    steps = np.diff(t_grid)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(1.0, abs(steps[0])):
        raise ValueError("t_grid must be uniform and increasing")
    return t_grid, steps[0]


def integrate_coefficients(alpha, beta, initial, t_grid):
    """Classical RK4 on a uniform grid starting from ``initial`` at t_grid[0]."""
    t_grid, dt = _check_uniform(t_grid)
    limit = 1e-2 / max(1.0, abs(alpha), abs(beta))
    if dt > limit * (1 + 1e-12):
        raise StepTooLarge(f"step {dt:g} exceeds {limit:g}")
    M = ode_matrix(alpha, beta)
    y = np.asarray(initial.vector(), dtype=float)
    out = np.empty((5, len(t_grid)))
    out[:, 0] = y
    for k in range(1, len(t_grid)):
        k1 = M @ y
        k2 = M @ (y + 0.5 * dt * k1)
        k3 = M @ (y + 0.5 * dt * k2)
        k4 = M @ (y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[:, k] = y
    return CoefficientTrajectory(alpha, beta, t_grid, out)


def assemble_invariant(coeffs, gens):
    """I = A2 O2 + A3 O3 + A4 O4 + A6 O6 + A7 O7 at one time."""
    c = {k: complex(np.asarray(getattr(coeffs, k)).item()) for k in LABELS}
    mat = (
        c["A2"] * gens.O2.matrix
        + c["A3"] * gens.O3.matrix
        + c["A4"] * gens.O4.matrix
        + c["A6"] * gens.O6.matrix
        + c["A7"] * gens.O7.matrix
    ).tocsr()
    hermitian = all(v.imag == 0 for v in c.values()) and c["A3"] == c["A4"]
    return OperatorMatrix(mat, 2, hermitian)


def invariance_residual(source, profile, spec, grid, psi, t, dt=1e-5, analytic=False, perturb=None, diagnostic=False):
    """||[dI/dt + (1/i)(I H - H I)] psi|| / ||psi|| over interior points.

    ``dt`` is the centred-difference step for dI/dt; ``analytic=True`` uses
    the exact rates instead, isolating the spatial discretisation error.
    ``perturb`` adds constants to the coefficients (negative controls).
    ``diagnostic=True`` accepts a time-dependent c0 and differentiates the
    generators too; the result then measures how far the ansatz is from
    invariant and does not vanish under refinement.
    """
    if profile.time_dependent and not diagnostic:
        raise TimeDependentMassNotSupported(
            "dc0/dt != 0 makes dO3/dt proportional to p, outside the algebra"
        )
    if dt > 1e-4:
        raise ValueError("dt must be <= 1e-4")
    if analytic and profile.time_dependent:
        raise ValueError("analytic rates ignore the generator derivative")
    perturb = perturb or {}
    gens = generator_matrices(profile, grid, t)
    H = hamiltonian_matrix(profile, spec, grid, t)
    I_t = assemble_invariant(source(t).perturbed(**perturb), gens)
    if analytic:
        dI = assemble_invariant(source.rates(t), gens)
        dpsi = dI @ psi
    else:
        gp = generator_matrices(profile, grid, t + dt) if profile.time_dependent else gens
        gm = generator_matrices(profile, grid, t - dt) if profile.time_dependent else gens
        Ip = assemble_invariant(source(t + dt).perturbed(**perturb), gp)
        Im = assemble_invariant(source(t - dt).perturbed(**perturb), gm)
        dpsi = (Ip @ psi - Im @ psi) / (2 * dt)
    # commutator formed as a matrix first: cancellation happens entrywise
    comm = (I_t.matrix @ H.matrix - H.matrix @ I_t.matrix) @ psi
    r = dpsi - 1j * comm
    return interior_norm(grid, r) / norm(grid, psi)


def residual_report(t, h, residual):
    return json.dumps({"t": t, "h": h, "residual": residual}, sort_keys=True)


def fd_ode_residual(alpha, beta, solution, times, delta=1e-3):
    """Max |dA/dt - M A| with dA/dt from the 4th-order five-point stencil."""
    times = np.asarray(times, dtype=float)

    def y(s):
        return np.asarray(solution(s).vector(), dtype=float)

    d = (y(times - 2 * delta) - 8 * y(times - delta) + 8 * y(times + delta) - y(times + 2 * delta)) / (12 * delta)
    return float(np.max(np.abs(d - ode_matrix(alpha, beta) @ y(times))))
