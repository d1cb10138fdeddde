"""Crank-Nicolson propagation and Lewis-Riesenfeld diagnostics."""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh, solve_banded

from .errors import SingularSolve, TimeDependentMassNotSupported
from .invariant import assemble_invariant
from .model import (
    OperatorMatrix,
    expectation,
    generator_matrices,
    hamiltonian_matrix,
    inner,
    interior_fraction,
    norm,
    normalize,
)


@dataclass(frozen=True)
class PropagationConfig:
    dt: float
    t0: float = 0.0
    t1: float = 1.0
    stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        steps = (self.t1 - self.t0) / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError("(t1 - t0) / dt must be an integer")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def n_steps(self):
        return int(round((self.t1 - self.t0) / self.dt))


def step(psi, H_mid, dt):
    """One Cayley step: (1 + i H dt/2) psi' = (1 - i H dt/2) psi."""
    ab = H_mid.banded() * (0.5j * dt)
    b = H_mid.bandwidth
    ab[b, :] += 1.0
    rhs = psi - 0.5j * dt * (H_mid @ psi)
    try:
        return solve_banded((b, b), ab, rhs, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise SingularSolve(str(exc)) from exc


@dataclass
class Trajectory:
    t: list = field(default_factory=list)
    states: list = field(default_factory=list)


def evolve(psi0, config, hamiltonian):
    """Repeated Cayley steps with H evaluated at each step midpoint.

    ``hamiltonian`` is an :class:`OperatorMatrix` (time independent) or a
    callable ``t -> OperatorMatrix``.  States are kept every ``stride`` steps
    and at the final time.
    """
    fixed = isinstance(hamiltonian, OperatorMatrix)
    traj = Trajectory([config.t0], [np.array(psi0, dtype=complex)])
    psi = traj.states[0]
    n = config.n_steps
    for k in range(n):
        t_mid = config.t0 + (k + 0.5) * config.dt
        H = hamiltonian if fixed else hamiltonian(t_mid)
        psi = step(psi, H, config.dt)
        if (k + 1) % config.stride == 0 or k + 1 == n:
            traj.t.append(config.t0 + (k + 1) * config.dt)
            traj.states.append(psi)
    return traj


def hamiltonian_source(profile, spec, grid):
    """``t -> H(t)``; a single matrix when nothing depends on time."""
    if not profile.time_dependent and spec.V0.is_constant:
        return hamiltonian_matrix(profile, spec, grid, 0.0)
    return lambda t: hamiltonian_matrix(profile, spec, grid, t)


def interior_eigenstates(op, grid, count=1, min_fraction=0.99, margin=5, hermitian_check=True):
    """Lowest eigenpairs of ``op`` whose states avoid the walls.

    Dense Hermitian eigensolve of the interior block; eigenvectors with less
    than ``min_fraction`` of their norm at least ``margin`` cells from a wall
    are discarded.
    """
    if hermitian_check and op.hermiticity_defect() != 0.0:
        raise ValueError("operator is not exactly Hermitian")
    vals, vecs = eigh(op.interior_block())
    out = []
    for k in range(len(vals)):
        psi = np.zeros(grid.n, dtype=complex)
        psi[1:-1] = vecs[:, k]
        if interior_fraction(grid, psi, margin) >= min_fraction:
            out.append((float(vals[k]), normalize(grid, psi)))
            if len(out) == count:
                break
    return out


@dataclass
class LRSeries:
    t: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    def drift(self):
        """max |<I(t)> - <I(t0)>|."""
        return float(np.max(np.abs(self.mean - self.mean[0])))

    def relative_drift(self):
        return self.drift() / max(abs(self.mean[0]), 1e-300)


def lr_diagnostic(trajectory, source, profile, grid, perturb=None, drop=()):
    """<I(t)> and Var I(t) along a propagated trajectory.

    ``perturb`` adds constants to coefficients and ``drop`` zeroes them; both
    exist for negative controls.
    """
    if profile.time_dependent:
        raise TimeDependentMassNotSupported("LR diagnostic needs a constant c0")
    gens = generator_matrices(profile, grid, 0.0)
    perturb = perturb or {}
    means, variances = [], []
    for t, psi in zip(trajectory.t, trajectory.states):
        coeffs = source(t).perturbed(**perturb)
        if drop:
            coeffs = coeffs.perturbed(**{k: -getattr(coeffs, k) for k in drop})
        I = assemble_invariant(coeffs, gens)
        if not I.hermitian:
            raise ValueError("LR diagnostic needs a Hermitian invariant (alpha3 = 0)")
        Ipsi = I @ psi
        nn = np.real(inner(grid, psi, psi))
        mean = np.real(inner(grid, psi, Ipsi)) / nn
        second = np.real(inner(grid, Ipsi, Ipsi)) / nn
        means.append(mean)
        variances.append(second - mean**2)
    return LRSeries(np.array(trajectory.t), np.array(means), np.array(variances))


def write_trajectory_csv(path, grid, trajectory, hamiltonian, series=None):
    """Columns t, norm, re_H, re_I, var_I."""
    fixed = isinstance(hamiltonian, OperatorMatrix)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "norm", "re_H", "re_I", "var_I"])
        for k, (t, psi) in enumerate(zip(trajectory.t, trajectory.states)):
            H = hamiltonian if fixed else hamiltonian(t)
            eH = np.real(expectation(grid, H, psi))
            re_I = repr(float(series.mean[k])) if series is not None else ""
            var_I = repr(float(series.variance[k])) if series is not None else ""
            w.writerow([repr(float(t)), repr(norm(grid, psi)), repr(float(eH)), re_I, var_I])
