"""Constrained PDEM family, the 1-D Dirichlet grid and Hermitian grid operators.

Units are dimensionless with hbar = 1.  The inverse mass is
``mu(x, t) = 1/(2 m) = -(c0(t) + alpha x)``.

All operators are ``N x N`` sparse matrices whose first and last rows and
columns vanish, so the boundary entries of a state stay exactly zero.  The
momentum is the central difference ``(P psi)_j = -i (psi_{j+1} - psi_{j-1}) / 2h``.
A sandwich ``P diag(w) P`` couples only sites of equal parity; the two
sublattices see the walls differently, and the odd one would act as if it
had a reflecting (Neumann) end.  :func:`sandwich` adds the Dirichlet closure
``w_0 / 2h^2`` and ``w_{N-1} / 2h^2`` on the two diagonal entries next to
the walls.  That is the odd-reflection ghost ``psi_{-1} = -psi_1``, and it
keeps the operator exactly Hermitian and positive semidefinite for ``w > 0``.
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DomainViolation, PoleAtX
from .timefuncs import as_time_function

POLE_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("grid needs at least 8 points")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def h(self):
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def length(self):
        return self.x_max - self.x_min

    def interior_mask(self, margin=5):
        """Points at least ``margin`` cells away from either wall."""
        idx = np.arange(self.n)
        return (idx >= margin) & (idx <= self.n - 1 - margin)

    def shifted(self, dx):
        return Grid(self.x_min + dx, self.x_max + dx, self.n)

    def refined(self, n):
        return Grid(self.x_min, self.x_max, n)


@dataclass(frozen=True)
class MassProfile:
    """m(x, t) = -1 / (2 (c0(t) + alpha x))."""

    alpha: float
    c0: object = -1.0

    def __post_init__(self):
        object.__setattr__(self, "c0", as_time_function(self.c0))

    @property
    def time_dependent(self):
        return not self.c0.is_constant

    def inverse_mass(self, x, t=0.0):
        """mu = 1/(2m) = -(c0 + alpha x)."""
        return -(self.c0(t) + self.alpha * np.asarray(x, dtype=float))

    def m0(self, t=0.0):
        return -1.0 / (2.0 * self.c0(t))

    def length_scale(self, t=0.0):
        return self.c0(t) / self.alpha

    def check_domain(self, grid, t=0.0):
        mu = self.inverse_mass(grid.x, t)
        if np.any(mu <= 0):
            bad = grid.x[mu <= 0][0]
            raise DomainViolation(f"1/(2m) <= 0 at x={bad:g}, t={t:g}")
        return mu


def mass_at(profile, x, t=0.0):
    denom = profile.c0(t) + profile.alpha * x
    if abs(denom) < POLE_TOL:
        raise PoleAtX(f"mass profile has a pole at x={x:g}, t={t:g}")
    return -1.0 / (2.0 * denom)


@dataclass(frozen=True)
class PotentialSpec:
    """V(x, t) = V0(t) + beta x - alpha^2 / (c0(t) + alpha x)."""

    profile: MassProfile
    beta: float = 0.0
    V0: object = 0.0

    def __post_init__(self):
        object.__setattr__(self, "V0", as_time_function(self.V0))

    @property
    def alpha(self):
        return self.profile.alpha

    def v_eff(self, x, t=0.0):
        return self.V0(t) + self.beta * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Potentials:
    V: float
    V_inertia: float
    v_eff: float


def potentials_at(spec, x, t=0.0):
    a = spec.alpha
    denom = spec.profile.c0(t) + a * x
    if abs(denom) < POLE_TOL:
        raise PoleAtX(f"potential has a pole at x={x:g}, t={t:g}")
    V = spec.V0(t) + spec.beta * x - a * a / denom
    # -(1/2m)(m'/m)^2 with m'/m = -alpha/denom and 1/2m = -denom
    V_inertia = a * a / denom
    return Potentials(V=V, V_inertia=V_inertia, v_eff=V + V_inertia)


# --- grid operators ----------------------------------------------------------

@dataclass(frozen=True)
class OperatorMatrix:
    matrix: object
    bandwidth: int
    hermitian: bool = False

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(
                (self.matrix @ other.matrix).tocsr(), self.bandwidth + other.bandwidth
            )
        return self.matrix @ other

    def __add__(self, other):
        return OperatorMatrix(
            (self.matrix + other.matrix).tocsr(),
            max(self.bandwidth, other.bandwidth),
            self.hermitian and other.hermitian,
        )

    def __sub__(self, other):
        return OperatorMatrix(
            (self.matrix - other.matrix).tocsr(),
            max(self.bandwidth, other.bandwidth),
            self.hermitian and other.hermitian,
        )

    def scale(self, c):
        real = np.isreal(c)
        return OperatorMatrix((self.matrix * c).tocsr(), self.bandwidth, self.hermitian and real)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def H(self):
        return OperatorMatrix(self.matrix.conj().T.tocsr(), self.bandwidth, self.hermitian)

    def toarray(self):
        return self.matrix.toarray()

    def hermiticity_defect(self):
        d = (self.matrix - self.matrix.conj().T).tocoo()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0

    def interior_block(self):
        """Dense matrix restricted to the non-boundary unknowns."""
        return self.matrix[1:-1, 1:-1].toarray()

    def banded(self):
        """LAPACK general band storage (rows = 2*bandwidth + 1)."""
        b = self.bandwidth
        n = self.shape[0]
        ab = np.zeros((2 * b + 1, n), dtype=complex)
        coo = self.matrix.tocoo()
        off = coo.col - coo.row
        if np.any(np.abs(off[coo.data != 0]) > b):
            raise ValueError("matrix exceeds its declared bandwidth")
        keep = np.abs(off) <= b
        # LAPACK layout: ab[b + i - j, j] = a[i, j]
        np.add.at(ab, (b - off[keep], coo.col[keep]), coo.data[keep])
        return ab


def _interior_diag(grid, values):
    v = np.array(np.broadcast_to(values, (grid.n,)), dtype=complex)
    v[0] = v[-1] = 0.0
    return sp.diags(v, 0, format="csr")


def diagonal(grid, values, hermitian=True):
    return OperatorMatrix(_interior_diag(grid, values), 0, hermitian)


def momentum_matrix(grid):
    """Central-difference p = -i d/dx with Dirichlet rows; Hermitian."""
    n = grid.n
    c = 1j / (2.0 * grid.h)
    upper = np.full(n - 1, -c)
    lower = np.full(n - 1, c)
    # boundary rows and columns are zero
    upper[0] = upper[-1] = 0.0
    lower[0] = lower[-1] = 0.0
    mat = sp.diags([lower, upper], [-1, 1], shape=(n, n), format="csr", dtype=complex)
    return OperatorMatrix(mat, 1, True)


def sandwich(grid, weights, P=None):
    """P diag(w) P plus the Dirichlet closure next to each wall."""
    P = P or momentum_matrix(grid)
    w = np.array(np.broadcast_to(weights, (grid.n,)), dtype=float)
    core = P.matrix @ sp.diags(w.astype(complex)) @ P.matrix
    closure = np.zeros(grid.n, dtype=complex)
    closure[1] = w[0] / (2.0 * grid.h**2)
    closure[-2] = w[-1] / (2.0 * grid.h**2)
    mat = (core + sp.diags(closure)).tocsr()
    return OperatorMatrix(mat, 2, True)


def kinetic_matrix(profile, grid, t=0.0):
    mu = profile.check_domain(grid, t)
    return sandwich(grid, mu)


def hamiltonian_matrix(profile, spec, grid, t=0.0):
    """H = P mu P + v_eff with v_eff = V + V_inertia = V0 + beta x."""
    kin = kinetic_matrix(profile, grid, t)
    v = spec.v_eff(grid.x, t)
    return kin + diagonal(grid, v)


@dataclass(frozen=True)
class Generators:
    O2: OperatorMatrix
    O3: OperatorMatrix
    O4: OperatorMatrix
    O6: OperatorMatrix
    O7: OperatorMatrix

    def as_dict(self):
        return {"O2": self.O2, "O3": self.O3, "O4": self.O4, "O6": self.O6, "O7": self.O7}


def generator_matrices(profile, grid, t=0.0):
    mu = profile.check_domain(grid, t)
    P = momentum_matrix(grid)
    M = _interior_diag(grid, mu)
    return Generators(
        O2=diagonal(grid, grid.x),
        O3=OperatorMatrix((P.matrix @ M).tocsr(), 1, False),
        O4=OperatorMatrix((M @ P.matrix).tocsr(), 1, False),
        O6=OperatorMatrix(M, 0, True),
        O7=sandwich(grid, mu, P),
    )


# --- states ----------------------------------------------------------------------

def inner(grid, phi, psi):
    return grid.h * np.vdot(phi, psi)


def norm(grid, psi):
    return float(np.sqrt(np.real(inner(grid, psi, psi))))


def normalize(grid, psi):
    return psi / norm(grid, psi)


def gaussian(grid, x0=0.4, sigma=0.06, k0=0.0):
    """Normalised exp(-(x-x0)^2 / 2 sigma^2 + i k0 x) with zero boundary entries."""
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (2 * sigma**2) + 1j * k0 * x)
    psi[0] = psi[-1] = 0.0
    return normalize(grid, psi)


def interior_norm(grid, psi, margin=5):
    mask = grid.interior_mask(margin)
    return float(np.sqrt(grid.h * np.sum(np.abs(psi[mask]) ** 2)))


def interior_fraction(grid, psi, margin=5):
    """Share of |psi|^2 carried by points at least ``margin`` cells from a wall."""
    total = np.sum(np.abs(psi) ** 2)
    return float(np.sum(np.abs(psi[grid.interior_mask(margin)]) ** 2) / total)


def expectation(grid, op, psi):
    return inner(grid, psi, op @ psi) / inner(grid, psi, psi)


# --- serialisation -----------------------------------------------------------------

def write_state_csv(path, grid, psi):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "re_psi", "im_psi"])
        for xv, z in zip(grid.x, psi):
            w.writerow([repr(float(xv)), repr(float(z.real)), repr(float(z.imag))])


def read_state_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = data[:, 0]
    grid = Grid(float(x[0]), float(x[-1]), len(x))
    return grid, data[:, 1] + 1j * data[:, 2]


def write_operator_csv(path, op):
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "re", "im"])
        for k in order:
            z = complex(coo.data[k])
            w.writerow([int(coo.row[k]), int(coo.col[k]), repr(z.real), repr(z.imag)])


def read_operator_csv(path, n, bandwidth, hermitian=False):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    mat = sp.coo_matrix(
        (data[:, 2] + 1j * data[:, 3], (data[:, 0].astype(int), data[:, 1].astype(int))),
        shape=(n, n),
    ).tocsr()
    return OperatorMatrix(mat, bandwidth, hermitian)
