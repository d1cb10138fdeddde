import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import eigh

from pdemlab.errors import DomainViolation, PoleAtX
from pdemlab.model import (
    Grid,
    MassProfile,
    PotentialSpec,
    gaussian,
    generator_matrices,
    hamiltonian_matrix,
    interior_norm,
    kinetic_matrix,
    mass_at,
    momentum_matrix,
    norm,
    potentials_at,
    read_operator_csv,
    read_state_csv,
    sandwich,
    write_operator_csv,
    write_state_csv,
)
from pdemlab.timefuncs import linear

PROFILE = MassProfile(1.0, -1.0)
SPEC = PotentialSpec(PROFILE, 1.0, 0.0)


def test_grid_spacing_and_validation():
    g = Grid(0.0, 0.8, 9)
    assert g.h == pytest.approx(0.1)
    assert g.x[-1] == 0.8
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 7)
    with pytest.raises(ValueError):
        Grid(1.0, 0.0, 16)


def test_mass_at_values():
    assert mass_at(PROFILE, 0.0) == pytest.approx(0.5)
    with pytest.raises(PoleAtX):
        mass_at(PROFILE, 1.0)
    assert PROFILE.m0() == pytest.approx(0.5)
    assert PROFILE.length_scale() == -1.0


def test_mass_gradient_identity():
    errs = []
    for n in (257, 513):
        g = Grid(0.0, 0.8, n)
        m = np.array([mass_at(PROFILE, x) for x in g.x])
        dm = (m[2:] - m[:-2]) / (2 * g.h)
        errs.append(np.max(np.abs(dm / (2 * m[1:-1] ** 2) - 1.0)))
    assert errs[0] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_potentials_at_values():
    p = potentials_at(PotentialSpec(PROFILE, 0.0, 0.0), 0.0)
    assert (p.V_inertia, p.V, p.v_eff) == pytest.approx((-1.0, 1.0, 0.0))
    p = potentials_at(PotentialSpec(PROFILE, 2.0, 3.0), 0.5)
    assert p.v_eff == pytest.approx(4.0)
    with pytest.raises(PoleAtX):
        potentials_at(SPEC, 1.0)


@given(st.floats(0.0, 0.8), st.floats(-2, 2), st.floats(-2, 2))
def test_effective_potential_reconstruction(x, beta, v0):
    spec = PotentialSpec(PROFILE, beta, v0)
    p = potentials_at(spec, x)
    target = v0 + beta * x
    assert abs(p.v_eff - target) <= 1e-12 * max(1.0, abs(p.V), abs(p.V_inertia))


def test_domain_violation():
    with pytest.raises(DomainViolation):
        kinetic_matrix(PROFILE, Grid(0.0, 1.2, 64))
    with pytest.raises(DomainViolation):
        kinetic_matrix(MassProfile(1.0, linear(-1.0, 1.0)), Grid(0.0, 0.8, 64), t=0.5)


def test_momentum_stencil():
    g = Grid(0.0, 1.0, 129)
    P = momentum_matrix(g)
    assert P.hermiticity_defect() == 0.0
    const = np.ones(g.n, dtype=complex)
    const[0] = const[-1] = 0
    assert np.max(np.abs((P @ const)[2:-2])) == 0.0
    errs = []
    for n in (129, 257):
        g = Grid(0.0, 1.0, n)
        psi = np.sin(2 * np.pi * g.x)
        exact = -1j * 2 * np.pi * np.cos(2 * np.pi * g.x)
        errs.append(np.max(np.abs((momentum_matrix(g) @ psi - exact)[1:-1])))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_hamiltonian_hermitian_and_psd():
    g = Grid(0.0, 0.8, 256)
    H = hamiltonian_matrix(PROFILE, SPEC, g)
    assert H.hermiticity_defect() == 0.0
    assert H.bandwidth == 2
    kin = kinetic_matrix(PROFILE, g)
    assert eigh(kin.interior_block(), eigvals_only=True)[0] >= -1e-10


def test_box_ground_state():
    errs = []
    for n in (256, 512):
        g = Grid(0.0, 1.0, n)
        H = hamiltonian_matrix(MassProfile(0.0, -0.5), PotentialSpec(MassProfile(0.0, -0.5)), g)
        E0 = eigh(H.interior_block(), eigvals_only=True, subset_by_index=(0, 0))[0]
        errs.append(E0 - np.pi**2 / 2)
    assert abs(errs[0]) < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)


def test_generator_adjoint_pairing():
    g = Grid(0.0, 0.8, 128)
    gens = generator_matrices(PROFILE, g)
    assert abs(gens.O3.matrix.conj().T - gens.O4.matrix).max() == 0.0
    for name in ("O2", "O6", "O7"):
        assert getattr(gens, name).hermiticity_defect() == 0.0
    sym = (gens.O3 + gens.O4).scale(0.5)
    d = sym.matrix - sym.matrix.conj().T
    assert abs(d).max() == 0.0


def _commutator_rows(n):
    g = Grid(0.0, 0.8, n)
    gens = generator_matrices(PROFILE, g)
    H = hamiltonian_matrix(PROFILE, SPEC, g)
    psi = gaussian(g)

    def comm(A):
        return H @ (A @ psi) - A @ (H @ psi)

    s = gens.O3 @ psi + gens.O4 @ psi
    a, b = PROFILE.alpha, SPEC.beta
    rows = {
        "O2": comm(gens.O2) + 1j * s,
        "O3": comm(gens.O3) - 1j * a * (gens.O7 @ psi) - 1j * b * (gens.O6 @ psi),
        "O6": comm(gens.O6) - 1j * a * s,
        "O7": comm(gens.O7) - 1j * b * s,
    }
    return {k: interior_norm(g, v) / norm(g, psi) for k, v in rows.items()}


def test_grid_commutators_converge_at_second_order():
    coarse, fine = _commutator_rows(512), _commutator_rows(1024)
    for k in coarse:
        assert coarse[k] / fine[k] == pytest.approx(4.0, rel=0.2), k


@given(st.lists(st.floats(0.1, 3.0), min_size=12, max_size=12))
def test_sandwich_is_hermitian_psd(weights):
    g = Grid(0.0, 1.0, 12)
    S = sandwich(g, np.array(weights))
    assert S.hermiticity_defect() == 0.0
    assert eigh(S.interior_block(), eigvals_only=True)[0] > 0


@given(st.floats(-1.5, -0.9), st.floats(-1.0, 1.0))
def test_hamiltonian_hermitian_for_family(c0, alpha):
    prof = MassProfile(alpha, c0)
    g = Grid(0.0, 0.8, 32)
    if np.any(prof.inverse_mass(g.x) <= 0):
        return
    H = hamiltonian_matrix(prof, PotentialSpec(prof, 0.5, 0.2), g)
    assert H.hermiticity_defect() == 0.0


def test_banded_layout_round_trip():
    g = Grid(0.0, 0.8, 20)
    H = hamiltonian_matrix(PROFILE, SPEC, g)
    ab = H.banded()
    dense = H.toarray()
    b = H.bandwidth
    for i in range(g.n):
        for j in range(max(0, i - b), min(g.n, i + b + 1)):
            assert ab[b + i - j, j] == dense[i, j]


def test_gaussian_boundary_and_norm():
    g = Grid(0.0, 0.8, 256)
    psi = gaussian(g, k0=10.0)
    assert psi[0] == 0 and psi[-1] == 0
    assert norm(g, psi) == pytest.approx(1.0, abs=1e-14)


def test_csv_round_trips(tmp_path):
    g = Grid(0.0, 0.8, 32)
    psi = gaussian(g, k0=10.0)
    write_state_csv(tmp_path / "s.csv", g, psi)
    g2, psi2 = read_state_csv(tmp_path / "s.csv")
    assert g2 == g or np.allclose(g2.x, g.x)
    assert np.array_equal(psi2, psi)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "x,re_psi,im_psi"
    H = hamiltonian_matrix(PROFILE, SPEC, g)
    write_operator_csv(tmp_path / "h.csv", H)
    H2 = read_operator_csv(tmp_path / "h.csv", g.n, H.bandwidth, True)
    assert abs(H2.matrix - H.matrix).max() == 0.0
