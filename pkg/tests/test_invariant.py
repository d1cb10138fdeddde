import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdemlab.errors import DegenerateFrequency, StepTooLarge, TimeDependentMassNotSupported
from pdemlab.invariant import (
    ClosedFormSolution,
    InvariantCoefficients,
    InvariantConstants,
    assemble_invariant,
    closed_form_coefficients,
    fd_ode_residual,
    integrate_coefficients,
    invariance_residual,
    polynomial_coefficients,
    residual_report,
)
from pdemlab.model import Grid, MassProfile, PotentialSpec, gaussian, generator_matrices, hamiltonian_matrix
from pdemlab.timefuncs import Sinusoid, linear

C = InvariantConstants(a0=2.0)
T100 = np.linspace(0.0, 1.0, 100)


def test_initial_values():
    v = closed_form_coefficients(1.0, 1.0, C, 0.0)
    assert np.allclose(v.vector().astype(float), [0, 1, 1, 0, 0])


def test_hyperbolic_branch():
    t = np.linspace(0, 1, 11)
    v = closed_form_coefficients(1.0, 1.0, C, t)
    assert np.allclose(v.A3, np.cosh(2 * t)) and np.allclose(v.A4, np.cosh(2 * t))
    assert np.allclose(v.A6, np.sinh(2 * t)) and np.allclose(v.A7, np.sinh(2 * t))


def test_trigonometric_branch_is_bounded():
    t = np.linspace(0, 20, 2001)
    v = closed_form_coefficients(1.0, -1.0, C, t)
    assert np.allclose(v.A3, -np.cos(2 * t))
    assert np.max(np.abs(v.A3)) <= 1.0 + 1e-15
    assert np.all(np.isreal(v.A6))


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (1.0, -1.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)])
def test_closed_form_solves_odes(alpha, beta):
    consts = InvariantConstants(alpha3=0.3, alpha6=0.2, alpha7=-0.4, a0=2.0, theta0=0.1)
    assert fd_ode_residual(alpha, beta, ClosedFormSolution(alpha, beta, consts), T100) <= 1e-10


@given(
    st.floats(0.3, 2.0), st.floats(0.3, 2.0), st.sampled_from([1, -1]), st.sampled_from([1, -1]),
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 2), st.floats(-0.5, 0.5),
)
def test_closed_form_solves_odes_random(a, b, sa, sb, a3, a6, a7, a0, th):
    consts = InvariantConstants(a3, a6, a7, a0, th)
    sol = ClosedFormSolution(sa * a, sb * b, consts)
    scale = max(1.0, float(np.max(np.abs(sol(T100).vector().astype(float)))))
    assert fd_ode_residual(sa * a, sb * b, sol, T100) <= 1e-9 * scale


def test_polynomial_branch_example():
    t = np.linspace(0, 1, 5)
    v = polynomial_coefficients(1.0, 0.0, InvariantCoefficients(0.0, 0.0, 0.0, 1.0, 0.0), t)
    assert np.allclose(v.A3, t) and np.allclose(v.A4, t)
    assert np.allclose(v.A6, 1.0) and np.allclose(v.A7, t**2)
    traj = integrate_coefficients(1.0, 0.0, InvariantCoefficients(0.0, 0.0, 0.0, 1.0, 0.0), np.linspace(0, 1, 1001))
    assert np.allclose(traj.column("A7"), np.linspace(0, 1, 1001) ** 2, atol=1e-12)


def test_degenerate_frequency():
    with pytest.raises(DegenerateFrequency):
        closed_form_coefficients(1.0, 0.0, C, 0.5, polynomial_branch=False)


def test_free_case_is_constant():
    consts = InvariantConstants(alpha6=0.7, alpha7=0.3, a0=2.0)
    v = closed_form_coefficients(0.0, 0.0, consts, np.linspace(0, 1, 7))
    assert np.all(v.A2 == 0)
    for k in ("A3", "A4", "A6", "A7"):
        assert np.ptp(getattr(v, k)) == 0


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (1.0, -1.0), (1.0, 0.0)])
def test_rk4_matches_closed_form(alpha, beta):
    sol = ClosedFormSolution(alpha, beta, C)
    t = np.linspace(0, 1, 1001)
    traj = integrate_coefficients(alpha, beta, sol(0.0), t)
    exact = np.vstack([np.asarray(v, dtype=float) for v in sol(t).vector()])
    assert np.max(np.abs(traj.values - exact)) <= 1e-8


def test_rk4_conserves_a3_minus_a4():
    start = InvariantCoefficients(0.2, 1.3, -0.4, 0.5, -0.1)
    traj = integrate_coefficients(1.0, 1.0, start, np.linspace(0, 1, 1001))
    diff = traj.column("A3") - traj.column("A4")
    assert np.max(np.abs(diff - diff[0])) <= 1e-12


def test_step_too_large():
    with pytest.raises(StepTooLarge):
        integrate_coefficients(3.0, 1.0, C and closed_form_coefficients(3.0, 1.0, C, 0.0), np.linspace(0, 1, 201))
    with pytest.raises(ValueError):
        integrate_coefficients(1.0, 1.0, closed_form_coefficients(1.0, 1.0, C, 0.0), [0.0, 0.001, 0.003])


def test_trajectory_interpolation_and_csv(tmp_path):
    sol = ClosedFormSolution(1.0, 1.0, C)
    traj = integrate_coefficients(1.0, 1.0, sol(0.0), np.linspace(0, 1, 1001))
    assert traj(0.12345).A3 == pytest.approx(np.cosh(0.2469), abs=1e-9)
    traj.write_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "t,A2,A3,A4,A6,A7" and len(lines) == 1002


def _setup(n=512, profile=None, V0=0.0):
    prof = profile or MassProfile(1.0, -1.0)
    spec = PotentialSpec(prof, 1.0, V0)
    grid = Grid(0.0, 0.8, n)
    return prof, spec, grid


def test_assemble_invariant_hermiticity():
    prof, _, grid = _setup(128)
    gens = generator_matrices(prof, grid)
    I = assemble_invariant(closed_form_coefficients(1.0, 1.0, C, 0.4), gens)
    assert I.hermitian and I.hermiticity_defect() == 0.0
    J = assemble_invariant(closed_form_coefficients(1.0, 1.0, InvariantConstants(alpha3=0.5, a0=2.0), 0.4), gens)
    assert not J.hermitian and J.hermiticity_defect() > 0
    Z = assemble_invariant(InvariantCoefficients(0, 0, 0, 0, 0), gens)
    assert Z.matrix.count_nonzero() == 0


def test_free_invariant_commutes_exactly():
    prof = MassProfile(0.0, -0.5)
    grid = Grid(0.0, 1.0, 128)
    H = hamiltonian_matrix(prof, PotentialSpec(prof, 0.0, 0.7), grid)
    I = assemble_invariant(InvariantCoefficients(0, 0, 0, 0, 1.0), generator_matrices(prof, grid))
    assert abs(I.matrix @ H.matrix - H.matrix @ I.matrix).max() == 0.0


def test_free_residual_vanishes():
    prof = MassProfile(0.0, -0.5)
    spec = PotentialSpec(prof, 0.0, 0.0)
    grid = Grid(0.0, 1.0, 256)
    sol = ClosedFormSolution(0.0, 0.0, InvariantConstants(alpha6=0.3, alpha7=1.0, a0=0.0))
    assert invariance_residual(sol, prof, spec, grid, gaussian(grid, 0.5, 0.06), 0.3) <= 1e-10


def test_residual_convergence_and_control():
    sol = ClosedFormSolution(1.0, 1.0, C)
    res = {}
    for n in (512, 1024):
        prof, spec, grid = _setup(n)
        psi = gaussian(grid)
        res[n] = invariance_residual(sol, prof, spec, grid, psi, 0.3)
    assert res[512] / res[1024] == pytest.approx(4.0, rel=0.2)
    prof, spec, grid = _setup(1024)
    bad = invariance_residual(sol, prof, spec, grid, gaussian(grid), 0.3, perturb={"A6": 0.1})
    assert bad >= 10 * res[1024]


def test_analytic_rates_agree_with_differencing():
    sol = ClosedFormSolution(1.0, 1.0, C)
    prof, spec, grid = _setup(512)
    psi = gaussian(grid)
    a = invariance_residual(sol, prof, spec, grid, psi, 0.3, analytic=True)
    b = invariance_residual(sol, prof, spec, grid, psi, 0.3)
    assert a == pytest.approx(b, rel=1e-6)


def test_time_dependent_V0_cancels():
    sol = ClosedFormSolution(1.0, 1.0, C)
    prof, spec, grid = _setup(512)
    _, spec_t, _ = _setup(512, V0=Sinusoid(0.0, 1.0, 1.0, 0.0))
    psi = gaussian(grid)
    assert invariance_residual(sol, prof, spec_t, grid, psi, 0.3) == pytest.approx(
        invariance_residual(sol, prof, spec, grid, psi, 0.3), rel=1e-7
    )


def test_residual_preconditions():
    sol = ClosedFormSolution(1.0, 1.0, C)
    prof, spec, grid = _setup(128, profile=MassProfile(1.0, linear(-1.0, 0.1)))
    with pytest.raises(TimeDependentMassNotSupported):
        invariance_residual(sol, prof, spec, grid, gaussian(grid), 0.3)
    prof, spec, grid = _setup(128)
    with pytest.raises(ValueError):
        invariance_residual(sol, prof, spec, grid, gaussian(grid), 0.3, dt=1e-3)


def test_drifting_c0_residual_does_not_converge():
    sol = ClosedFormSolution(1.0, 1.0, C)
    out = []
    for n in (256, 512, 1024):
        prof, spec, grid = _setup(n, profile=MassProfile(1.0, linear(-1.0, 0.5)))
        out.append(invariance_residual(sol, prof, spec, grid, gaussian(grid), 0.1, diagnostic=True))
    assert min(out) > 1.0
    assert out[1] / out[2] < 1.5
    # zero rate reduces to the ordinary residual
    prof, spec, grid = _setup(256, profile=MassProfile(1.0, linear(-1.0, 0.0)))
    base, _, _ = _setup(256)
    assert invariance_residual(sol, prof, spec, grid, gaussian(grid), 0.1, diagnostic=True) == pytest.approx(
        invariance_residual(sol, base, spec, grid, gaussian(grid), 0.1), rel=1e-9
    )


def test_residual_report_json():
    assert residual_report(0.3, 0.01, 1e-3) == '{"h": 0.01, "residual": 0.001, "t": 0.3}'
