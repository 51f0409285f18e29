"""Backward Riccati flows: analytic solutions, oracles, and guards."""

import numpy as np
import pytest

from mflqg.model import GameSpec, TimeGrid, embed_perturbation
from mflqg.riccati import (GridMismatchError, RegularityError,
                           RiccatiSolution, assemble_dg_weights,
                           check_comparison, check_strong_regularity,
                           riccati_residual, solve_control_riccati,
                           solve_game_riccati, solve_mean_riccati,
                           solve_riccati_pair, write_riccati_csv)

from conftest import make_example52, make_example61, random_instance


def _analytic_61(eps):
    """Closed form of the embedded example: both paths -(1+eps)/(s+eps)."""
    return lambda s: -(1.0 + eps) / (s + eps)


# ----------------------------------------------------- analytic example

@pytest.mark.parametrize("eps", [1.0, 0.25])
def test_example61_matches_closed_form(eps):
    spec = embed_perturbation(make_example61(), eps)
    grid = TimeGrid(1.0, 1000)
    P, Pi = solve_riccati_pair(spec, grid)
    exact = _analytic_61(eps)(grid.nodes)
    assert np.max(np.abs(P.values[:, 0, 0] - exact)) <= 1e-6
    assert np.max(np.abs(Pi.values[:, 0, 0] - exact)) <= 1e-6
    assert P.strongly_regular
    assert P.asymmetry_sup <= 1e-12


def test_example61_margins_are_analytic():
    # player margins of the shifted game: R11+eps, and -(R22-eps+P)
    eps = 1.0
    spec = embed_perturbation(make_example61(), eps)
    grid = TimeGrid(1.0, 200)
    P, _ = solve_riccati_pair(spec, grid)
    rep = check_strong_regularity(P, spec)
    s = grid.nodes
    Pex = _analytic_61(eps)(s)
    np.testing.assert_allclose(rep.margin_1, np.full_like(s, 1.0 + eps),
                               atol=1e-9)
    np.testing.assert_allclose(rep.margin_2, eps - Pex, atol=1e-8)
    np.testing.assert_allclose(rep.margin_2_bar, (1.0 + eps) - Pex,
                               atol=1e-8)
    assert rep.passed


def test_pair_agrees_with_separate_game_solve():
    spec = embed_perturbation(make_example61(), 0.5)
    grid = TimeGrid(1.0, 400)
    P_pair, Pi = solve_riccati_pair(spec, grid)
    P_solo = solve_game_riccati(spec, grid)
    assert np.max(np.abs(P_pair.values - P_solo.values)) <= 1e-9
    assert Pi.companion_values is not None
    np.testing.assert_allclose(Pi.companion_values, P_pair.values,
                               atol=1e-12)


def test_mean_equation_reduces_without_mean_field():
    # with every barred block zero the two equations coincide
    spec = GameSpec.from_matrices(
        n=2, m1=1, m2=1, T=1.0,
        A=[[0.1, 0.2], [0.0, -0.3]], B1=[[1.0], [0.5]], B2=[[0.2], [1.0]],
        C=[[0.3, 0.0], [0.1, 0.2]], D1=[[0.4], [0.0]],
        Q=np.eye(2), R11=[[2.0]], R22=[[-2.0]], G=0.5 * np.eye(2),
    )
    P, Pi = solve_riccati_pair(spec, TimeGrid(1.0, 300))
    assert np.max(np.abs(P.values - Pi.values)) <= 1e-11


# ------------------------------------------------- independent oracle

def test_control_riccati_against_handwritten_rk4():
    # scalar minimization problem with an independently coded integrator:
    #   -P' = 2AP + C^2 P + Q - (B P)^2 / R11,  P(T) = G
    A, C, Q, B, R, G = 1.0, 0.5, 1.0, 1.0, 2.0, 1.0
    spec = GameSpec.from_matrices(
        n=1, m1=1, m2=1, T=1.0,
        A=[[A]], C=[[C]], B1=[[B]], Q=[[Q]], R11=[[R]],
        R22=[[-1.0]], G=[[G]],
    )
    grid = TimeGrid(1.0, 500)
    sol = solve_control_riccati(spec, grid, player=1)

    def f(p):
        return -(2.0 * A * p + C * C * p + Q - (B * p) ** 2 / R)

    steps = 100_000
    h = 1.0 / steps
    p = G
    oracle = np.empty(steps + 1)
    oracle[steps] = p
    for k in range(steps, 0, -1):     # integrate dP/ds backward
        k1 = f(p)
        k2 = f(p - 0.5 * h * k1)
        k3 = f(p - 0.5 * h * k2)
        k4 = f(p - h * k3)
        p = p - (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        oracle[k - 1] = p
    at_nodes = oracle[::steps // grid.N]
    assert np.max(np.abs(sol.values[:, 0, 0] - at_nodes)) <= 1e-8


def test_comparison_brackets_game_solution():
    rng = np.random.default_rng(3)
    spec = embed_perturbation(random_instance(rng), 0.5)
    grid = TimeGrid(1.0, 300)
    P, _ = solve_riccati_pair(spec, grid)
    P1 = solve_control_riccati(spec, grid, 1)
    P2 = solve_control_riccati(spec, grid, 2)
    rep = check_comparison(P, P1, P2)
    assert rep.passed
    assert rep.margin_lower.min() >= -1e-9
    assert rep.margin_upper.min() >= -1e-9
    # the brackets touch at the shared terminal value
    assert abs(rep.margin_lower[-1]) <= 1e-12
    assert abs(rep.margin_upper[-1]) <= 1e-12


# --------------------------------------------------------- residuals

def test_residual_of_analytic_path_vanishes_with_grid():
    eps = 0.5
    spec = embed_perturbation(make_example61(), eps)
    fn = _analytic_61(eps)
    res = []
    for N in (100, 200, 400):
        sol = RiccatiSolution.from_callable(TimeGrid(1.0, N),
                                            lambda t: [[fn(t)]])
        res.append(riccati_residual(sol, spec, "Ric1"))
    assert res[0] <= 5e-3
    # central differences are second order; 4x the grid shrinks by ~16
    assert res[2] <= res[0] / 10.0


def test_residual_flags_wrong_path():
    spec = embed_perturbation(make_example61(), 0.5)
    sol = RiccatiSolution.from_constant(TimeGrid(1.0, 100), [[-1.0]])
    assert riccati_residual(sol, spec, "Ric1") > 0.1


def test_mean_residual_needs_companion():
    spec = embed_perturbation(make_example61(), 0.5)
    grid = TimeGrid(1.0, 100)
    P, Pi = solve_riccati_pair(spec, grid)
    assert riccati_residual(Pi, spec, "Ric2") <= 5e-3
    with pytest.raises(ValueError, match="companion"):
        riccati_residual(P, spec, "Ric2")
    with pytest.raises(ValueError, match="unknown"):
        riccati_residual(P, spec, "Ric3")


def test_dg_weights_scalar_identity():
    eps = 1.0
    spec = embed_perturbation(make_example61(), eps)
    grid = TimeGrid(1.0, 100)
    P, _ = solve_riccati_pair(spec, grid)
    dgw = assemble_dg_weights(spec, P, grid)
    Pex = _analytic_61(eps)(grid.nodes)
    # barred stacked weight: diag(R11+eps, R22-eps+R22bar + P)
    np.testing.assert_allclose(dgw.sigma_bar[:, 0, 0], 2.0, atol=1e-9)
    np.testing.assert_allclose(dgw.sigma_bar[:, 1, 1], Pex - 2.0, atol=1e-8)
    np.testing.assert_allclose(dgw.sigma_bar[:, 0, 1], 0.0, atol=1e-12)


# ----------------------------------------------------------- failure

def test_unembedded_spread_game_escapes():
    with pytest.raises(RegularityError):
        solve_riccati_pair(make_example61(), TimeGrid(1.0, 100))


def test_singular_weight_raises_at_terminal_time():
    with pytest.raises(RegularityError) as info:
        solve_riccati_pair(make_example52(), TimeGrid(1.0, 100))
    assert info.value.t == pytest.approx(1.0)


def test_mean_solver_grid_and_consistency_guards():
    spec = embed_perturbation(make_example61(), 0.5)
    grid = TimeGrid(1.0, 100)
    P, _ = solve_riccati_pair(spec, grid)
    with pytest.raises(GridMismatchError):
        solve_mean_riccati(spec, P, TimeGrid(1.0, 200))
    other = embed_perturbation(make_example61(), 1.0)
    P_other, _ = solve_riccati_pair(other, grid)
    with pytest.raises(ValueError, match="does not solve"):
        solve_mean_riccati(spec, P_other, grid)
    Pi = solve_mean_riccati(spec, P, grid)
    assert np.max(np.abs(Pi.values[:, 0, 0]
                         - _analytic_61(0.5)(grid.nodes))) <= 1e-6


# ---------------------------------------------------------------- csv

def test_write_riccati_csv(tmp_path):
    spec = embed_perturbation(make_example61(), 1.0)
    grid = TimeGrid(1.0, 50)
    P, _ = solve_riccati_pair(spec, grid)
    out = tmp_path / "p.csv"
    write_riccati_csv(P, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,P_0_0"
    assert len(lines) == grid.N + 2
    first = lines[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == pytest.approx(P.values[0, 0, 0])
    # byte-for-byte reproducible
    out2 = tmp_path / "p2.csv"
    write_riccati_csv(P, out2)
    assert out.read_bytes() == out2.read_bytes()
