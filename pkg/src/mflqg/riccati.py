"""Backward Riccati solvers for the zero-sum mean-field LQ game.

Three differential Riccati equations drive the synthesis:

* the game equation for P, which couples both control channels
  through the stacked weights Sigma = R + D' P D;
* one single-channel equation per player (the control equations),
  whose solutions sandwich P when the game is uniformly
  convex-concave;
* the mean equation for Pi, obtained from the barred (coefficient +
  mean-field) data and the already-solved P, with weights
  Sigma_bar = R + Rbar + (D+Dbar)' P (D+Dbar).

All solvers integrate backward from the terminal weight with classical
RK4 on the output grid, refining intervals by step doubling where the
flow is fast (terminal layers at small convexification parameters).
Every stored matrix is symmetrized; the worst asymmetry seen before
symmetrization is recorded.  Regularity margins (smallest eigenvalues
of the signed weight blocks) are reported per node, and inversion
aborts when a weight block's condition number passes 1e12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._integrate import CoefficientCache, IntegrationError, integrate_backward
from .model import CONDITION_LIMIT, DEFAULT_DELTA, GameSpec, TimeGrid

__all__ = [
    "RegularityError",
    "GridMismatchError",
    "RiccatiSolution",
    "DGWeights",
    "RegularityReport",
    "ComparisonReport",
    "solve_game_riccati",
    "solve_control_riccati",
    "solve_mean_riccati",
    "solve_riccati_pair",
    "assemble_dg_weights",
    "check_strong_regularity",
    "check_comparison",
    "riccati_residual",
    "write_riccati_csv",
]

DEFAULT_RTOL = 1e-8


class RegularityError(RuntimeError):
    """The Riccati flow lost strong regularity inside the horizon."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class GridMismatchError(ValueError):
    """Two grid-indexed objects do not share node times."""


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def _solve_sym(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A X = B for symmetric nonsingular A."""
    return np.linalg.solve(A, B)


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """One solved Riccati path on a grid.

    ``times`` and ``values_fine`` sample the solution on the refined
    partition produced by the integrator (segment boundaries at even
    indices, segment midpoints at odd ones); ``node_index`` locates
    the grid nodes inside it.  ``values`` restricts to the nodes.
    ``companion_fine`` is populated on mean-equation solutions and
    holds the game solution P aligned with ``times``.
    """

    grid: TimeGrid
    kind: str
    times: np.ndarray
    values_fine: np.ndarray
    node_index: np.ndarray
    regularity_margin_1: np.ndarray
    regularity_margin_2: np.ndarray
    residual_norm: float
    strongly_regular: bool
    delta: float
    asymmetry_sup: float
    companion_fine: np.ndarray | None = None

    @property
    def values(self) -> np.ndarray:
        return self.values_fine[self.node_index]

    @property
    def terminal(self) -> np.ndarray:
        return self.values_fine[-1]

    @property
    def initial(self) -> np.ndarray:
        return self.values_fine[0]

    @property
    def companion_values(self) -> np.ndarray | None:
        if self.companion_fine is None:
            return None
        return self.companion_fine[self.node_index]

    @classmethod
    def from_constant(cls, grid: TimeGrid, matrix,
                      kind: str = "manual") -> "RiccatiSolution":
        M = np.asarray(matrix, dtype=float)
        return cls.from_callable(grid, lambda t: M, kind=kind)

    @classmethod
    def from_callable(cls, grid: TimeGrid, fn,
                      kind: str = "manual") -> "RiccatiSolution":
        """Sample an explicit matrix path on the half-grid.

        Margins and residuals are not computed here; use
        check_strong_regularity / riccati_residual on the result.
        """
        times = grid.half_times
        vals = np.stack([_sym(np.asarray(fn(t), dtype=float)) for t in times])
        nan = np.full(grid.N + 1, np.nan)
        return cls(grid=grid, kind=kind, times=np.array(times),
                   values_fine=vals,
                   node_index=np.arange(0, 2 * grid.N + 1, 2),
                   regularity_margin_1=nan, regularity_margin_2=nan,
                   residual_norm=float("nan"), strongly_regular=False,
                   delta=float("nan"), asymmetry_sup=0.0)


@dataclass(frozen=True)
class DGWeights:
    """Mean-equation weight paths assembled from the game solution P.

    upsilon  = Q + Qbar + (C+Cbar)' P (C+Cbar)
    gamma_i  = (Di+Dibar)' P (C+Cbar) + (Si+Sibar)
    sigma_bar = R + Rbar + (D+Dbar)' P (D+Dbar), 2x2-blocked in players.
    """

    grid: TimeGrid
    upsilon: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    sigma_bar: np.ndarray


@dataclass(frozen=True)
class RegularityReport:
    """Nodewise strong-regularity margins for a candidate P path.

    margin_1 / margin_2 are the smallest eigenvalues of the signed
    plain blocks (-1)^(i+1) [R_ii + Di' P Di]; margin_1_bar /
    margin_2_bar use the barred blocks with (D_i + D_ibar) and
    R_ii + R_iibar.  passed requires all four >= delta at every node.
    """

    delta: float
    margin_1: np.ndarray
    margin_2: np.ndarray
    margin_1_bar: np.ndarray
    margin_2_bar: np.ndarray
    passed: bool


@dataclass(frozen=True)
class ComparisonReport:
    """Nodewise eigenvalue margins of P - P1 and P2 - P."""

    margin_lower: np.ndarray
    margin_upper: np.ndarray
    tol: float
    passed: bool


# ----------------------------------------------------------------------
# right-hand sides (as dP/dt, so the quadratic term enters with +)
# ----------------------------------------------------------------------

def _game_rhs(cache: CoefficientCache):
    def rhs(t, P):
        st = cache.at(t)
        DtP = st.D.T @ P
        L = st.B.T @ P + DtP @ st.C + st.S
        Sig = st.R + DtP @ st.D
        quad = L.T @ _solve_sym(Sig, L)
        PA = P @ st.A
        PC = P @ st.C
        return -(PA + PA.T + st.C.T @ PC + st.Q - quad)
    return rhs


def _control_rhs(cache: CoefficientCache, player: int):
    m1 = cache.m1
    lo, hi = (0, m1) if player == 1 else (m1, cache.m)

    def rhs(t, P):
        st = cache.at(t)
        Bi = st.B[:, lo:hi]
        Di = st.D[:, lo:hi]
        Si = st.S[lo:hi, :]
        Rii = st.R[lo:hi, lo:hi]
        DtP = Di.T @ P
        L = Bi.T @ P + DtP @ st.C + Si
        Sig = Rii + DtP @ Di
        quad = L.T @ _solve_sym(Sig, L)
        PA = P @ st.A
        PC = P @ st.C
        return -(PA + PA.T + st.C.T @ PC + st.Q - quad)
    return rhs


def _pair_rhs(cache: CoefficientCache):
    game = _game_rhs(cache)

    def rhs(t, Y):
        P, Pi = Y[0], Y[1]
        st = cache.at(t)
        dP = game(t, P)
        DtP = st.Dsum.T @ P
        Lb = st.Bsum.T @ Pi + DtP @ st.Csum + st.Ssum
        Sigb = st.Rsum + DtP @ st.Dsum
        quadb = Lb.T @ _solve_sym(Sigb, Lb)
        PiA = Pi @ st.Asum
        PCs = P @ st.Csum
        dPi = -(PiA + PiA.T + st.Csum.T @ PCs + st.Qsum - quadb)
        return np.stack((dP, dPi))
    return rhs


# ----------------------------------------------------------------------
# margins and conditioning
# ----------------------------------------------------------------------

def _cond_violations(Sig_stack: np.ndarray, nodes: np.ndarray, label: str):
    """Abort on the first node whose weight block is nearly singular."""
    eig = np.linalg.eigvalsh(Sig_stack)
    small = np.min(np.abs(eig), axis=-1)
    big = np.max(np.abs(eig), axis=-1)
    bad = (small == 0.0) | (big > CONDITION_LIMIT * small)
    if np.any(bad):
        t = float(nodes[int(np.argmax(bad))])
        raise RegularityError(
            f"{label} is numerically singular at t = {t:.6g} "
            f"(condition estimate above {CONDITION_LIMIT:.0e})", t)


def _game_blocks(cache, t, P):
    st = cache.at(t)
    return st.R + st.D.T @ P @ st.D


def _mean_blocks(cache, t, P):
    st = cache.at(t)
    return st.Rsum + st.Dsum.T @ P @ st.Dsum


def _signed_block_margins(Sig_stack: np.ndarray, m1: int):
    """Smallest eigenvalues of the player-signed diagonal blocks."""
    mu1 = np.linalg.eigvalsh(Sig_stack[:, :m1, :m1])[:, 0]
    mu2 = np.linalg.eigvalsh(-Sig_stack[:, m1:, m1:])[:, 0]
    return mu1, mu2


def _control_blocks(cache, t, P, player):
    st = cache.at(t)
    m1 = cache.m1
    lo, hi = (0, m1) if player == 1 else (m1, cache.m)
    Di = st.D[:, lo:hi]
    Dib = st.Dsum[:, lo:hi]
    Sig = st.R[lo:hi, lo:hi] + Di.T @ P @ Di
    Sigb = st.Rsum[lo:hi, lo:hi] + Dib.T @ P @ Dib
    return Sig, Sigb


def _make_post():
    """Symmetrizer hook that also tracks worst pre-symmetry skew."""
    state = {"sup": 0.0}

    def post(y):
        skew = float(np.max(np.abs(y - np.swapaxes(y, -1, -2)), initial=0.0))
        if skew > state["sup"]:
            state["sup"] = skew
        return _sym(y)

    return post, state


def _midpoint_residual(times, values_fine, node_index, grid, rhs):
    """Sup Frobenius defect of the discrete path at interval midpoints."""
    vals = values_fine[node_index]
    h = grid.h
    worst = 0.0
    for k in range(grid.N):
        i0, i1 = node_index[k], node_index[k + 1]
        # the true interval midpoint is always recorded; locate the
        # fine entry closest to it in case refinement shifted indices
        target = 0.5 * (times[i0] + times[i1])
        j = int(np.searchsorted(times[i0:i1 + 1], target)) + i0
        if j > i1 or (j > i0 and abs(times[j - 1] - target)
                      <= abs(times[min(j, i1)] - target)):
            j -= 1
        mid = j
        Pdot = (vals[k + 1] - vals[k]) / h
        defect = Pdot - rhs(times[mid], values_fine[mid])
        worst = max(worst, float(np.linalg.norm(defect)))
    return worst


def _finish(spec, grid, delta, kind, times, values, node_index, asym,
            block_fn, label, rhs, companion=None):
    cache = CoefficientCache(spec)
    nodes = grid.nodes
    node_vals = values[node_index]
    Sig = np.stack([block_fn(cache, t, Pk)
                    for t, Pk in zip(nodes, node_vals)])
    _cond_violations(Sig, nodes, label)
    mu1, mu2 = _signed_block_margins(Sig, spec.m1)
    residual = _midpoint_residual(times, values, node_index, grid, rhs)
    regular = bool(np.min(mu1) >= delta and np.min(mu2) >= delta)
    return RiccatiSolution(
        grid=grid, kind=kind, times=times, values_fine=values,
        node_index=node_index, regularity_margin_1=mu1,
        regularity_margin_2=mu2, residual_norm=residual,
        strongly_regular=regular, delta=delta, asymmetry_sup=asym,
        companion_fine=companion)


# ----------------------------------------------------------------------
# public solvers
# ----------------------------------------------------------------------

def solve_game_riccati(spec: GameSpec, grid: TimeGrid,
                       delta: float = DEFAULT_DELTA,
                       rtol: float = DEFAULT_RTOL) -> RiccatiSolution:
    """Solve the game Riccati equation backward from P(T) = G.

    Parameters
    ----------
    spec : GameSpec
        Validated game description.
    grid : TimeGrid
        Output grid; integration refines inside intervals as needed.
    delta : float
        Margin the signed weight blocks must keep for the solution to
        be flagged strongly regular.
    rtol : float
        Step-doubling acceptance tolerance of the integrator.

    Returns
    -------
    RiccatiSolution
        With nodewise margins lambda_min(R11 + D1' P D1) and
        lambda_min(-(R22 + D2' P D2)), the midpoint defect norm, and
        the refined sample path.

    Raises
    ------
    RegularityError
        If a weight block becomes numerically singular on the horizon
        or the flow blows up before t = 0.
    """
    cache = CoefficientCache(spec)
    rhs = _game_rhs(cache)
    post, st = _make_post()
    try:
        times, values, node_index = integrate_backward(
            rhs, grid, cache.G, rtol=rtol, post=post)
    except IntegrationError as exc:
        raise RegularityError(str(exc), exc.t) from None
    return _finish(spec, grid, delta, "game", times, values, node_index,
                   st["sup"], _game_blocks, "the stacked control weight", rhs)


def solve_control_riccati(spec: GameSpec, grid: TimeGrid, player: int,
                          delta: float = DEFAULT_DELTA,
                          rtol: float = DEFAULT_RTOL) -> RiccatiSolution:
    """Solve the single-channel Riccati equation of one player.

    The equation keeps the shared state weights Q and G but sees only
    the player's own input channel (B_i, D_i, S_i, R_ii).  Margins are
    the smallest eigenvalues of (-1)^(i+1) [R_ii + D_i' P_i D_i] and
    of the barred analogue.
    """
    if player not in (1, 2):
        raise ValueError("player must be 1 or 2")
    cache = CoefficientCache(spec)
    rhs = _control_rhs(cache, player)
    post, st = _make_post()
    try:
        times, values, node_index = integrate_backward(
            rhs, grid, cache.G, rtol=rtol, post=post)
    except IntegrationError as exc:
        raise RegularityError(str(exc), exc.t) from None
    sign = 1.0 if player == 1 else -1.0
    cache2 = CoefficientCache(spec)
    node_vals = values[node_index]
    pairs = [_control_blocks(cache2, t, Pk, player)
             for t, Pk in zip(grid.nodes, node_vals)]
    Sig = np.stack([p[0] for p in pairs])
    Sigb = np.stack([p[1] for p in pairs])
    _cond_violations(Sig, grid.nodes, f"player {player} control weight")
    mu = np.linalg.eigvalsh(sign * Sig)[:, 0]
    mub = np.linalg.eigvalsh(sign * Sigb)[:, 0]
    residual = _midpoint_residual(times, values, node_index, grid, rhs)
    regular = bool(np.min(mu) >= delta and np.min(mub) >= delta)
    return RiccatiSolution(
        grid=grid, kind=f"control-{player}", times=times,
        values_fine=values, node_index=node_index,
        regularity_margin_1=mu, regularity_margin_2=mub,
        residual_norm=residual, strongly_regular=regular, delta=delta,
        asymmetry_sup=st["sup"])


def solve_riccati_pair(spec: GameSpec, grid: TimeGrid,
                       delta: float = DEFAULT_DELTA,
                       rtol: float = DEFAULT_RTOL):
    """Solve the game equation and the mean equation in one sweep.

    The pair is integrated jointly so the mean equation sees the game
    solution exactly at every internal stage, layers included.
    Returns (P, Pi) as RiccatiSolutions on a shared refined partition;
    Pi carries P as its companion path.
    """
    cache = CoefficientCache(spec)
    rhs = _pair_rhs(cache)
    post, st = _make_post()
    terminal = np.stack((cache.G, cache.Gsum))
    try:
        times, values, node_index = integrate_backward(
            rhs, grid, terminal, rtol=rtol, post=post)
    except IntegrationError as exc:
        raise RegularityError(str(exc), exc.t) from None
    P_fine = values[:, 0]
    Pi_fine = values[:, 1]
    game_rhs = _game_rhs(cache)
    P_sol = _finish(spec, grid, delta, "game", times, P_fine, node_index,
                    st["sup"], _game_blocks, "the stacked control weight",
                    game_rhs)

    def mean_blocks(c, t, _Pi_node):
        # bar margins depend on P, not Pi
        k = min(int(np.searchsorted(times, t)), len(times) - 1)
        return _mean_blocks(c, t, P_fine[k])

    def mean_rhs_for_residual(t, Pi):
        j = min(int(np.searchsorted(times, t)), len(times) - 1)
        return rhs(t, np.stack((P_fine[j], Pi)))[1]

    Pi_sol = _finish(spec, grid, delta, "mean", times, Pi_fine, node_index,
                     st["sup"], mean_blocks, "the mean-equation control weight",
                     mean_rhs_for_residual, companion=P_fine)
    return P_sol, Pi_sol


def solve_mean_riccati(spec: GameSpec, P: RiccatiSolution, grid: TimeGrid,
                       delta: float = DEFAULT_DELTA,
                       rtol: float = DEFAULT_RTOL) -> RiccatiSolution:
    """Solve the mean Riccati equation for Pi given the game solution P.

    P must be the game solution on the same grid; the pair is
    re-integrated jointly (the precondition pins P down, and joint
    integration is the only way to know P inside refined stages), then
    cross-checked against the provided node values.
    """
    if not np.array_equal(P.grid.nodes, grid.nodes):
        raise GridMismatchError("P was solved on a different grid")
    P_pair, Pi = solve_riccati_pair(spec, grid, delta=delta, rtol=rtol)
    scale = 1.0 + float(np.max(np.abs(P_pair.values)))
    gap = float(np.max(np.abs(P_pair.values - P.values)))
    if gap > 1e-6 * scale:
        raise ValueError(
            "provided P does not solve the game equation on this grid "
            f"(node mismatch {gap:.3e})")
    return Pi


def assemble_dg_weights(spec: GameSpec, P: RiccatiSolution,
                        grid: TimeGrid) -> DGWeights:
    """Evaluate the mean-equation weight paths at the grid nodes."""
    if not np.array_equal(P.grid.nodes, grid.nodes):
        raise GridMismatchError("P was solved on a different grid")
    cache = CoefficientCache(spec)
    N, n, m1, m2 = grid.N, spec.n, spec.m1, spec.m2
    ups = np.empty((N + 1, n, n))
    g1 = np.empty((N + 1, m1, n))
    g2 = np.empty((N + 1, m2, n))
    sb = np.empty((N + 1, spec.m, spec.m))
    Pv = P.values
    for k, t in enumerate(grid.nodes):
        st = cache.at(t)
        PCs = Pv[k] @ st.Csum
        ups[k] = _sym(st.Qsum + st.Csum.T @ PCs)
        DtPC = st.Dsum.T @ PCs
        g1[k] = DtPC[:m1] + st.Ssum[:m1]
        g2[k] = DtPC[m1:] + st.Ssum[m1:]
        sb[k] = _sym(st.Rsum + st.Dsum.T @ Pv[k] @ st.Dsum)
    return DGWeights(grid=grid, upsilon=ups, gamma1=g1, gamma2=g2,
                     sigma_bar=sb)


def check_strong_regularity(P: RiccatiSolution, spec: GameSpec,
                            delta: float = DEFAULT_DELTA) -> RegularityReport:
    """Nodewise signed margins of the plain and barred weight blocks."""
    cache = CoefficientCache(spec)
    nodes = P.grid.nodes
    Pv = P.values
    Sig = np.stack([_game_blocks(cache, t, Pv[k])
                    for k, t in enumerate(nodes)])
    Sigb = np.stack([_mean_blocks(cache, t, Pv[k])
                     for k, t in enumerate(nodes)])
    m1p, m2p = _signed_block_margins(Sig, spec.m1)
    m1b, m2b = _signed_block_margins(Sigb, spec.m1)
    passed = bool(min(m1p.min(), m2p.min(), m1b.min(), m2b.min()) >= delta)
    return RegularityReport(delta=delta, margin_1=m1p, margin_2=m2p,
                            margin_1_bar=m1b, margin_2_bar=m2b,
                            passed=passed)


def check_comparison(P: RiccatiSolution, P1: RiccatiSolution,
                     P2: RiccatiSolution,
                     tol: float = 1e-8) -> ComparisonReport:
    """Verify the sandwich P1 <= P <= P2 nodewise in eigenvalue margins."""
    for other in (P1, P2):
        if not np.array_equal(other.grid.nodes, P.grid.nodes):
            raise GridMismatchError("comparison requires one shared grid")
    lower = np.array([np.linalg.eigvalsh(a - b)[0]
                      for a, b in zip(P.values, P1.values)])
    upper = np.array([np.linalg.eigvalsh(a - b)[0]
                      for a, b in zip(P2.values, P.values)])
    passed = bool(lower.min() >= -tol and upper.min() >= -tol)
    return ComparisonReport(margin_lower=lower, margin_upper=upper,
                            tol=tol, passed=passed)


def riccati_residual(P: RiccatiSolution, spec: GameSpec, which: str) -> float:
    """Sup Frobenius defect of a path in one of the Riccati equations.

    ``which`` is one of "Ric1" (game), "Ric2" (mean; requires the
    companion game path on P), "Ric-1", "Ric-2" (single channels).
    The time derivative is approximated by central differences at
    interior nodes.
    """
    cache = CoefficientCache(spec)
    if which == "Ric1":
        rhs = _game_rhs(cache)
    elif which == "Ric-1":
        rhs = _control_rhs(cache, 1)
    elif which == "Ric-2":
        rhs = _control_rhs(cache, 2)
    elif which == "Ric2":
        comp = P.companion_values
        if comp is None:
            raise ValueError("Ric2 residual needs the companion game path")
        pair = _pair_rhs(cache)

        def rhs(t, Pi, _comp=comp, _nodes=P.grid.nodes):
            k = int(round(t / P.grid.h))
            return pair(t, np.stack((_comp[k], Pi)))[1]
    else:
        raise ValueError(f"unknown equation tag {which!r}")

    nodes = P.grid.nodes
    vals = P.values
    h = P.grid.h
    worst = 0.0
    for k in range(1, len(nodes) - 1):
        Pdot = (vals[k + 1] - vals[k - 1]) / (2.0 * h)
        defect = Pdot - rhs(nodes[k], vals[k])
        worst = max(worst, float(np.linalg.norm(defect)))
    return worst


def write_riccati_csv(sol: RiccatiSolution, path) -> None:
    """One row per grid node: t followed by row-major matrix entries."""
    n = sol.values_fine.shape[-1]
    header = ["t"] + [f"P_{i}_{j}" for i in range(n) for j in range(n)]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t, M in zip(sol.grid.nodes, sol.values):
            row = [f"{t:.17g}"] + [f"{x:.17g}" for x in M.ravel()]
            fh.write(",".join(row) + "\n")
