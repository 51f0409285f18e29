"""Internal numerics: classical RK4 on a fixed output grid with
per-interval step-doubling refinement, stacked coefficient evaluation,
and Simpson quadrature on refined partitions.

The refinement exists because backward Riccati flows develop terminal
or initial layers of width comparable to the perturbation parameter;
a fixed step cannot resolve those while the output grid stays the
user's contract.  Each grid interval is integrated by classical RK4
and accepted only when a step-doubling comparison agrees to a relative
tolerance; otherwise the interval is split recursively.  The accepted
value of a segment is the two-half-step result, and the half-step
value at the segment midpoint is recorded, so the returned path always
alternates segment boundaries (even indices) and midpoints (odd
indices).
"""

from __future__ import annotations

import numpy as np

from .model import GameSpec, TimeGrid

__all__ = [
    "IntegrationError",
    "CoefficientCache",
    "integrate_backward",
    "segment_simpson",
    "hermite_midpoint",
]

# Fast-accept thresholds: an interval is taken in a single RK4 step,
# without the doubling comparison, when the stage slopes are this tame.
_FAST_MOVE = 0.04
_FAST_SPREAD = 1e-4

# Escape bound, relative to the terminal-value scale.  A finite-time
# escape tracks its pole with locally consistent steps, so no per-step
# error test can flag it; growth beyond this factor is the detector.
_MAX_GROWTH = 1e8


class IntegrationError(RuntimeError):
    """Raised when refinement bottoms out or the flow blows up."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class _Stacked:
    """Coefficients of one spec at one time, stacked for the solvers.

    B = [B1 B2], D = [D1 D2], S = [S1; S2], R = [[R11 R12]; [R21 R22]],
    with *sum* variants holding coefficient + bar.  Symmetric weights
    are symmetrized here, once, after validation accepted them.
    """

    __slots__ = ("A", "Abar", "Asum", "B", "Bbar", "Bsum", "C", "Cbar",
                 "Csum", "D", "Dbar", "Dsum", "S", "Sbar", "Ssum",
                 "R", "Rbar", "Rsum", "Q", "Qbar", "Qsum")

    def __init__(self, spec: GameSpec, t: float):
        co, w = spec.coefficients, spec.weights
        self.A = co.A.eval(t)
        self.Abar = co.Abar.eval(t)
        self.Asum = self.A + self.Abar
        self.B = np.hstack((co.B1.eval(t), co.B2.eval(t)))
        self.Bbar = np.hstack((co.B1bar.eval(t), co.B2bar.eval(t)))
        self.Bsum = self.B + self.Bbar
        self.C = co.C.eval(t)
        self.Cbar = co.Cbar.eval(t)
        self.Csum = self.C + self.Cbar
        self.D = np.hstack((co.D1.eval(t), co.D2.eval(t)))
        self.Dbar = np.hstack((co.D1bar.eval(t), co.D2bar.eval(t)))
        self.Dsum = self.D + self.Dbar
        self.S = np.vstack((w.S1.eval(t), w.S2.eval(t)))
        self.Sbar = np.vstack((w.S1bar.eval(t), w.S2bar.eval(t)))
        self.Ssum = self.S + self.Sbar

        def _sym(M):
            return 0.5 * (M + M.T)

        def _rblock(r11, r12, r22):
            m1 = r11.shape[0]
            m = m1 + r22.shape[0]
            out = np.empty((m, m))
            out[:m1, :m1] = r11
            out[:m1, m1:] = r12
            out[m1:, :m1] = r12.T
            out[m1:, m1:] = r22
            return _sym(out)

        self.R = _rblock(w.R11.eval(t), w.R12.eval(t), w.R22.eval(t))
        self.Rbar = _rblock(w.R11bar.eval(t), w.R12bar.eval(t),
                            w.R22bar.eval(t))
        self.Rsum = self.R + self.Rbar
        self.Q = _sym(w.Q.eval(t))
        self.Qbar = _sym(w.Qbar.eval(t))
        self.Qsum = self.Q + self.Qbar


class CoefficientCache:
    """Memoized stacked-coefficient evaluation for one spec."""

    def __init__(self, spec: GameSpec, max_entries: int = 1 << 18):
        self.spec = spec
        self._memo: dict[float, _Stacked] = {}
        self._max = max_entries
        n = spec.n
        G = spec.weights.G
        Gbar = spec.weights.Gbar
        self.G = 0.5 * (G + G.T)
        self.Gbar = 0.5 * (Gbar + Gbar.T)
        self.Gsum = self.G + self.Gbar
        self.n, self.m1, self.m2, self.m = n, spec.m1, spec.m2, spec.m
        # time-independent specs need one stacked instance, ever
        co, w = spec.coefficients, spec.weights
        paths = (co.A, co.Abar, co.B1, co.B1bar, co.B2, co.B2bar,
                 co.C, co.Cbar, co.D1, co.D1bar, co.D2, co.D2bar,
                 w.Q, w.Qbar, w.S1, w.S1bar, w.S2, w.S2bar,
                 w.R11, w.R11bar, w.R12, w.R12bar, w.R22, w.R22bar)
        self._frozen = (_Stacked(spec, 0.0)
                        if all(p.kind == "constant" for p in paths)
                        else None)

    def at(self, t: float) -> _Stacked:
        if self._frozen is not None:
            return self._frozen
        t = float(t)
        st = self._memo.get(t)
        if st is None:
            if len(self._memo) >= self._max:
                self._memo.clear()
            st = _Stacked(self.spec, t)
            self._memo[t] = st
        return st


def _rk4_step(rhs, t: float, h: float, y: np.ndarray, k1: np.ndarray):
    """One classical RK4 step; k1 = rhs(t, y) is supplied by the caller.

    Returns (y_next, max_slope, max_spread) where the slope statistics
    are infinity norms of the stages, used by the fast-accept test.
    """
    k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = rhs(t + h, y + h * k3)
    y_next = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    slopes = (float(np.max(np.abs(k1), initial=0.0)),
              float(np.max(np.abs(k2), initial=0.0)),
              float(np.max(np.abs(k3), initial=0.0)),
              float(np.max(np.abs(k4), initial=0.0)))
    spread = float(np.max(np.abs(k4 - k1), initial=0.0))
    spread = max(spread, float(np.max(np.abs(k2 - k3), initial=0.0)))
    return y_next, max(slopes), spread


def hermite_midpoint(y0, y1, f0, f1, h):
    """Fourth-order midpoint value from endpoint values and slopes."""
    return 0.5 * (y0 + y1) + (h / 8.0) * (f0 - f1)


def integrate_backward(rhs, grid: TimeGrid, y_terminal: np.ndarray, *,
                       rtol: float = 1e-8, max_depth: int = 40,
                       post=None):
    """Integrate dy/dt = rhs(t, y) from t = T down to t = 0.

    Returns (times, values, node_index): ``times`` ascend from 0 to T
    and alternate segment boundaries (even indices) and segment
    midpoints (odd indices); ``values[j]`` approximates y(times[j]) to
    fourth order; ``node_index[k]`` locates grid node k inside
    ``times``.  ``post`` is applied to every stored value (e.g. a
    symmetrizer); it receives and returns an array.

    Raises IntegrationError when an interval still disagrees at
    ``max_depth`` subdivisions or the solution norm explodes, which is
    how loss of strong regularity inside the horizon surfaces.
    """
    nodes = grid.nodes
    y = np.asarray(y_terminal, dtype=float)
    scale0 = 1.0 + float(np.max(np.abs(y), initial=0.0))
    if post is not None:
        y = post(y)

    rhs_raw = rhs

    def rhs(t, yv):
        try:
            return rhs_raw(t, yv)
        except np.linalg.LinAlgError:
            raise IntegrationError(
                f"a linear solve inside the flow is singular at "
                f"t = {t:.6g}", t) from None

    # Stored in descending time order, then reversed once at the end.
    times_desc: list[float] = [nodes[-1]]
    values_desc: list[np.ndarray] = [y]
    node_pos_desc = [0]

    f_at = rhs(nodes[-1], y)

    def _segment(t0, t1, y0, f0, depth):
        """Integrate one accepted-or-split segment; records mid+end."""
        nonlocal times_desc, values_desc
        scale = 1.0 + float(np.max(np.abs(y0), initial=0.0))
        if scale > _MAX_GROWTH * scale0:
            # only accepted values reach here as y0, so this is genuine
            # growth of the flow, not a transient of an oversized step
            raise IntegrationError(
                f"solution norm exploded near t = {t0:.6g}; "
                "the flow is not regular on this horizon", t0)
        h = t1 - t0
        y_full, slope, spread = _rk4_step(rhs, t0, h, y0, f0)
        rel_move = abs(h) * slope / scale
        rel_spread = abs(h) * spread / scale

        if rel_move <= _FAST_MOVE and rel_spread <= _FAST_SPREAD \
                and np.all(np.isfinite(y_full)):
            f1 = rhs(t1, y_full)
            if np.all(np.isfinite(f1)):
                y_mid = hermite_midpoint(y0, y_full, f0, f1, h)
                y_end = y_full
                if post is not None:
                    y_mid = post(y_mid)
                    y_end = post(y_end)
                times_desc.append(t0 + 0.5 * h)
                values_desc.append(y_mid)
                times_desc.append(t1)
                values_desc.append(y_end)
                return y_end, f1

        t_mid = t0 + 0.5 * h
        y_half_mid, _, _ = _rk4_step(rhs, t0, 0.5 * h, y0, f0)
        if np.all(np.isfinite(y_half_mid)):
            f_mid = rhs(t_mid, y_half_mid)
            y_half, _, _ = _rk4_step(rhs, t_mid, 0.5 * h, y_half_mid, f_mid)
            if np.all(np.isfinite(y_half)) and np.all(np.isfinite(y_full)):
                err = float(np.max(np.abs(y_full - y_half), initial=0.0))
                ynorm = float(np.max(np.abs(y_half), initial=0.0))
                if err <= rtol * (1.0 + ynorm):
                    y_mid = y_half_mid
                    y_end = y_half
                    if post is not None:
                        y_mid = post(y_mid)
                        y_end = post(y_end)
                    times_desc.append(t_mid)
                    values_desc.append(y_mid)
                    times_desc.append(t1)
                    values_desc.append(y_end)
                    return y_end, rhs(t1, y_end)

        if depth >= max_depth:
            raise IntegrationError(
                f"step refinement exhausted at t = {t_mid:.6g} "
                f"(depth {depth}); a weight block is likely singular "
                "there", t_mid)
        y_m, f_m = _segment(t0, t_mid, y0, f0, depth + 1)
        return _segment(t_mid, t1, y_m, f_m, depth + 1)

    for k in range(grid.N, 0, -1):
        y, f_at = _segment(nodes[k], nodes[k - 1], y, f_at, 0)
        node_pos_desc.append(len(times_desc) - 1)

    times = np.array(times_desc[::-1])
    values = np.stack(values_desc[::-1])
    total = len(times_desc) - 1
    node_index = np.array([total - p for p in reversed(node_pos_desc)],
                          dtype=int)
    return times, values, node_index


def segment_simpson(times: np.ndarray, integrand: np.ndarray) -> float:
    """Composite Simpson rule over a boundary/midpoint partition.

    ``integrand`` is sampled on ``times`` (boundaries at even indices,
    midpoints at odd indices); each segment contributes
    (width/6) * (g0 + 4 g_mid + g1).
    """
    g = np.asarray(integrand, dtype=float)
    widths = times[2::2] - times[:-1:2]
    return float(np.sum((widths / 6.0)
                        * (g[:-1:2] + 4.0 * g[1::2] + g[2::2])))
