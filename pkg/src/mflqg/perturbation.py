"""Convexification families and open-loop solvability classification.

The closed-loop equations of the game can be solvable while the
open-loop problem has no saddle.  The diagnostic is a family of
strictly convex-concave neighbours: shift the minimizer's control
weight up by eps and the maximizer's down by eps, solve each
neighbour in feedback form, and watch the realized optimal controls
as eps -> 0.  Bounded families converge (in the L2 sense along the
state they generate) to the minimal-norm open-loop saddle; families
that blow up certify that no saddle exists from that initial state.
The blow-up is a power law in 1/eps, so the classifier fits the
growth exponent and measures successive control distances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import ControlLaw, GameSpec, TimeGrid, embed_perturbation
from .riccati import RiccatiSolution, solve_riccati_pair
from .synthesis import (FeedbackLaw, build_feedback, evaluate_functional,
                        verify_saddle, SaddleReport)

__all__ = [
    "EpsSchedule",
    "EpsIterate",
    "EpsFamilyReport",
    "build_eps_iterate",
    "control_distance",
    "classify_family",
    "write_family_csv",
]

_ZERO_FAMILY = 1e-14       # below this the whole family is just 0
_FIT_POINTS = 6            # tail length for the growth-exponent fit
_EXPONENT_FLAT = 0.1       # p below this reads as "bounded"
_EXPONENT_BLOWUP = 0.9     # p above this reads as "divergent"


@dataclass(frozen=True)
class EpsSchedule:
    """Geometric ladder eps0 * factor^k, k = 0..count-1."""

    eps0: float = 0.5
    factor: float = 0.5
    count: int = 14

    def __post_init__(self):
        if not (self.eps0 > 0 and 0 < self.factor < 1 and self.count >= 2):
            raise ValueError("need eps0 > 0, 0 < factor < 1, count >= 2")

    @property
    def values(self) -> np.ndarray:
        return self.eps0 * self.factor ** np.arange(self.count)


@dataclass(frozen=True, eq=False)
class EpsIterate:
    """One solved convexified neighbour of the game."""

    eps: float
    riccati: RiccatiSolution
    mean_riccati: RiccatiSolution
    feedback: FeedbackLaw
    value: float
    norm_sq: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(max(self.norm_sq, 0.0)))


def build_eps_iterate(spec: GameSpec, eps: float, grid: TimeGrid, x,
                      delta: float | None = None) -> EpsIterate:
    """Solve the eps-shifted game and realize its feedback optimum."""
    kw = {} if delta is None else {"delta": delta}
    shifted = embed_perturbation(spec, eps)
    P, Pi = solve_riccati_pair(shifted, grid, **kw)
    feedback = build_feedback(shifted, P, Pi)
    report = evaluate_functional(shifted, feedback, x)
    return EpsIterate(eps=eps, riccati=P, mean_riccati=Pi,
                      feedback=feedback, value=report.value,
                      norm_sq=report.control_norm_sq)


# -- distance between realized controls ---------------------------------

def _law_parts(law) -> tuple:
    if isinstance(law, EpsIterate):
        law = law.feedback
    if isinstance(law, FeedbackLaw):
        law = law.as_control_law()
    return law.times, law.gain, law.mean_gain, law.offset


def _interp_weights(times: np.ndarray, t: float):
    """Quadratic interpolation stencil for a boundary/midpoint path.

    Returns (i0, i1, i2, w0, w1, w2): the enclosing segment's boundary,
    midpoint and boundary indices with Lagrange weights at t.
    """
    bounds = times[::2]
    k = int(np.clip(np.searchsorted(bounds, t, side="right") - 1,
                    0, bounds.shape[0] - 2))
    i0, i1, i2 = 2 * k, 2 * k + 1, 2 * k + 2
    t0, t1, t2 = times[i0], times[i1], times[i2]
    w0 = (t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2))
    w1 = (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2))
    w2 = (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1))
    return i0, i1, i2, w0, w1, w2


def _sample_law(parts, t: float):
    times, gain, mean_gain, offset = parts
    i0, i1, i2, w0, w1, w2 = _interp_weights(times, t)
    g = w0 * gain[i0] + w1 * gain[i1] + w2 * gain[i2]
    gb = w0 * mean_gain[i0] + w1 * mean_gain[i1] + w2 * mean_gain[i2]
    v = w0 * offset[i0] + w1 * offset[i1] + w2 * offset[i2]
    return g, gb, v


def control_distance(spec: GameSpec, it_a, it_b, x,
                     grid: TimeGrid | None = None) -> float:
    """L2 distance of the controls two laws realize from state x.

    Both laws are driven by the same noise, so the gap solves a joint
    moment system: means, second moments, and the cross second moment
    of the two closed-loop states.  The laws may live on different
    grids; sampling interpolates each law quadratically through its
    own segment records, and the march runs on the union of their
    segment boundaries.
    """
    parts_a = _law_parts(it_a)
    parts_b = _law_parts(it_b)
    n = spec.n
    x0 = np.asarray(x, dtype=float).reshape(n)

    bounds = np.union1d(parts_a[0][::2], parts_b[0][::2])
    mids = 0.5 * (bounds[:-1] + bounds[1:])
    cache = _coeff_sampler(spec)

    def rhs(t: float, state):
        ma, mb, La, Lb, Lab = state
        A, Ab, As, B, Bs, C, Cs, D, Ds = cache(t)
        ga, gba, va = _sample_law(parts_a, t)
        gb_, gbb, vb = _sample_law(parts_b, t)
        eua = gba @ ma + va
        eub = gbb @ mb + vb
        Fa, Fb = A + B @ ga, A + B @ gb_
        Ga, Gb = C + D @ ga, C + D @ gb_
        sa = Cs @ ma + Ds @ eua
        sb = Cs @ mb + Ds @ eub
        dma = As @ ma + Bs @ eua
        dmb = As @ mb + Bs @ eub
        dLa = Fa @ La + La @ Fa.T + Ga @ La @ Ga.T + np.outer(sa, sa)
        dLb = Fb @ Lb + Lb @ Fb.T + Gb @ Lb @ Gb.T + np.outer(sb, sb)
        dLab = (Fa @ Lab + Lab @ Fb.T + Ga @ Lab @ Gb.T
                + np.outer(sa, sb))
        return dma, dmb, dLa, dLb, dLab

    def gap_sq(t: float, state) -> float:
        ma, mb, La, Lb, Lab = state
        ga, gba, va = _sample_law(parts_a, t)
        gb_, gbb, vb = _sample_law(parts_b, t)
        eua = gba @ ma + va
        eub = gbb @ mb + vb
        fluct = (np.trace(ga.T @ ga @ La) + np.trace(gb_.T @ gb_ @ Lb)
                 - 2.0 * np.einsum("ij,ij->", ga.T @ gb_, Lab))
        mean = eua - eub
        return float(fluct + mean @ mean)

    zero = np.zeros((n, n))
    state = (x0.copy(), x0.copy(), zero.copy(), zero.copy(), zero.copy())
    total = 0.0
    f = rhs(bounds[0], state)
    g0 = gap_sq(bounds[0], state)
    for k in range(bounds.shape[0] - 1):
        t0, t1, tm = bounds[k], bounds[k + 1], mids[k]
        h = t1 - t0
        s_mid = _rk4_tuple(rhs, t0, 0.5 * h, state, f)
        f_mid = rhs(tm, s_mid)
        s_end = _rk4_tuple(rhs, tm, 0.5 * h, s_mid, f_mid)
        gm = gap_sq(tm, s_mid)
        state = _sym_state(s_end)
        f = rhs(t1, state)
        g1 = gap_sq(t1, state)
        total += h / 6.0 * (g0 + 4.0 * gm + g1)
        g0 = g1
    return float(np.sqrt(max(total, 0.0)))


def _coeff_sampler(spec: GameSpec):
    co = spec.coefficients
    memo = {}

    def at(t: float):
        got = memo.get(t)
        if got is None:
            A = co.A.eval(t)
            Ab = co.Abar.eval(t)
            B = np.hstack([co.B1.eval(t), co.B2.eval(t)])
            Bb = np.hstack([co.B1bar.eval(t), co.B2bar.eval(t)])
            C = co.C.eval(t)
            Cb = co.Cbar.eval(t)
            D = np.hstack([co.D1.eval(t), co.D2.eval(t)])
            Db = np.hstack([co.D1bar.eval(t), co.D2bar.eval(t)])
            got = (A, Ab, A + Ab, B, B + Bb, C, C + Cb, D, D + Db)
            memo[t] = got
        return got

    return at


def _rk4_tuple(rhs, t, h, state, f0):
    def axpy(a, xs, ys):
        return tuple(y + a * x for x, y in zip(xs, ys))

    k1 = f0
    k2 = rhs(t + 0.5 * h, axpy(0.5 * h, k1, state))
    k3 = rhs(t + 0.5 * h, axpy(0.5 * h, k2, state))
    k4 = rhs(t + h, axpy(h, k3, state))
    step = tuple((k1i + 2.0 * k2i + 2.0 * k3i + k4i) / 6.0
                 for k1i, k2i, k3i, k4i in zip(k1, k2, k3, k4))
    return axpy(h, step, state)


def _sym_state(state):
    ma, mb, La, Lb, Lab = state
    return (ma, mb, 0.5 * (La + La.T), 0.5 * (Lb + Lb.T), Lab)


# -- classification ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EpsFamilyReport:
    """Outcome of a convexification sweep from one initial state.

    verdict is "solvable" (family bounded and Cauchy: its limit is
    the minimal-norm open-loop saddle), "not-solvable" (norms grow
    like a power of 1/eps), or "inconclusive".  ``exponent`` is the
    fitted growth power p in |u_eps| ~ eps^{-p}; ``distances`` are
    L2 gaps between consecutive realized controls.
    """

    x: np.ndarray
    schedule: EpsSchedule
    iterates: tuple
    norms: np.ndarray
    values: np.ndarray
    distances: np.ndarray
    exponent: float
    verdict: str
    tol: float
    limit: FeedbackLaw | None
    saddle: SaddleReport | None

    @property
    def eps_values(self) -> np.ndarray:
        return np.array([it.eps for it in self.iterates])


def classify_family(spec: GameSpec, schedule: EpsSchedule | None, x,
                    grid: TimeGrid, tol: float = 1e-2,
                    delta: float | None = None,
                    verify: bool = True) -> EpsFamilyReport:
    """Sweep the convexification ladder and classify solvability.

    The growth exponent is fitted by least squares on the last
    min(6, count) points of log |u_eps| against log(1/eps); flat
    families (p < 0.1) whose final consecutive distance is below
    ``tol`` are declared solvable, clear power laws (p > 0.9)
    not-solvable, anything else inconclusive.  ``verify=True``
    additionally runs the open-loop saddle check on the limit law.
    """
    schedule = schedule or EpsSchedule()
    xvec = np.asarray(x, dtype=float).reshape(spec.n)
    iterates = [build_eps_iterate(spec, e, grid, xvec, delta)
                for e in schedule.values]
    norms = np.array([it.norm for it in iterates])
    values = np.array([it.value for it in iterates])
    # when both controls are zero in L2 their distance is exactly zero
    # (triangle inequality); skip the joint march in that case
    distances = np.array([
        0.0 if a.norm + b.norm < _ZERO_FAMILY
        else control_distance(spec, a, b, xvec, grid)
        for a, b in zip(iterates[:-1], iterates[1:])])

    tail = min(_FIT_POINTS, schedule.count)
    if np.all(norms[-tail:] < _ZERO_FAMILY):
        exponent = 0.0
    else:
        eps_tail = schedule.values[-tail:]
        safe = np.maximum(norms[-tail:], _ZERO_FAMILY)
        exponent = float(np.polyfit(np.log(1.0 / eps_tail),
                                    np.log(safe), 1)[0])

    if exponent < _EXPONENT_FLAT and distances[-1] <= tol:
        verdict = "solvable"
    elif exponent > _EXPONENT_BLOWUP:
        verdict = "not-solvable"
    else:
        verdict = "inconclusive"

    limit = iterates[-1].feedback if verdict == "solvable" else None
    saddle = None
    if verify and limit is not None:
        saddle = verify_saddle(spec, limit, xvec)
    return EpsFamilyReport(x=xvec, schedule=schedule,
                           iterates=tuple(iterates), norms=norms,
                           values=values, distances=distances,
                           exponent=exponent, verdict=verdict, tol=tol,
                           limit=limit, saddle=saddle)


def write_family_csv(report: EpsFamilyReport, path) -> None:
    """Dump the sweep as rows of eps, control norm, value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps", "control_norm", "value"])
        for it in report.iterates:
            writer.writerow([f"{it.eps:.17g}", f"{it.norm:.17g}",
                             f"{it.value:.17g}"])
