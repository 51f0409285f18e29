"""Closed-loop synthesis and verification for the zero-sum mean-field game.

Once the game and mean Riccati paths are available, the candidate
equilibrium is the affine feedback

    u(t) = gain(t) (X - E[X]) + mean_gain(t) E[X],

with gains obtained by inverting the stacked control weights.  This
module builds that law, propagates the closed-loop mean/covariance
pair exactly (the first two moments of a linear mean-field SDE close
on themselves), evaluates the game functional by fourth-order
quadrature or by Monte Carlo on the fluctuation process, and verifies
the saddle property by probing open-loop deviations of each player
around the realized control.

Deviation probing is exact, not sampled: when one player replaces its
control by (realized control + bump) while the opponent keeps playing
the realized process, the pair (equilibrium state, deviated state) is
again a linear mean-field SDE, so the functional at the deviation is
computable from joint moments.  The functional is quadratic in the
bump size, which makes first- and second-order terms recoverable from
a handful of evaluations per direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._integrate import CoefficientCache, hermite_midpoint
from .model import ControlLaw, GameSpec, TimeGrid
from .riccati import GridMismatchError, RiccatiSolution

__all__ = [
    "FeedbackLaw",
    "build_feedback",
    "stationarity_residual",
    "MomentPath",
    "propagate_moments",
    "CostReport",
    "evaluate_functional",
    "MCReport",
    "evaluate_functional_mc",
    "SaddleReport",
    "verify_saddle",
    "write_moments_csv",
    "write_feedback_csv",
]


def _sym(M):
    return 0.5 * (M + np.swapaxes(M, -1, -2))


@dataclass(frozen=True, eq=False)
class FeedbackLaw:
    """Saddle-candidate feedback synthesized from the Riccati pair.

    Sampled on the refined partition ``times`` (boundaries at even
    indices, midpoints at odd).  ``gain`` acts on the centered state,
    ``mean_gain`` on the state mean; ``weight`` and ``mean_weight``
    are the inverted blocks R + D' P D and R + Rbar + (D+Dbar)' P
    (D+Dbar).  ``riccati`` and ``mean_riccati`` keep the P and Pi
    paths the law was built from.
    """

    grid: TimeGrid
    times: np.ndarray
    node_index: np.ndarray
    gain: np.ndarray
    mean_gain: np.ndarray
    weight: np.ndarray
    mean_weight: np.ndarray
    riccati: np.ndarray
    mean_riccati: np.ndarray
    margin_1: np.ndarray
    margin_2: np.ndarray

    @property
    def initial_mean_riccati(self) -> np.ndarray:
        return self.mean_riccati[0]

    def value_at(self, x) -> float:
        """Game value <Pi(0) x, x> of the saddle candidate."""
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(x @ self.mean_riccati[0] @ x)

    def as_control_law(self) -> ControlLaw:
        off = np.zeros((self.times.shape[0], self.gain.shape[1]))
        return ControlLaw(times=self.times, gain=self.gain,
                          mean_gain=self.mean_gain, offset=off)


def build_feedback(spec: GameSpec, P: RiccatiSolution,
                   Pi: RiccatiSolution) -> FeedbackLaw:
    """Invert the control weights along P and Pi into feedback gains.

    P and Pi must live on one partition: either both were sampled on
    the same times, or Pi carries P as its companion (the pair-solver
    output), in which case the companion path is used so the gains see
    P exactly at Pi's refined times.
    """
    if np.array_equal(P.times, Pi.times):
        times, P_fine = P.times, P.values_fine
    elif Pi.companion_fine is not None and np.array_equal(
            P.grid.nodes, Pi.grid.nodes):
        times, P_fine = Pi.times, Pi.companion_fine
        gap = float(np.max(np.abs(P_fine[Pi.node_index] - P.values)))
        if gap > 1e-6 * (1.0 + float(np.max(np.abs(P.values)))):
            raise ValueError(
                f"P disagrees with Pi's companion path ({gap:.3e}); "
                "the two solutions do not describe one game")
    else:
        raise GridMismatchError(
            "P and Pi share neither a partition nor a companion path")
    Pi_fine = Pi.values_fine
    K = times.shape[0]
    n, m, m1 = spec.n, spec.m, spec.m1
    cache = CoefficientCache(spec)
    gain = np.empty((K, m, n))
    mean_gain = np.empty((K, m, n))
    weight = np.empty((K, m, m))
    mean_weight = np.empty((K, m, m))
    for k in range(K):
        st = cache.at(times[k])
        Pk, Pik = P_fine[k], Pi_fine[k]
        DtP = st.D.T @ Pk
        weight[k] = _sym(st.R + DtP @ st.D)
        gain[k] = -np.linalg.solve(weight[k],
                                   st.B.T @ Pk + DtP @ st.C + st.S)
        DtPs = st.Dsum.T @ Pk
        mean_weight[k] = _sym(st.Rsum + DtPs @ st.Dsum)
        mean_gain[k] = -np.linalg.solve(
            mean_weight[k], st.Bsum.T @ Pik + DtPs @ st.Csum + st.Ssum)
    mu1 = np.linalg.eigvalsh(weight[:, :m1, :m1])[:, 0]
    mu2 = np.linalg.eigvalsh(-weight[:, m1:, m1:])[:, 0]
    return FeedbackLaw(grid=P.grid, times=times, node_index=Pi.node_index
                       if Pi.companion_fine is not None else P.node_index,
                       gain=gain, mean_gain=mean_gain, weight=weight,
                       mean_weight=mean_weight, riccati=P_fine,
                       mean_riccati=Pi_fine, margin_1=mu1, margin_2=mu2)


def stationarity_residual(spec: GameSpec, law: FeedbackLaw) -> float:
    """Sup defect of the two first-order conditions along the law.

    Checks B' P + D' P C + S + (R + D' P D) gain and its barred
    counterpart with Pi at every sampled time; both vanish for an
    exactly synthesized law, so this measures solve quality and
    catches hand-assembled laws that do not match their Riccati paths.
    """
    cache = CoefficientCache(spec)
    worst = 0.0
    for k, t in enumerate(law.times):
        st = cache.at(t)
        Pk, Pik = law.riccati[k], law.mean_riccati[k]
        DtP = st.D.T @ Pk
        r1 = (st.B.T @ Pk + DtP @ st.C + st.S
              + (st.R + DtP @ st.D) @ law.gain[k])
        DtPs = st.Dsum.T @ Pk
        r2 = (st.Bsum.T @ Pik + DtPs @ st.Csum + st.Ssum
              + (st.Rsum + DtPs @ st.Dsum) @ law.mean_gain[k])
        worst = max(worst, float(np.linalg.norm(r1)),
                    float(np.linalg.norm(r2)))
    return worst


# ----------------------------------------------------------------------
# stacked time arrays and the batched moment engine
# ----------------------------------------------------------------------

class _TimeArrays:
    """Spec coefficients sampled on a partition, stacked along time."""

    __slots__ = ("times", "A", "B", "C", "D", "Q", "S", "R",
                 "Asum", "Bsum", "Csum", "Dsum", "Qsum", "Ssum", "Rsum",
                 "G", "Gsum", "n", "m", "m1")

    def __init__(self, spec: GameSpec, times: np.ndarray):
        cache = CoefficientCache(spec)
        self.times = times
        K = times.shape[0]
        n, m = spec.n, spec.m
        self.n, self.m, self.m1 = n, m, spec.m1
        names = ("A", "B", "C", "D", "Q", "S", "R",
                 "Asum", "Bsum", "Csum", "Dsum", "Qsum", "Ssum", "Rsum")
        shapes = {"A": (n, n), "B": (n, m), "C": (n, n), "D": (n, m),
                  "Q": (n, n), "S": (m, n), "R": (m, m)}
        for nm in names:
            base = nm[:-3] if nm.endswith("sum") else nm
            setattr(self, nm, np.empty((K,) + shapes[base]))
        for k in range(K):
            st = cache.at(times[k])
            for nm in names:
                getattr(self, nm)[k] = getattr(st, nm)
        self.G = cache.G
        self.Gsum = cache.Gsum


class _MomentEngine:
    """Batched closed-loop moment propagation and cost quadrature.

    One engine is bound to a law's partition and gains; ``run``
    evaluates the functional for a batch of offset paths in a single
    RK4 sweep, since offsets enter the moment dynamics only through
    the control mean.  Cost and squared control norm accumulate by
    Simpson's rule with Hermite midpoint states, matching the
    integrator's fourth order.
    """

    def __init__(self, spec: GameSpec, times: np.ndarray, gain: np.ndarray,
                 mean_gain: np.ndarray, arrays: _TimeArrays | None = None):
        ta = arrays if arrays is not None else _TimeArrays(spec, times)
        if not np.array_equal(ta.times, times):
            raise ValueError("time arrays do not match the law partition")
        self.ta = ta
        self.gain = gain
        self.mean_gain = mean_gain
        self.F = ta.A + np.einsum("kim,kmn->kin", ta.B, gain)
        self.Gm = ta.C + np.einsum("kim,kmn->kin", ta.D, gain)
        gS = np.einsum("kmi,kmj->kij", gain, ta.S)
        self.W = (ta.Q + gS + np.swapaxes(gS, 1, 2)
                  + np.einsum("kmi,kmr,krj->kij", gain, ta.R, gain))
        self.gg = np.einsum("kmi,kmj->kij", gain, gain)
        self.times = times

    def _eu(self, idx, mean, v):
        return np.einsum("mn,bn->bm", self.mean_gain[idx], mean) + v[:, idx]

    def _rhs(self, idx, mean, cov, v):
        ta = self.ta
        eu = self._eu(idx, mean, v)
        dm = (np.einsum("ij,bj->bi", ta.Asum[idx], mean)
              + np.einsum("im,bm->bi", ta.Bsum[idx], eu))
        g = (np.einsum("ij,bj->bi", ta.Csum[idx], mean)
             + np.einsum("im,bm->bi", ta.Dsum[idx], eu))
        FL = np.einsum("ij,bjk->bik", self.F[idx], cov)
        GLG = np.einsum("ij,bjk,lk->bil", self.Gm[idx], cov, self.Gm[idx])
        dC = FL + np.swapaxes(FL, 1, 2) + GLG + np.einsum("bi,bj->bij", g, g)
        return dm, dC

    def _integrands(self, idx, mean, cov, v):
        ta = self.ta
        eu = self._eu(idx, mean, v)
        c = (np.einsum("ij,bji->b", self.W[idx], cov)
             + np.einsum("bi,ij,bj->b", mean, ta.Qsum[idx], mean)
             + 2.0 * np.einsum("bm,mn,bn->b", eu, ta.Ssum[idx], mean)
             + np.einsum("bm,mk,bk->b", eu, ta.Rsum[idx], eu))
        nrm = (np.einsum("ij,bji->b", self.gg[idx], cov)
               + np.einsum("bm,bm->b", eu, eu))
        return c, nrm

    def run(self, x0, v: np.ndarray, record: bool = False):
        """Propagate moments for every offset path in the batch.

        v has shape (B, K, m).  Returns (value, norm_sq) arrays of
        shape (B,), plus (mean_path, cov_path) when ``record``.
        """
        ta = self.ta
        times = self.times
        K = times.shape[0]
        B = v.shape[0]
        n = ta.n
        x0 = np.asarray(x0, dtype=float).reshape(n)
        mean = np.tile(x0, (B, 1))
        cov = np.zeros((B, n, n))
        value = np.zeros(B)
        norm_sq = np.zeros(B)
        if record:
            mean_path = np.empty((B, K, n))
            cov_path = np.empty((B, K, n, n))
            mean_path[:, 0] = mean
            cov_path[:, 0] = cov
        dm0, dC0 = self._rhs(0, mean, cov, v)
        c0, r0 = self._integrands(0, mean, cov, v)
        for j in range(0, K - 2, 2):
            i0, i1, i2 = j, j + 1, j + 2
            h = times[i2] - times[i0]
            m2_, C2_ = mean + 0.5 * h * dm0, cov + 0.5 * h * dC0
            k2m, k2C = self._rhs(i1, m2_, C2_, v)
            m3_, C3_ = mean + 0.5 * h * k2m, cov + 0.5 * h * k2C
            k3m, k3C = self._rhs(i1, m3_, C3_, v)
            m4_, C4_ = mean + h * k3m, cov + h * k3C
            k4m, k4C = self._rhs(i2, m4_, C4_, v)
            mean_n = mean + (h / 6.0) * (dm0 + 2.0 * (k2m + k3m) + k4m)
            cov_n = _sym(cov + (h / 6.0) * (dC0 + 2.0 * (k2C + k3C) + k4C))
            dm1, dC1 = self._rhs(i2, mean_n, cov_n, v)
            mean_mid = hermite_midpoint(mean, mean_n, dm0, dm1, h)
            cov_mid = _sym(hermite_midpoint(cov, cov_n, dC0, dC1, h))
            cm, rm = self._integrands(i1, mean_mid, cov_mid, v)
            c1, r1 = self._integrands(i2, mean_n, cov_n, v)
            value += (h / 6.0) * (c0 + 4.0 * cm + c1)
            norm_sq += (h / 6.0) * (r0 + 4.0 * rm + r1)
            if record:
                mean_path[:, i1] = mean_mid
                cov_path[:, i1] = cov_mid
                mean_path[:, i2] = mean_n
                cov_path[:, i2] = cov_n
            mean, cov, dm0, dC0, c0, r0 = mean_n, cov_n, dm1, dC1, c1, r1
        value += (np.einsum("ij,bji->b", ta.G, cov)
                  + np.einsum("bi,ij,bj->b", mean, ta.Gsum, mean))
        if record:
            return value, norm_sq, mean_path, cov_path
        return value, norm_sq, None, None


def _as_control_law(law) -> ControlLaw:
    if isinstance(law, FeedbackLaw):
        return law.as_control_law()
    if isinstance(law, ControlLaw):
        return law
    raise TypeError(f"expected a law, got {type(law).__name__}")


@dataclass(frozen=True, eq=False)
class MomentPath:
    """Mean, covariance, and control mean of one closed-loop run."""

    times: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    control_mean: np.ndarray
    x0: np.ndarray


def propagate_moments(spec: GameSpec, law, x0) -> MomentPath:
    """Exact first and second moments of the controlled state.

    The law's offset, gains, and partition fully determine the moment
    flow; no sampling is involved.
    """
    cl = _as_control_law(law)
    eng = _MomentEngine(spec, cl.times, cl.gain, cl.mean_gain)
    v = cl.offset[None]
    _, _, mean_path, cov_path = eng.run(x0, v, record=True)
    eu = (np.einsum("kmn,kn->km", cl.mean_gain, mean_path[0])
          + cl.offset)
    return MomentPath(times=cl.times, mean=mean_path[0], cov=cov_path[0],
                      control_mean=eu,
                      x0=np.asarray(x0, dtype=float).reshape(spec.n))


@dataclass(frozen=True)
class CostReport:
    """Functional value and squared L2 control norm of one law."""

    value: float
    control_norm_sq: float


def evaluate_functional(spec: GameSpec, law, x0) -> CostReport:
    """Game functional J(x0; u) for the law's realized control."""
    cl = _as_control_law(law)
    eng = _MomentEngine(spec, cl.times, cl.gain, cl.mean_gain)
    value, norm_sq, _, _ = eng.run(x0, cl.offset[None])
    return CostReport(value=float(value[0]),
                      control_norm_sq=float(norm_sq[0]))


@dataclass(frozen=True)
class MCReport:
    """Monte Carlo estimate of the functional with its standard error."""

    value: float
    stderr: float
    paths: int
    seed: int


def evaluate_functional_mc(spec: GameSpec, law, x0, paths: int = 10000,
                           seed: int = 0, block: int = 1000) -> MCReport:
    """Estimate J(x0; u) by Euler-Maruyama on the fluctuation process.

    The state mean is taken from the exact moment flow and only the
    centered part is simulated, so specs without noise reproduce the
    quadrature value path by path.  Fixing seed and paths fixes the
    estimate exactly.
    """
    cl = _as_control_law(law)
    eng = _MomentEngine(spec, cl.times, cl.gain, cl.mean_gain)
    ta = eng.ta
    _, _, mean_path, _ = eng.run(x0, cl.offset[None], record=True)
    mean = mean_path[0]
    eu = np.einsum("kmn,kn->km", cl.mean_gain, mean) + cl.offset
    g = (np.einsum("kij,kj->ki", ta.Csum, mean)
         + np.einsum("kim,km->ki", ta.Dsum, eu))
    times = cl.times
    K = times.shape[0]
    dt = np.diff(times)
    sq = np.sqrt(dt)
    # deterministic cost pieces (mean-field terms) are path-independent
    det = (np.einsum("ki,kij,kj->k", mean, ta.Qsum - ta.Q, mean)
           + 2.0 * np.einsum("km,kmn,kn->k", eu, ta.Ssum - ta.S, mean)
           + np.einsum("km,kmr,kr->k", eu, ta.Rsum - ta.R, eu))
    det_run = float(np.sum(0.5 * dt * (det[:-1] + det[1:])))
    det_term = float(mean[-1] @ (ta.Gsum - ta.G) @ mean[-1])

    rng = np.random.default_rng(seed)
    totals = np.empty(paths)
    done = 0
    n = spec.n
    while done < paths:
        bp = min(block, paths - done)
        dW = rng.standard_normal((bp, K - 1)) * sq
        Y = np.zeros((bp, n))
        acc = np.zeros(bp)
        X = mean[0] + Y
        u = np.einsum("mn,pn->pm", cl.gain[0], Y) + eu[0]
        c_prev = (np.einsum("pi,ij,pj->p", X, ta.Q[0], X)
                  + 2.0 * np.einsum("pm,mn,pn->p", u, ta.S[0], X)
                  + np.einsum("pm,mr,pr->p", u, ta.R[0], u))
        for i in range(K - 1):
            drift = np.einsum("ij,pj->pi", eng.F[i], Y)
            vol = np.einsum("ij,pj->pi", eng.Gm[i], Y) + g[i]
            Y = Y + dt[i] * drift + vol * dW[:, i, None]
            X = mean[i + 1] + Y
            u = np.einsum("mn,pn->pm", cl.gain[i + 1], Y) + eu[i + 1]
            c = (np.einsum("pi,ij,pj->p", X, ta.Q[i + 1], X)
                 + 2.0 * np.einsum("pm,mn,pn->p", u, ta.S[i + 1], X)
                 + np.einsum("pm,mr,pr->p", u, ta.R[i + 1], u))
            acc += 0.5 * dt[i] * (c_prev + c)
            c_prev = c
        acc += np.einsum("pi,ij,pj->p", X, ta.G, X)
        totals[done:done + bp] = acc + det_run + det_term
        done += bp
    value = float(np.mean(totals))
    if paths > 1:
        stderr = float(np.std(totals, ddof=1) / np.sqrt(paths))
    else:
        stderr = float("inf")
    return MCReport(value=value, stderr=stderr, paths=paths, seed=seed)


# ----------------------------------------------------------------------
# open-loop deviations and saddle verification
# ----------------------------------------------------------------------

class _DeviationEngine:
    """Functional values along open-loop bumps of the realized control.

    The base law runs closed-loop; the deviated state follows the
    realized control plus a deterministic bump, so its fluctuation
    Yd = Xd - E[Xd] couples to the base fluctuation Y through the
    shared control noise term.  With Lc = E[Y Yd'], the joint moment
    flow is again linear-quadratic, and the state marched here is
    (base mean, base cov, deviated mean, Lc, deviated cov) with the
    last three batched over bumps.
    """

    def __init__(self, spec: GameSpec, cl: ControlLaw,
                 arrays: _TimeArrays | None = None):
        self.cl = cl
        self.eng = _MomentEngine(spec, cl.times, cl.gain, cl.mean_gain,
                                 arrays=arrays)
        self.ta = self.eng.ta

    def _deu(self, idx, base_mean, bumps):
        """Mean of the deviated control: realized mean plus the bump."""
        eu = self.cl.mean_gain[idx] @ base_mean + self.cl.offset[idx]
        return eu[None] + bumps[:, idx]

    def _rhs(self, idx, state, bumps):
        eng, ta, cl = self.eng, self.ta, self.cl
        mean, cov, dmean, cross, dcov = state
        dm, dC = eng._rhs(idx, mean[None], cov[None], cl.offset[None])
        eu = cl.mean_gain[idx] @ mean + cl.offset[idx]
        g = ta.Csum[idx] @ mean + ta.Dsum[idx] @ eu

        deu = eu[None] + bumps[:, idx]
        ddm = (np.einsum("ij,bj->bi", ta.Asum[idx], dmean)
               + np.einsum("im,bm->bi", ta.Bsum[idx], deu))
        dg = (np.einsum("ij,bj->bi", ta.Csum[idx], dmean)
              + np.einsum("im,bm->bi", ta.Dsum[idx], deu))
        F, Gm = eng.F[idx], eng.Gm[idx]
        A, C = ta.A[idx], ta.C[idx]
        Bg = ta.B[idx] @ cl.gain[idx]
        Dg = ta.D[idx] @ cl.gain[idx]
        # d/dt E[Y Yd']: drift F Y / (A Yd + Bg Y), noise (Gm Y + g) /
        # (C Yd + Dg Y + dg)
        dcross = (np.einsum("ij,bjk->bik", F, cross)
                  + np.einsum("bik,jk->bij", cross, A)
                  + (cov @ Bg.T)[None]
                  + np.einsum("ij,bjk,lk->bil", Gm, cross, C)
                  + (Gm @ cov @ Dg.T)[None]
                  + np.einsum("i,bj->bij", g, dg))
        AL = np.einsum("ij,bjk->bik", A, dcov)
        BgL = np.einsum("ij,bjk->bik", Bg, cross)
        CLC = np.einsum("ij,bjk,lk->bil", C, dcov, C)
        CLDg = np.einsum("ij,bkj,lk->bil", C, cross, Dg)
        ddcov = (AL + np.swapaxes(AL, 1, 2) + BgL + np.swapaxes(BgL, 1, 2)
                 + CLC + CLDg + np.swapaxes(CLDg, 1, 2)
                 + (Dg @ cov @ Dg.T)[None]
                 + np.einsum("bi,bj->bij", dg, dg))
        return (dm[0], dC[0], ddm, dcross, ddcov)

    def _integrand(self, idx, state, bumps):
        ta, cl = self.ta, self.cl
        mean, cov, dmean, cross, dcov = state
        deu = self._deu(idx, mean, bumps)
        gain = cl.gain[idx]
        gS = gain.T @ ta.S[idx]
        # E<Q Xd, Xd> + 2 E<S Xd, ud> + E<R ud, ud> + barred mean terms;
        # the fluctuation of ud is gain @ Y (the base state's), so the
        # cross-covariance carries the mixed S term
        c = (np.einsum("ij,bji->b", ta.Q[idx], dcov)
             + np.einsum("bi,ij,bj->b", dmean, ta.Qsum[idx], dmean)
             + 2.0 * np.einsum("ij,bij->b", gS, cross)
             + 2.0 * np.einsum("bm,mn,bn->b", deu, ta.Ssum[idx], dmean)
             + np.einsum("ij,ji->", gain.T @ ta.R[idx] @ gain, cov)
             + np.einsum("bm,mr,br->b", deu, ta.Rsum[idx], deu))
        return c

    def run(self, x0, bumps: np.ndarray):
        """Functional values J(x0; realized control + bump_b)."""
        ta = self.ta
        times = self.cl.times
        K = times.shape[0]
        B = bumps.shape[0]
        n = ta.n
        x0 = np.asarray(x0, dtype=float).reshape(n)
        state = (x0.copy(), np.zeros((n, n)), np.tile(x0, (B, 1)),
                 np.zeros((B, n, n)), np.zeros((B, n, n)))
        value = np.zeros(B)

        def _axpy(s, h, d):
            return tuple(a + h * b for a, b in zip(s, d))

        d0 = self._rhs(0, state, bumps)
        c0 = self._integrand(0, state, bumps)
        for j in range(0, K - 2, 2):
            i0, i1, i2 = j, j + 1, j + 2
            h = times[i2] - times[i0]
            k2 = self._rhs(i1, _axpy(state, 0.5 * h, d0), bumps)
            k3 = self._rhs(i1, _axpy(state, 0.5 * h, k2), bumps)
            k4 = self._rhs(i2, _axpy(state, h, k3), bumps)
            state_n = tuple(
                s + (h / 6.0) * (a + 2.0 * (b + c) + d)
                for s, a, b, c, d in zip(state, d0, k2, k3, k4))
            state_n = (state_n[0], _sym(state_n[1]), state_n[2],
                       state_n[3], _sym(state_n[4]))
            d1 = self._rhs(i2, state_n, bumps)
            state_mid = tuple(hermite_midpoint(s0, s1, f0, f1, h)
                              for s0, s1, f0, f1 in zip(state, state_n,
                                                        d0, d1))
            cm = self._integrand(i1, state_mid, bumps)
            c1 = self._integrand(i2, state_n, bumps)
            value += (h / 6.0) * (c0 + 4.0 * cm + c1)
            state, d0, c0 = state_n, d1, c1
        _, _, dmean, _, dcov = state
        value += (np.einsum("ij,bji->b", ta.G, dcov)
                  + np.einsum("bi,ij,bj->b", dmean, ta.Gsum, dmean))
        return value


def _direction_shapes(times: np.ndarray):
    """Unit-norm scalar bump shapes: quarter windows and low polynomials."""
    T = float(times[-1])
    shapes = []
    for q in range(4):
        lo, hi = q * T / 4.0, (q + 1) * T / 4.0
        ind = ((times >= lo) & (times < hi)).astype(float)
        if q == 3:
            ind = ((times >= lo) & (times <= hi)).astype(float)
        shapes.append((f"window{q + 1}", ind / np.sqrt(T / 4.0)))
    s = times / T
    for name, arr in (("const", np.ones_like(s)),
                      ("ramp", s * np.sqrt(3.0)),
                      ("arc", s**2 * np.sqrt(5.0))):
        shapes.append((name, arr / np.sqrt(T)))
    return shapes


@dataclass(frozen=True, eq=False)
class SaddleReport:
    """Outcome of open-loop saddle probing around a law.

    ``stationarity`` and ``curvature`` are per-direction: the linear
    and quadratic coefficients of the functional in the bump size.
    A saddle needs all linear terms ~ 0, nonnegative curvature for
    the minimizing player, nonpositive for the maximizing one.
    """

    is_saddle: bool
    value: float
    stationarity_sup: float
    curvature_min_1: float
    curvature_max_2: float
    quadratic_defect: float
    players: np.ndarray
    stationarity: np.ndarray
    curvature: np.ndarray
    tol: float
    curvature_tol: float


def verify_saddle(spec: GameSpec, law, x0, tol: float = 1e-6,
                  curvature_tol: float = 1e-9) -> SaddleReport:
    """Probe the saddle property of a law by open-loop deviations.

    Each player's realized control is bumped along unit-norm window
    and polynomial directions in every control coordinate, at sizes
    +-1 and +-0.1; the opponent keeps the realized control process.
    The functional is exactly quadratic in the size, so the linear
    and quadratic coefficients per direction are recovered exactly up
    to quadrature roundoff (their cross-size disagreement is reported
    as ``quadratic_defect``).
    """
    cl = _as_control_law(law)
    K = cl.times.shape[0]
    m, m1 = spec.m, spec.m1
    shapes = _direction_shapes(cl.times)
    dirs = []
    players = []
    for player, lo, mi in ((1, 0, spec.m1), (2, m1, spec.m2)):
        for coord in range(mi):
            for _name, shape in shapes:
                b = np.zeros((K, m))
                b[:, lo + coord] = shape
                dirs.append(b)
                players.append(player)
    players = np.array(players)
    D = len(dirs)
    lams = (1.0, -1.0, 0.1, -0.1)
    bumps = np.empty((1 + 4 * D, K, m))
    bumps[0] = 0.0
    for d, b in enumerate(dirs):
        for i, lam in enumerate(lams):
            bumps[1 + 4 * d + i] = lam * b
    dev = _DeviationEngine(spec, cl)
    values = dev.run(x0, bumps)
    base = float(values[0])
    lin = np.empty(D)
    quad = np.empty(D)
    defect = 0.0
    for d in range(D):
        jp, jm, jp1, jm1 = values[1 + 4 * d:5 + 4 * d]
        lin_big = 0.5 * (jp - jm)
        quad_big = 0.5 * (jp + jm) - base
        lin_small = (jp1 - jm1) / 0.2
        quad_small = (0.5 * (jp1 + jm1) - base) / 0.01
        lin[d] = lin_big if abs(lin_big) > abs(lin_small) else lin_small
        quad[d] = quad_big
        defect = max(defect, abs(quad_big - quad_small),
                     abs(lin_big - lin_small))
    scale = 1.0 + abs(base)
    cur1 = quad[players == 1]
    cur2 = quad[players == 2]
    curvature_min_1 = float(cur1.min()) if cur1.size else float("inf")
    curvature_max_2 = float(cur2.max()) if cur2.size else float("-inf")
    stat_sup = float(np.max(np.abs(lin)))
    ok = (stat_sup <= tol * scale
          and curvature_min_1 >= -curvature_tol * scale
          and curvature_max_2 <= curvature_tol * scale)
    return SaddleReport(is_saddle=bool(ok), value=base,
                        stationarity_sup=stat_sup,
                        curvature_min_1=curvature_min_1,
                        curvature_max_2=curvature_max_2,
                        quadratic_defect=float(defect), players=players,
                        stationarity=lin, curvature=quad, tol=tol,
                        curvature_tol=curvature_tol)


def write_moments_csv(path, moments: MomentPath) -> None:
    """Boundary rows of the moment path: t, mean, covariance entries."""
    n = moments.mean.shape[1]
    header = (["t"] + [f"mean_{i}" for i in range(n)]
              + [f"cov_{i}_{j}" for i in range(n) for j in range(n)])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(0, moments.times.shape[0], 2):
            row = ([f"{moments.times[k]:.17g}"]
                   + [f"{x:.17g}" for x in moments.mean[k]]
                   + [f"{x:.17g}" for x in moments.cov[k].ravel()])
            fh.write(",".join(row) + "\n")


def write_feedback_csv(path, law: FeedbackLaw) -> None:
    """Boundary rows of the feedback gains: t, then both gain matrices."""
    m, n = law.gain.shape[1], law.gain.shape[2]
    header = (["t"] + [f"gain_{i}_{j}" for i in range(m) for j in range(n)]
              + [f"mean_gain_{i}_{j}" for i in range(m) for j in range(n)])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(0, law.times.shape[0], 2):
            row = ([f"{law.times[k]:.17g}"]
                   + [f"{x:.17g}" for x in law.gain[k].ravel()]
                   + [f"{x:.17g}" for x in law.mean_gain[k].ravel()])
            fh.write(",".join(row) + "\n")
