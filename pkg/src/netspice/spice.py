"""Hyperparameter-free sparse estimator for one node's tap vector.

The estimator minimizes the square-root LASSO criterion

    F(theta) = ||y - A theta||_2 + sum_m lambda_m |theta_m|,

with the data-driven weights lambda_m = ||a_m||_2 / sqrt(N).  No tuning knob
is exposed: the weights fall out of a covariance-matching argument.  Model the
data as y ~ N(0, R) with R = A diag(p) A' + sigma2 I and fit (p, sigma2) by
matching R to the sample covariance; the matched power vector then yields
theta = diag(p) A' R^{-1} y, which coincides with the minimizer of F.

The workhorse is a multiplicative fixed-point sweep on (p, sigma2) that
decreases the merit y'R^{-1}y * (sum_m v_m^2 p_m + v0^2 sigma2), v_m =
lambda_m, at every step.  solve_node iterates the sweep and finishes with an
active-set step that solves the sign-restricted criterion on the detected
support in closed form, so the returned tap vector meets the KKT tolerance.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .netmodel import NodeEstimate, RegressionProblem

__all__ = [
    "SolverConfig",
    "SqrtLassoProblem",
    "KKTUndefinedError",
    "solve_node",
    "spice_sweep",
    "spice_objective",
    "kkt_residual",
    "sqrt_lasso_objective",
    "solve_l0_oracle",
]

_LAMBDA_SCALES = ("inv_sqrt_n", "one")

# Relative residual below which a fit counts as exact interpolation.
_INTERP_RTOL = 1e-13


class KKTUndefinedError(RuntimeError):
    """Raised when ||r|| = 0 and no trivial optimality certificate exists."""


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the fixed-point solver.

    max_iterations : sweep budget per node.
    rel_tol : stop when the largest relative change in (p, sigma2) over one
        sweep falls below this.
    kkt_tol : optimality tolerance on the returned tap vector.
    power_floor : lower clamp on p entries of penalized columns, so a
        coefficient is never absorbed at exactly zero mid-iteration.
    lambda_scale : "inv_sqrt_n" for lambda_m = ||a_m||/sqrt(N) (default) or
        "one" for lambda_m = ||a_m||.
    noise_weight : merit weight v0 of the noise power (default 1.0).
    """

    max_iterations: int = 1000
    rel_tol: float = 1e-8
    kkt_tol: float = 1e-6
    power_floor: float = 1e-12
    lambda_scale: str = "inv_sqrt_n"
    noise_weight: float = 1.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if min(self.rel_tol, self.kkt_tol, self.power_floor) <= 0:
            raise ValueError("tolerances must be > 0")
        if self.lambda_scale not in _LAMBDA_SCALES:
            raise ValueError(
                f"lambda_scale must be one of {_LAMBDA_SCALES}, "
                f"got {self.lambda_scale!r}")
        if self.noise_weight <= 0:
            raise ValueError("noise_weight must be > 0")

    def to_dict(self) -> dict:
        return {
            "max_iterations": self.max_iterations,
            "rel_tol": self.rel_tol,
            "kkt_tol": self.kkt_tol,
            "power_floor": self.power_floor,
            "lambda_scale": self.lambda_scale,
            "noise_weight": self.noise_weight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        return cls(**d)


def _column_weights(A: np.ndarray, scale: str) -> np.ndarray:
    norms = np.linalg.norm(A, axis=0)
    if scale == "inv_sqrt_n":
        return norms / np.sqrt(A.shape[0])
    return norms


@dataclass(eq=False)
class SqrtLassoProblem:
    """Penalized regression data (A, y, lam); lam_m = 0 iff column m is zero."""

    A: np.ndarray
    y: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if self.A.ndim != 2 or self.y.ndim != 1 or self.lam.ndim != 1:
            raise ValueError("A must be 2-d, y and lam 1-d")
        N, M = self.A.shape
        if self.y.shape[0] != N or self.lam.shape[0] != M:
            raise ValueError("shape mismatch between A, y, lam")
        if np.any(self.lam < 0):
            raise ValueError("lam must be nonnegative")
        zero_col = np.linalg.norm(self.A, axis=0) == 0.0
        if np.any(zero_col != (self.lam == 0.0)):
            raise ValueError("lam_m must vanish exactly on zero columns")

    @classmethod
    def from_regression(cls, problem: RegressionProblem,
                        config: SolverConfig | None = None) -> "SqrtLassoProblem":
        cfg = config or SolverConfig()
        lam = _column_weights(problem.A, cfg.lambda_scale) / cfg.noise_weight
        return cls(A=problem.A, y=problem.y, lam=lam)


def sqrt_lasso_objective(problem: SqrtLassoProblem, theta: np.ndarray) -> float:
    """F(theta) = ||y - A theta||_2 + lam . |theta|."""
    theta = np.asarray(theta, dtype=float)
    resid = problem.y - problem.A @ theta
    return float(np.linalg.norm(resid) + problem.lam @ np.abs(theta))


def kkt_residual(problem: SqrtLassoProblem, theta: np.ndarray) -> float:
    """Worst first-order optimality violation of theta.

    With r = y - A theta and g = A'r/||r||: active coordinates contribute
    |g_m - lam_m sign(theta_m)|, inactive ones max(0, |g_m| - lam_m).  Zero
    at (and only near) the minimizer of the criterion.

    When r vanishes the gradient direction is undefined.  A zero is still
    returned when optimality can be certified directly: the least-norm u with
    A_S' u = lam_S sign(theta_S) on the support must satisfy ||u|| <= 1 and
    |a_m' u| <= lam_m off the support.  Otherwise KKTUndefinedError is raised.
    """
    theta = np.asarray(theta, dtype=float)
    A, y, lam = problem.A, problem.y, problem.lam
    r = y - A @ theta
    rnorm = float(np.linalg.norm(r))
    if rnorm <= _INTERP_RTOL * max(np.linalg.norm(y), 1.0):
        return _certify_interpolation(problem, theta)
    g = A.T @ r / rnorm
    active = theta != 0.0
    out = 0.0
    if np.any(active):
        out = float(np.max(np.abs(g[active] - lam[active] * np.sign(theta[active]))))
    if np.any(~active):
        slack = np.abs(g[~active]) - lam[~active]
        out = max(out, float(np.max(slack)), 0.0)
    return max(out, 0.0)


def _certify_interpolation(problem: SqrtLassoProblem, theta: np.ndarray) -> float:
    """Return 0.0 when an interpolating theta is provably optimal, else raise."""
    A, lam = problem.A, problem.lam
    active = theta != 0.0
    tol = 1e-9 * max(1.0, float(np.max(lam, initial=0.0)))
    if not np.any(active):
        # y itself is (numerically) zero; theta = 0 is trivially optimal.
        return 0.0
    As = A[:, active]
    target = lam[active] * np.sign(theta[active])
    u, *_ = np.linalg.lstsq(As.T, target, rcond=None)
    ok = (np.max(np.abs(As.T @ u - target)) <= tol
          and np.linalg.norm(u) <= 1.0 + tol
          and (not np.any(~active)
               or np.max(np.abs(A[:, ~active].T @ u) - lam[~active]) <= tol))
    if ok:
        return 0.0
    raise KKTUndefinedError(
        "exact interpolation: KKT residual undefined (no trivial certificate)")


class _Workspace:
    """Precomputed quantities for repeated R^{-1} y applications.

    Two algebraically identical routes: an N x N factorization of
    R = A diag(p) A' + sigma2 I, or, when M < N and sigma2 is not tiny, the
    M x M form R^{-1}y = (y - A s (s Gram s + sigma2 I)^{-1} s A'y)/sigma2
    with s = sqrt(p), which is much cheaper for long records.
    """

    def __init__(self, A: np.ndarray, y: np.ndarray, v: np.ndarray, v0: float):
        self.A = A
        self.y = y
        self.v = v
        self.v0 = v0
        self.N, self.M = A.shape
        self.Aty = A.T @ y
        self.yty = float(y @ y)
        self.gram = A.T @ A if self.M < self.N else None
        self._sig_floor = 1e-10 * max(self.yty / self.N, 1e-300)

    def apply_inverse(self, p: np.ndarray, sigma2: float):
        """Return (z, Atz) with z = R^{-1} y."""
        if self.gram is not None and sigma2 > self._sig_floor:
            s = np.sqrt(p)
            C = s[:, None] * self.gram * s[None, :]
            C[np.diag_indices_from(C)] += sigma2
            try:
                cf = cho_factor(C, lower=True, check_finite=False)
            except LinAlgError:
                pass
            else:
                t = cho_solve(cf, s * self.Aty, check_finite=False)
                z = (self.y - self.A @ (s * t)) / sigma2
                Atz = (self.Aty - self.gram @ (s * t)) / sigma2
                return z, Atz
        R = (self.A * p) @ self.A.T
        R[np.diag_indices_from(R)] += sigma2
        try:
            cf = cho_factor(R, lower=True, check_finite=False)
        except LinAlgError as exc:
            raise LinAlgError(
                "singular covariance model: sigma2 = 0 and A diag(p) A' "
                "is rank deficient") from exc
        z = cho_solve(cf, self.y, check_finite=False)
        return z, self.A.T @ z

    def sweep(self, p: np.ndarray, sigma2: float):
        """One fixed-point update; returns (p_new, sigma2_new, merit_before)."""
        z, Atz = self.apply_inverse(p, sigma2)
        c = np.abs(Atz)
        c0 = float(np.linalg.norm(z))
        rho = float((self.v * p) @ c + self.v0 * sigma2 * c0)
        if rho <= 0.0:
            raise ArithmeticError("degenerate sweep: update scale rho = 0")
        with np.errstate(divide="ignore", invalid="ignore"):
            p_new = np.where(self.v > 0.0, p * c / (np.where(self.v > 0.0, self.v, 1.0) * rho), 0.0)
        sigma2_new = sigma2 * c0 / (self.v0 * rho)
        merit = float(self.y @ z) * float((self.v ** 2) @ p + self.v0 ** 2 * sigma2)
        return p_new, sigma2_new, merit


def _check_sweep_inputs(p: np.ndarray, sigma2: float, M: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (M,):
        raise ValueError(f"p must have shape ({M},), got {p.shape}")
    if np.any(p < 0) or sigma2 < 0:
        raise ValueError("powers must be nonnegative")
    if not np.any(p > 0) and sigma2 == 0:
        raise ValueError("p and sigma2 must not all be zero")
    return p


def spice_sweep(p: np.ndarray, sigma2: float, problem: RegressionProblem,
                config: SolverConfig | None = None):
    """One covariance-matching update of (p, sigma2).

    With R = A diag(p) A' + sigma2 I, z = R^{-1} y, c_m = |a_m' z| and
    c0 = ||z||, the update is

        p_m    <- p_m c_m / (v_m rho)          (0 when v_m = 0)
        sigma2 <- sigma2 c0 / (v0 rho)

    where rho = sum_m v_m p_m c_m + v0 sigma2 c0.  The merit
    y'R^{-1}y * (sum_m v_m^2 p_m + v0^2 sigma2) never increases, and the
    update lands on the slice sum_m v_m^2 p_m + v0^2 sigma2 = 1.
    """
    cfg = config or SolverConfig()
    A = problem.A
    p = _check_sweep_inputs(p, sigma2, A.shape[1])
    v = _column_weights(A, cfg.lambda_scale)
    ws = _Workspace(A, problem.y, v, cfg.noise_weight)
    p_new, sigma2_new, _ = ws.sweep(p, sigma2)
    return p_new, sigma2_new


def spice_objective(p: np.ndarray, sigma2: float, problem: RegressionProblem,
                    config: SolverConfig | None = None) -> float:
    """Merit y'R^{-1}y * (sum_m v_m^2 p_m + v0^2 sigma2) at (p, sigma2)."""
    cfg = config or SolverConfig()
    A = problem.A
    p = _check_sweep_inputs(p, sigma2, A.shape[1])
    v = _column_weights(A, cfg.lambda_scale)
    ws = _Workspace(A, problem.y, v, cfg.noise_weight)
    z, _ = ws.apply_inverse(p, sigma2)
    return float(problem.y @ z) * float((v ** 2) @ p + cfg.noise_weight ** 2 * sigma2)


def _active_set_finish(A: np.ndarray, y: np.ndarray, lam: np.ndarray,
                       theta_start: np.ndarray, max_steps: int):
    """Exact sign-restricted minimization on a working support.

    For a fixed support S and sign vector s the criterion is smooth and its
    minimizer has the closed form theta_S = G^{-1}(b - t lam_S s) with
    G = A_S'A_S, b = A_S'y, t = ||r_ls|| / sqrt(1 - lam s'G^{-1} lam s).
    Coordinates whose sign flips are dropped, off-support violations are
    added, until the KKT system is satisfied.  Returns None when the problem
    leaves the smooth regime (interpolation) or the support cycles.

    The starting support is capped at N - 1 columns (largest magnitudes
    first); a solution with a larger support would interpolate.
    """
    N, M = A.shape
    ynorm = float(np.linalg.norm(y))
    eligible = lam > 0.0
    support = (theta_start != 0.0) & eligible
    if np.count_nonzero(support) >= N:
        order = np.argsort(-np.abs(theta_start))
        keep = [m for m in order if support[m]][: max(N - 1, 1)]
        support = np.zeros(M, dtype=bool)
        support[keep] = True
    signs = np.sign(theta_start)
    magnitude = np.abs(theta_start)
    tol = 1e-12 * max(1.0, float(np.max(lam, initial=0.0)))
    for _ in range(max_steps):
        idx = np.flatnonzero(support)
        if idx.size == 0:
            theta = np.zeros(M)
            r = y
            rnorm = ynorm
            if rnorm <= _INTERP_RTOL:
                return None
        else:
            As = A[:, idx]
            G = As.T @ As
            b = As.T @ y
            try:
                cf = cho_factor(G, lower=True, check_finite=False)
            except LinAlgError:
                # Rank-deficient working set: shed the weakest coordinate.
                if idx.size == 1:
                    return None
                support[idx[np.argmin(magnitude[idx])]] = False
                continue
            ls = lam[idx] * signs[idx]
            th_ls = cho_solve(cf, b, check_finite=False)
            g = cho_solve(cf, ls, check_finite=False)
            c2 = float(ls @ g)
            if c2 >= 1.0 - 1e-12:
                # This sign orthant only decreases toward interpolation;
                # shrink the working set (c2 grows with the support).
                if idx.size == 1:
                    return None
                support[idx[np.argmin(magnitude[idx])]] = False
                continue
            r_ls = y - As @ th_ls
            R0 = float(np.linalg.norm(r_ls))
            if R0 <= _INTERP_RTOL * max(ynorm, 1.0):
                # The working set interpolates y exactly, so the restricted
                # minimizer is th_ls itself.  Sign conflicts are dropped as
                # in the generic step; once sign-feasible, the dual
                # u = A_S G^{-1} lam_S s has norm^2 = c2 < 1 and certifies
                # optimality unless some off-support column violates, in
                # which case the working set is too large: shed the weakest.
                flipped = th_ls * signs[idx] <= 0.0
                if np.any(flipped):
                    worst = idx[np.argmin(th_ls * signs[idx])]
                    support[worst] = False
                    continue
                u = As @ g
                off = eligible & ~support
                if np.any(np.abs(A[:, off].T @ u) > lam[off] + tol):
                    if idx.size == 1:
                        return None
                    support[idx[np.argmin(magnitude[idx])]] = False
                    continue
                theta = np.zeros(M)
                theta[idx] = th_ls
                return theta
            t = R0 / np.sqrt(1.0 - c2)
            th_s = th_ls - t * g
            flipped = th_s * signs[idx] <= 0.0
            if np.any(flipped):
                # Drop the worst sign violation and retry.
                worst = idx[np.argmin(th_s * signs[idx])]
                support[worst] = False
                continue
            theta = np.zeros(M)
            theta[idx] = th_s
            magnitude[idx] = np.abs(th_s)
            r = y - As @ th_s
            rnorm = t
        u = A.T @ r / rnorm
        slack = np.where(eligible & ~support, np.abs(u) - lam, -np.inf)
        worst = int(np.argmax(slack))
        if slack[worst] <= tol:
            return theta
        support[worst] = True
        signs[worst] = np.sign(u[worst])
        magnitude[worst] = np.inf
    return None


def _interpolation_finish(A: np.ndarray, y: np.ndarray, lam: np.ndarray,
                          theta_start: np.ndarray, max_steps: int):
    """Exact minimizer when the optimum interpolates (||r|| = 0).

    On strongly underdetermined problems the criterion's minimum can sit at
    A theta = y; there the solution solves min lam.|theta| subject to
    interpolation.  Starting from an invertible column basis this pivots:
    as long as some off-basis column violates |a_m'u| <= lam_m for the basis
    dual u = A_S^{-T} lam_S sign(theta_S), moving weight onto that column
    strictly decreases the penalty until a basis coordinate hits zero and
    swaps out.  Returns the interpolating optimum only when its dual
    certificate also has ||u|| <= 1, i.e. when it beats every
    non-interpolating candidate; otherwise None.
    """
    N, M = A.shape
    if M < N:
        return None
    order = np.argsort(-np.abs(theta_start), kind="stable")
    cand = [m for m in order if lam[m] > 0.0]
    if len(cand) < N:
        return None
    S = np.array(cand[:N])
    try:
        th = np.linalg.solve(A[:, S], y)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(th)):
        return None
    tol = 1e-12 * max(1.0, float(np.max(lam)))
    for _ in range(max_steps):
        signs = np.sign(th)
        try:
            u = np.linalg.solve(A[:, S].T, lam[S] * signs)
        except np.linalg.LinAlgError:
            return None
        corr = A.T @ u
        slack = np.abs(corr) - lam
        slack[S] = -np.inf
        slack[lam == 0.0] = -np.inf
        worst = int(np.argmax(slack))
        if slack[worst] <= tol:
            if np.linalg.norm(u) <= 1.0 + 1e-9:
                theta = np.zeros(M)
                theta[S] = th
                return theta
            return None
        sig = 1.0 if corr[worst] > 0 else -1.0
        d = np.linalg.solve(A[:, S], A[:, worst])
        ratios = np.where(sig * d * signs > 0, th / (sig * d), np.inf)
        leave = int(np.argmin(ratios))
        step = float(ratios[leave])
        if not np.isfinite(step):
            return None
        th = th - step * sig * d
        th[leave] = step * sig
        S = S.copy()
        S[leave] = worst
    return None


def solve_node(problem: RegressionProblem,
               config: SolverConfig | None = None) -> NodeEstimate:
    """Estimate one node's tap vector by covariance matching.

    Iterates spice_sweep from the matched-filter initialization
    p_m = (a_m'y / ||a_m||^2)^2, sigma2 = 0.1 Var(y) until (p, sigma2)
    stabilizes, recovers theta = diag(p) A' R^{-1} y, and runs the
    active-set finish on the detected support.  The returned (p, sigma2) is
    the normalized fixed point matching theta, so one further sweep leaves
    it unchanged.

    Non-convergence is not an exception: the best iterate comes back with
    converged=False and its kkt_residual.
    """
    cfg = config or SolverConfig()
    A, y = problem.A, problem.y
    N, M = A.shape
    zeros = np.zeros(M)
    if not np.any(y != 0.0):
        return NodeEstimate(theta=zeros, p=zeros.copy(), sigma2=0.0,
                            kkt_residual=0.0, iterations=0, converged=True)
    norms = np.linalg.norm(A, axis=0)
    if not np.any(norms > 0.0):
        raise ValueError("A has no nonzero column")
    v = _column_weights(A, cfg.lambda_scale)
    v0 = cfg.noise_weight
    lam = v / v0
    ws = _Workspace(A, y, v, v0)
    penalized = v > 0.0

    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(penalized, (ws.Aty / np.where(penalized, norms ** 2, 1.0)) ** 2, 0.0)
    p[penalized] = np.maximum(p[penalized], cfg.power_floor)
    sigma2 = 0.1 * float(np.dot(y, y)) / N

    trace = []
    iterations = 0
    for it in range(1, cfg.max_iterations + 1):
        p_new, sigma2_new, merit = ws.sweep(p, sigma2)
        p_new[penalized] = np.maximum(p_new[penalized], cfg.power_floor)
        iterations = it
        if trace and merit > trace[-1] * (1.0 + 1e-10) + 1e-300:
            # Descent stalled at float precision; more sweeps cannot help.
            trace.append(merit)
            break
        trace.append(merit)
        scale = max(float(np.max(p_new)), sigma2_new)
        change = max(float(np.max(np.abs(p_new - p))), abs(sigma2_new - sigma2))
        p, sigma2 = p_new, sigma2_new
        if change <= cfg.rel_tol * max(scale, 1e-300):
            break
        if it % 25 == 0 and _quick_kkt(ws, lam, p, sigma2, cfg) <= 0.5 * cfg.kkt_tol:
            break

    theta, kkt = _finalize(ws, lam, p, sigma2, cfg)
    p_out, sigma2_out = _normalized_fixed_point(ws, lam, theta, v, v0)
    return NodeEstimate(theta=theta, p=p_out, sigma2=sigma2_out,
                        kkt_residual=kkt, iterations=iterations,
                        converged=bool(kkt <= cfg.kkt_tol),
                        objective_trace=np.asarray(trace))


def _raw_theta(ws: _Workspace, p: np.ndarray, sigma2: float,
               cfg: SolverConfig) -> np.ndarray:
    _, Atz = ws.apply_inverse(p, sigma2)
    theta = p * Atz
    theta[p <= 10.0 * cfg.power_floor] = 0.0
    return theta

def _quick_kkt(ws: _Workspace, lam: np.ndarray, p: np.ndarray, sigma2: float,
               cfg: SolverConfig) -> float:
    spr = SqrtLassoProblem(A=ws.A, y=ws.y, lam=lam)
    try:
        return kkt_residual(spr, _raw_theta(ws, p, sigma2, cfg))
    except KKTUndefinedError:
        return np.inf


def _finalize(ws: _Workspace, lam: np.ndarray, p: np.ndarray, sigma2: float,
              cfg: SolverConfig):
    """Pick the best tap vector reachable from the final sweep state.

    Tries the active-set finish warm-started from the sweep's support, then
    from scratch; keeps whichever candidate has the lowest criterion value.
    """
    spr = SqrtLassoProblem(A=ws.A, y=ws.y, lam=lam)
    theta = _raw_theta(ws, p, sigma2, cfg)
    best = theta
    best_obj = sqrt_lasso_objective(spr, theta)
    max_steps = 4 * ws.M + 20
    for start in (theta, np.zeros(ws.M)):
        polished = _active_set_finish(ws.A, ws.y, lam, start, max_steps)
        if polished is None:
            continue
        obj = sqrt_lasso_objective(spr, polished)
        if obj <= best_obj + 1e-12:
            best, best_obj = polished, obj
            break

    def _kkt_of(vec):
        try:
            return kkt_residual(spr, vec)
        except KKTUndefinedError:
            return np.inf

    kkt = _kkt_of(best)
    if kkt > cfg.kkt_tol:
        # The optimum may interpolate; try the pivoting finisher.
        interp = _interpolation_finish(ws.A, ws.y, lam, theta, 6 * ws.M + 30)
        if interp is not None:
            obj = sqrt_lasso_objective(spr, interp)
            if obj <= best_obj + 1e-12:
                best, best_obj = interp, obj
                kkt = _kkt_of(best)
    return best, kkt


def _normalized_fixed_point(ws: _Workspace, lam: np.ndarray, theta: np.ndarray,
                            v: np.ndarray, v0: float):
    """Map a tap vector to the matching normalized power state.

    p_m = |theta_m|/(v_m S), sigma2 = ||r||/(v0 S) with S = sum v|theta| +
    v0 ||r|| puts (p, sigma2) on the slice sum v^2 p + v0^2 sigma2 = 1 where
    theta = diag(p) A' R^{-1} y holds at optimality.
    """
    r = ws.y - ws.A @ theta
    rnorm = float(np.linalg.norm(r))
    S = float(v @ np.abs(theta) + v0 * rnorm)
    if S <= 0.0:
        return np.zeros(ws.M), 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(v > 0.0, np.abs(theta) / (np.where(v > 0.0, v, 1.0) * S), 0.0)
    return p, rnorm / (v0 * S)


def solve_l0_oracle(problem: RegressionProblem, max_support: int) -> np.ndarray:
    """Best-subset reference: exact residual minimizer with a support cap.

    Enumerates every support of size <= max_support over the nonzero columns
    and refits by least squares.  Exponential in the column count, so it is
    guarded to at most 20 columns.  Ties keep the smallest, lexicographically
    first support.
    """
    A, y = problem.A, problem.y
    N, M = A.shape
    if M > 20:
        raise ValueError(f"enumeration guard: {M} columns > 20")
    if not 0 <= max_support <= M:
        raise ValueError(f"max_support must be in 0..{M}")
    candidates = [m for m in range(M) if np.any(A[:, m] != 0.0)]
    best_theta = np.zeros(M)
    best_rss = float(y @ y)
    # Differences below dust are ties; ties keep the earlier (smaller,
    # lexicographically first) support.
    dust = 1e-12 * max(best_rss, 1.0)
    for size in range(1, max_support + 1):
        for sub in itertools.combinations(candidates, size):
            cols = list(sub)
            sol, *_ = np.linalg.lstsq(A[:, cols], y, rcond=None)
            r = y - A[:, cols] @ sol
            rss = float(r @ r)
            if rss < best_rss - dust:
                best_rss = rss
                best_theta = np.zeros(M)
                best_theta[cols] = sol
    return best_theta
