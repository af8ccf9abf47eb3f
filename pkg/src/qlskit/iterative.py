"""Krylov solvers for A^T A x = A^T b + c.

Four variants with rather different rounding behaviour:

* ``cg_base``: conjugate gradients on the normal equations with the
  right-hand side A^T b + c formed once up front.  The rounding error
  committed in that single formation is amplified by kappa(A)^2 and is
  never repaired later; the solver is included as the baseline.
* ``cgls``: least-squares CG on (A, b), re-forming r = A^T d every
  iteration instead of recurring it.
* ``cgls_eps``: cgls applied to the stacked system [A; eps c^T] with
  right-hand side (b, 1/eps).  eps is an exact power of two so the two
  scalings of c are exact; the solution differs from the base problem's
  by O(eps^2).
* ``cgls_i``: cgls applied to [A; c^T] with (b, 1) where the last
  residual coordinate is pinned to one instead of being updated.  This
  solves the base problem itself, and the distance between the recurred
  and true stacked residuals is tracked per iteration.

``minres_augmented`` runs MINRES on the symmetric saddle form as an
orthogonal point of comparison.

All solvers stop on relative reduction of the recurred residual below
``tol`` (default 100 times the unit roundoff), on ``patience``
consecutive iterations without a new best residual norm (default 50,
treated as converged to the attainable level), or at
``max_iterations`` (default ten times the column count).  Ill
conditioned spectra can stagnate for long stretches and then resume
converging, so experiment configurations raise the patience.

Whatever the stopping reason, the x handed back is the iterate whose
recurred residual norm was smallest, not the last one computed: past
the attainable floor the directions lose conjugacy and the iterate
random-walks, so the last iterate can be arbitrarily bad while the
best one is converged.  Histories are truncated at the returned
iterate, keeping their lengths consistent with ``iterations``.
"""

import numpy as np
from dataclasses import dataclass

from . import linalg as la
from .errors import DimensionMismatch, InvalidParameter
from .problems import DEFAULT_EPS, build_eps_system, build_hat_system

DEFAULT_TOL = 100.0 * la.U

# Iterations allowed without improving on the best residual norm so far.
STALL_PATIENCE = 50

# Past its floor the recurred residual of the re-forming solvers grows
# geometrically; a norm this far above the initial one (or a nonfinite
# one) cannot be a stagnation plateau, so the run stops there instead of
# wandering until the overflow threshold.
DIVERGENCE_FACTOR = 1e13


@dataclass
class IterationControl:
    """Stopping parameters; None fields take solver defaults."""

    tol: float = None
    max_iterations: int = None
    x0: np.ndarray = None
    patience: int = None

    def resolve(self, n):
        tol = DEFAULT_TOL if self.tol is None else float(self.tol)
        maxit = 10 * n if self.max_iterations is None else int(self.max_iterations)
        patience = STALL_PATIENCE if self.patience is None else int(self.patience)
        if not tol > 0.0:
            raise InvalidParameter("tol must be positive")
        if maxit < 1:
            raise InvalidParameter("max_iterations must be >= 1")
        if patience < 1:
            raise InvalidParameter("patience must be >= 1")
        if self.x0 is None:
            x0 = np.zeros(n)
        else:
            x0 = la.as_vector(self.x0, "x0").copy()
            if x0.shape[0] != n:
                raise DimensionMismatch("x0 length does not match column count")
        return tol, maxit, x0, patience


@dataclass
class SolveOutcome:
    """Result of an iterative solve.

    ``x`` is the iterate with the smallest recurred residual norm and
    ``iterations`` is its index.  ``residual_norm_history`` holds one
    entry per iteration (entry k-1 is the recurred norm after k
    iterations; the initial norm is not stored), so its length equals
    ``iterations``; ``true_residual_gap_history`` follows the same
    convention.  ``status`` is one of "converged", "max_iterations",
    "breakdown".
    """

    x: np.ndarray
    iterations: int
    residual_norm_history: np.ndarray
    true_residual_gap_history: np.ndarray = None
    status: str = "converged"


class _StopRule:
    def __init__(self, initial, tol, maxit, patience=None):
        self.threshold = tol * initial
        self.ceiling = DIVERGENCE_FACTOR * initial
        self.maxit = maxit
        self.patience = STALL_PATIENCE if patience is None else patience
        self.best = initial
        self.best_k = 0
        self.stalled = 0
        self.status = None

    def start(self):
        # Degenerate zero right-hand side or zero iteration budget.
        if self.best == 0.0:
            self.status = "converged"
        elif self.maxit <= 0:
            self.status = "max_iterations"
        return self.status

    def step(self, k, norm):
        if not np.isfinite(norm) or norm > self.ceiling:
            # Post-floor blow-up; the best iterate stands as the answer.
            self.status = "converged"
            return self.status
        if norm < self.best:
            self.best = norm
            self.best_k = k
            self.stalled = 0
        else:
            self.stalled += 1
        if norm <= self.threshold or self.stalled >= self.patience:
            self.status = "converged"
        elif k >= self.maxit:
            self.status = "max_iterations"
        return self.status


def _outcome(x, hist, status, gaps=None, upto=None):
    # Once the recurred residual has reached its floor the iteration is
    # not self-correcting: directions lose conjugacy and the iterate
    # random-walks away from the converged point while the stall counter
    # runs out.  Solvers therefore hand back the iterate with the
    # smallest recurred residual norm and the histories are cut at that
    # point.  The lists passed in carry the initial entry at index 0;
    # it is dropped here so the stored histories have exactly one entry
    # per iteration.
    end = len(hist) if upto is None else upto + 1
    return SolveOutcome(
        x=x,
        iterations=end - 1,
        residual_norm_history=np.array(hist[1:end]),
        true_residual_gap_history=None if gaps is None else np.array(gaps[1:end]),
        status=status,
    )


def cg_base(p, control=None):
    """Conjugate gradients on A^T A x = A^T b + c.

    The right-hand side is formed once as fl(fl(A^T b) + c); everything
    after that sees only the already-rounded vector.
    """
    control = control or IterationControl()
    tol, maxit, x, patience = control.resolve(p.n)
    a = p.a
    rhs = (a.T @ p.b) + p.c
    r = rhs - a.T @ (a @ x)
    d = r.copy()
    rho = float(r @ r)
    hist = [np.sqrt(rho)]
    rule = _StopRule(hist[0], tol, maxit, patience)
    if rule.start():
        return _outcome(x, hist, rule.status)
    x_best = x.copy()
    k = 0
    while True:
        q = a.T @ (a @ d)
        den = float(d @ q)
        if den <= 0.0:
            return _outcome(x_best, hist, "breakdown", upto=rule.best_k)
        alpha = rho / den
        x = x + alpha * d
        r = r - alpha * q
        rho_new = float(r @ r)
        k += 1
        hist.append(np.sqrt(rho_new))
        done = rule.step(k, hist[-1])
        if rule.best_k == k:
            x_best = x.copy()
        if done:
            return _outcome(x_best, hist, rule.status, upto=rule.best_k)
        d = r + (rho_new / rho) * d
        rho = rho_new


def cgls(a, b, control=None):
    """CGLS for min ||a x - b||, re-forming a^T d each iteration."""
    a = la.as_matrix(a, "a")
    b = la.as_vector(b, "b")
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch("b length does not match row count")
    control = control or IterationControl()
    tol, maxit, x, patience = control.resolve(a.shape[1])
    d = b - a @ x
    r = a.T @ d
    p_dir = r.copy()
    rho = float(r @ r)
    hist = [np.sqrt(rho)]
    rule = _StopRule(hist[0], tol, maxit, patience)
    if rule.start():
        return _outcome(x, hist, rule.status)
    x_best = x.copy()
    k = 0
    while True:
        t = a @ p_dir
        tt = float(t @ t)
        if tt <= 0.0:
            return _outcome(x_best, hist, "breakdown", upto=rule.best_k)
        alpha = rho / tt
        x = x + alpha * p_dir
        d = d - alpha * t
        r = a.T @ d
        rho_new = float(r @ r)
        k += 1
        hist.append(np.sqrt(rho_new))
        done = rule.step(k, hist[-1])
        if rule.best_k == k:
            x_best = x.copy()
        if done:
            return _outcome(x_best, hist, rule.status, upto=rule.best_k)
        p_dir = r + (rho_new / rho) * p_dir
        rho = rho_new


def cgls_eps(p, eps=DEFAULT_EPS, control=None):
    """CGLS on the stacked regularized system [A; eps c^T], (b, 1/eps)."""
    sys_ = build_eps_system(p, eps)
    return cgls(sys_.a_eps, sys_.b_eps, control)


def cgls_i(p, control=None):
    """CGLS on [A; c^T], (b, 1) with the last residual coordinate pinned.

    The stacked residual's final entry stays exactly one because the
    update never touches it; the shift c therefore re-enters r = A^T d
    at full accuracy every iteration.  ``true_residual_gap_history``
    records, per iteration, ||(b - A x_k) - d_k|| over the first m
    coordinates, scaled by sigma_max(A) times ||x_exact|| (or the
    returned iterate's norm when the problem carries no reference
    solution).
    """
    control = control or IterationControl()
    tol, maxit, x, patience = control.resolve(p.n)
    hs = build_hat_system(p)
    a, c = p.a, p.c
    m = p.m
    dhat = hs.b_hat - np.append(a @ x, 0.0)
    r = a.T @ dhat[:m] + c * dhat[m]
    p_dir = r.copy()
    rho = float(r @ r)
    hist = [np.sqrt(rho)]
    raw_gaps = [np.linalg.norm(p.residual(x) - dhat[:m])]
    rule = _StopRule(hist[0], tol, maxit, patience)
    status = rule.start()
    x_best = x.copy()
    k = 0
    while not status:
        t = a @ p_dir
        tt = float(t @ t)
        if tt <= 0.0:
            status = "breakdown"
            break
        alpha = rho / tt
        x = x + alpha * p_dir
        dhat[:m] -= alpha * t
        r = a.T @ dhat[:m] + c * dhat[m]
        rho_new = float(r @ r)
        k += 1
        hist.append(np.sqrt(rho_new))
        raw_gaps.append(np.linalg.norm(p.residual(x) - dhat[:m]))
        status = rule.step(k, hist[-1])
        if rule.best_k == k:
            x_best = x.copy()
        if not status:
            p_dir = r + (rho_new / rho) * p_dir
            rho = rho_new
    xref = p.x_exact if p.x_exact is not None else x_best
    scale = p.sigma_max() * max(np.linalg.norm(xref), np.finfo(float).tiny)
    gaps = [g / scale for g in raw_gaps]
    return _outcome(x_best, hist, status, gaps, upto=rule.best_k)


def minres_augmented(p, control=None):
    """MINRES on [[I, A], [A^T, 0]] (r, x) = (b, -c); returns the x block.

    The operator is applied matrix-free.  A zero Lanczos beta means the
    Krylov space is exhausted with the residual already minimal, so it
    reports convergence.
    """
    control = control or IterationControl()
    tol, maxit, x0, patience = control.resolve(p.n)
    a = p.a
    m, n = p.m, p.n

    def op(y):
        return np.concatenate([y[:m] + a @ y[m:], a.T @ y[:m]])

    sol = np.concatenate([p.b - a @ x0, x0])
    rhs = np.concatenate([p.b, -p.c])
    r1 = rhs - op(sol)
    beta1 = np.linalg.norm(r1)
    hist = [beta1]
    rule = _StopRule(beta1, tol, maxit, patience)
    if rule.start():
        return _outcome(sol[m:], hist, rule.status)

    # Paige-Saunders recurrences; r2 carries the unnormalized next
    # Lanczos vector, phibar the recurred residual norm.
    y = r1.copy()
    r2 = r1.copy()
    oldb = 0.0
    beta = beta1
    dbar = 0.0
    epsln = 0.0
    phibar = beta1
    cs = -1.0
    sn = 0.0
    w = np.zeros(m + n)
    w2 = np.zeros(m + n)
    x_best = sol[m:].copy()
    k = 0
    while True:
        v = y / beta
        y = op(v)
        if k >= 1:
            y = y - (beta / oldb) * r1
        alfa = float(v @ y)
        y = y - (alfa / beta) * r2
        r1 = r2
        r2 = y
        oldb = beta
        beta = np.linalg.norm(y)
        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = np.hypot(gbar, beta)
        if gamma == 0.0:
            return _outcome(x_best, hist, "breakdown", upto=rule.best_k)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar
        w1 = w2
        w2 = w
        w = (v - oldeps * w1 - delta * w2) / gamma
        sol = sol + phi * w
        k += 1
        hist.append(phibar)
        if beta == 0.0:
            # Exact Krylov termination.
            return _outcome(sol[m:], hist, "converged")
        done = rule.step(k, hist[-1])
        if rule.best_k == k:
            x_best = sol[m:].copy()
        if done:
            return _outcome(x_best, hist, rule.status, upto=rule.best_k)
