"""Direct solvers for A^T A x = A^T b + c.

All four return the solution vector.  ``solve_qr`` and ``solve_sm``
share the problem's cached unpivoted QR factorization; the other two
factor a derived matrix per call.
"""

import numpy as np

from . import linalg as la
from .errors import DenominatorVanishes
from .problems import DEFAULT_EPS, build_augmented, build_eps_system


def solve_qr(p):
    """Semi-normal equations: R^T R x = A^T b + c with R from QR of A."""
    f = p.qr()
    rhs = p.a.T @ p.b + p.c
    return la.qr_gram_solve(f, rhs)


def solve_qr_eps(p, eps=DEFAULT_EPS):
    """Pivoted QR least squares on the stacked system [A; eps c^T]."""
    sys_ = build_eps_system(p, eps)
    f = la.qr_factorize(sys_.a_eps, pivoting=True)
    return la.qr_lstsq(f, sys_.b_eps)


def solve_sm(p, eps=DEFAULT_EPS):
    """Least-squares solution plus a rank-one update.

    With w = (A^T A)^{-1} c, the stacked system's exact solution is
    x_dagger + w corrected along w:

        x = y - eps^2 (c^T y) / (1 + eps^2 c^T w) * w,   y = x_dagger + w.

    ``eps=0`` returns the base solution x_dagger + w itself.  Raises
    DenominatorVanishes if 1 + eps^2 c^T w is not positive.
    """
    f = p.qr()
    x_dagger = la.qr_lstsq(f, p.b)
    w = la.qr_gram_solve(f, p.c)
    y = x_dagger + w
    if eps == 0.0:
        return y
    den = 1.0 + eps * eps * float(p.c @ w)
    if den <= 0.0:
        raise DenominatorVanishes(f"1 + eps^2 c^T w = {den:.3e}")
    alpha = eps * eps / den
    return y - alpha * float(p.c @ y) * w


def solve_aug(p, scale=None):
    """Symmetric-indefinite solve of [[s I, A], [A^T, 0]] (r/s, x) = (b, -c/s).

    The default scale sigma_min(A)/sqrt(2) keeps the saddle matrix as
    well conditioned as the problem allows.  The leading block of the
    internal solution is the residual divided by the scale; only the x
    block is returned.
    """
    au = build_augmented(p, scale)
    f = la.ldlt_factorize(au.k)
    sol = la.ldlt_solve(f, au.rhs)
    return sol[p.m:]
