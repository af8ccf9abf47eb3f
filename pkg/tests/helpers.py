"""Shared oracles for the test suite.

The rational helpers run Gaussian elimination over ``fractions.Fraction``
so the reference solutions are exact: binary64 inputs convert to
fractions without rounding, and eliminating over them keeps every
intermediate exact.  Differences must be taken in fractions too; the
regularized solution sits within ~eps^2 of the base one, far below
float spacing.
"""

from fractions import Fraction
import math

import numpy as np

from qlskit import problems


def frac_matrix(a):
    return [[Fraction(float(v)) for v in row] for row in np.atleast_2d(a)]


def frac_vector(y):
    return [Fraction(float(v)) for v in np.atleast_1d(y)]


def frac_solve(m, rhs):
    """Solve a square rational system by elimination with partial pivoting."""
    n = len(m)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(m)]
    for k in range(n):
        piv = max(range(k, n), key=lambda i: abs(aug[i][k]))
        if aug[piv][k] == 0:
            raise ZeroDivisionError("singular rational system")
        aug[k], aug[piv] = aug[piv], aug[k]
        for i in range(k + 1, n):
            f = aug[i][k] / aug[k][k]
            for j in range(k, n + 1):
                aug[i][j] -= f * aug[k][j]
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = aug[i][n] - sum(aug[i][j] * x[j] for j in range(i + 1, n))
        x[i] = s / aug[i][i]
    return x


def gram_system(a, b, c, eps=None):
    """Exact Gram system of A^T A x = A^T b + c, optionally eps-shifted."""
    af = frac_matrix(a)
    m, n = len(af), len(af[0])
    bf = frac_vector(b)
    cf = frac_vector(c)
    g = [[sum(af[k][i] * af[k][j] for k in range(m)) for j in range(n)]
         for i in range(n)]
    if eps is not None:
        e2 = Fraction(eps) ** 2
        g = [[g[i][j] + e2 * cf[i] * cf[j] for j in range(n)] for i in range(n)]
    rhs = [sum(af[k][i] * bf[k] for k in range(m)) + cf[i] for i in range(n)]
    return g, rhs


def rational_solution(a, b, c, eps=None):
    return frac_solve(*gram_system(a, b, c, eps=eps))


def frac_norm(v):
    return math.sqrt(float(sum(t * t for t in v)))


def frac_diff_norm(x, y):
    return frac_norm([x[i] - y[i] for i in range(len(x))])


def commutation_matrix(m, n):
    """K with K vec(Z) = vec(Z^T) for m x n arguments, column-major vec."""
    k = np.zeros((m * n, m * n))
    for i in range(m):
        for j in range(n):
            k[i * n + j, j * m + i] = 1.0
    return k


def random_integer_problem(rng, m, n, kappa_max=None, span=9):
    """Full-rank integer problem with entries in [-span, span]."""
    while True:
        a = rng.integers(-span, span + 1, size=(m, n)).astype(float)
        if np.linalg.matrix_rank(a) < n:
            continue
        s = np.linalg.svd(a, compute_uv=False)
        if kappa_max is not None and s[0] / s[-1] > kappa_max:
            continue
        b = rng.integers(-span, span + 1, size=m).astype(float)
        c = rng.integers(-span, span + 1, size=n).astype(float)
        return problems.QlsProblem(a=a, b=b, c=c, x_exact=None, label="int")


def identity_problem(b=(1.0, 0.0), c=(0.0, 0.0)):
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    n = b.shape[0]
    return problems.QlsProblem(
        a=np.eye(n), b=b, c=c, x_exact=b + c, label="identity"
    )
