"""Direct solvers: semi-normal QR, eps-shifted QR, rank-one update, KKT."""

import numpy as np
import pytest

from qlskit import direct, iterative, problems
from helpers import frac_norm, rational_solution

U = np.finfo(float).eps / 2


def test_solve_qr_identity():
    p = problems.QlsProblem(a=np.eye(2), b=np.array([1.0, 2.0]),
                            c=np.array([3.0, 4.0]))
    assert np.allclose(direct.solve_qr(p), [4.0, 6.0], atol=1e-14)


def test_solve_qr_embedded_diagonal():
    a = np.array([[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    p = problems.QlsProblem(a=a, b=np.array([2.0, 1.0, 0.0]), c=np.zeros(2))
    assert np.allclose(direct.solve_qr(p), [1.0, 1.0], atol=1e-14)


def test_solve_qr_matches_rational_oracle():
    rng = np.random.default_rng(41)
    for _ in range(10):
        a = rng.integers(-9, 10, size=(5, 3)).astype(float)
        if np.linalg.matrix_rank(a) < 3:
            continue
        b = rng.integers(-9, 10, size=5).astype(float)
        c = rng.integers(-9, 10, size=3).astype(float)
        p = problems.QlsProblem(a=a, b=b, c=c)
        xf = rational_solution(a, b, c)
        xe = np.array([float(v) for v in xf])
        rel = np.linalg.norm(direct.solve_qr(p) - xe) / frac_norm(xf)
        assert rel <= 1e3 * U * p.kappa() ** 2


def test_solve_qr_eps_zero_c_is_least_squares():
    rng = np.random.default_rng(42)
    a = rng.standard_normal((6, 3))
    b = rng.standard_normal(6)
    p = problems.QlsProblem(a=a, b=b, c=np.zeros(3))
    want = np.linalg.lstsq(a, b, rcond=None)[0]
    for eps in (2.0 ** -47, 2.0 ** -20):
        assert np.allclose(direct.solve_qr_eps(p, eps), want, atol=1e-12)


def test_solve_qr_eps_unit_eps_hand_case():
    p = problems.QlsProblem(a=np.eye(2), b=np.array([1.0, 1.0]),
                            c=np.array([1.0, 0.0]))
    assert np.allclose(direct.solve_qr_eps(p, 1.0), [1.0, 1.0], atol=1e-14)


def test_solve_qr_eps_accuracy_on_mild_spectrum():
    rng = np.random.default_rng(np.random.SeedSequence([42, 2]))
    c = 0.1 * rng.random(20)
    p = problems.assemble_problem(40, 20, problems.sigma_c1(20, 0.7), c,
                                  kind=1, seed=102)
    x = direct.solve_qr_eps(p, 2.0 ** -47)
    rel = np.linalg.norm(x - p.x_exact) / np.linalg.norm(p.x_exact)
    assert rel <= 5e-13


def test_solve_sm_hand_case_and_zero_c():
    p = problems.QlsProblem(a=np.eye(2), b=np.array([1.0, 1.0]),
                            c=np.array([1.0, 0.0]))
    assert np.allclose(direct.solve_sm(p, 1.0), [1.0, 1.0], atol=1e-14)
    rng = np.random.default_rng(43)
    a = rng.standard_normal((5, 2))
    b = rng.standard_normal(5)
    p = problems.QlsProblem(a=a, b=b, c=np.zeros(2))
    want = np.linalg.lstsq(a, b, rcond=None)[0]
    assert np.allclose(direct.solve_sm(p, 2.0 ** -30), want, atol=1e-12)


def test_solve_sm_eps_zero_closed_form():
    rng = np.random.default_rng(44)
    for _ in range(8):
        n = int(rng.integers(2, 6))
        m = n + int(rng.integers(1, 4))
        sigma = np.sort(rng.random(n) + 0.3)[::-1]
        p = problems.assemble_problem(m, n, sigma, rng.standard_normal(n),
                                      kind=6, seed=int(rng.integers(100)))
        x = direct.solve_sm(p, 0.0)
        xq = direct.solve_qr(p)
        assert np.linalg.norm(x - xq) <= 1e2 * U * p.kappa() ** 2 * np.linalg.norm(xq)


def test_solve_sm_agrees_with_qr_small_eps():
    rng = np.random.default_rng(45)
    for _ in range(8):
        n = int(rng.integers(2, 6))
        m = n + int(rng.integers(1, 4))
        sigma = np.sort(rng.random(n) + 0.2)[::-1]
        p = problems.assemble_problem(m, n, sigma, rng.standard_normal(n),
                                      kind=3, seed=int(rng.integers(100)))
        xq = direct.solve_qr(p)
        x = direct.solve_sm(p, 2.0 ** -47)
        w = np.linalg.solve(p.a.T @ p.a, p.c)
        grow = 1.0 + 2.0 ** -94 * np.linalg.norm(p.c) * np.linalg.norm(w)
        assert np.linalg.norm(x - xq) <= 1e2 * U * p.kappa() ** 2 * grow * np.linalg.norm(xq)


def test_solve_aug_hand_case_and_consistent():
    p = problems.QlsProblem(a=np.array([[1.0]]), b=np.array([2.0]),
                            c=np.array([1.0]))
    assert np.allclose(direct.solve_aug(p, scale=1.0), [3.0], atol=1e-13)
    rng = np.random.default_rng(46)
    a = rng.standard_normal((6, 3))
    xstar = rng.standard_normal(3)
    p = problems.QlsProblem(a=a, b=a @ xstar, c=np.zeros(3))
    kappa = np.linalg.cond(a)
    rel = np.linalg.norm(direct.solve_aug(p) - xstar) / np.linalg.norm(xstar)
    assert rel <= 1e2 * U * kappa


def test_all_solvers_agree_at_desk_scale():
    # kappa <= 1e2 instances; every solver lands on the same solution
    rng = np.random.default_rng(47)
    long = iterative.IterationControl(tol=1e-30, max_iterations=2000,
                                      patience=100)
    eps = 2.0 ** -47
    for _ in range(10):
        n = int(rng.integers(2, 7))
        m = n + int(rng.integers(1, 6))
        sigma = np.linspace(0.05, 1.0, n)[::-1]
        p = problems.assemble_problem(m, n, sigma, rng.standard_normal(n),
                                      kind=int(rng.integers(1, 7)),
                                      seed=int(rng.integers(1000)))
        sols = [
            iterative.cg_base(p, control=long).x,
            iterative.cgls_i(p, control=long).x,
            iterative.cgls_eps(p, eps, control=long).x,
            iterative.minres_augmented(p, control=long).x,
            direct.solve_qr(p),
            direct.solve_qr_eps(p, eps),
            direct.solve_sm(p, eps),
            direct.solve_aug(p),
        ]
        ref = sols[4]
        nref = np.linalg.norm(ref)
        for x in sols:
            assert np.linalg.norm(x - ref) <= 1e-8 * nref
