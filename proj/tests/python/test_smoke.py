import numpy as np
import pytest

import dykcd


def make_instance(seed=0, n=25, p=40, lam=1.0):
    X, y = dykcd.gen_instance(n=n, p=p, s=5, noise_sd=1.0, lam=lam, seed=seed)
    return np.asarray(X), np.asarray(y), lam


def test_lasso_cd_reaches_stationarity():
    X, y, lam = make_instance(seed=1)
    res = dykcd.lasso_cd(X, y, lam, max_sweeps=50000, tol=1e-14)
    ok, viol = dykcd.kkt_check(X, y, lam, res.w, tol=1e-7)
    assert ok, f"stationarity violation {viol}"
    assert res.status == "converged"


def test_reference_solution_is_certified():
    X, y, lam = make_instance(seed=2)
    w, gap = dykcd.reference_lasso(X, y, lam, tol_gap=1e-10)
    assert gap <= 1e-10
    prob = dykcd.lasso_problem(X, y, lam)
    res = dykcd.block_cd(prob, max_sweeps=50000, tol=1e-14)
    assert dykcd.criterion(prob, res.w) <= dykcd.criterion(prob, w) + 1e-8


def test_dual_equivalence_is_tiny():
    X, y, lam = make_instance(seed=3, n=15, p=20)
    prob = dykcd.lasso_problem(X, y, lam)
    assert dykcd.equivalence_check(prob, sweeps=100) <= 1e-9


def test_parallel_solvers_agree_with_serial():
    X, y, lam = make_instance(seed=4, n=20, p=12)
    prob = dykcd.lasso_problem(X, y, lam)
    serial = dykcd.block_cd(prob, max_sweeps=100000, tol=1e-13)
    f_star = dykcd.criterion(prob, serial.w)
    pdcd = dykcd.parallel_dykstra_cd(prob, max_sweeps=300000, tol=1e-13)
    assert dykcd.criterion(prob, pdcd.w) <= f_star + 1e-6
    padmm = dykcd.parallel_admm_cd(prob, rho=50.0, max_sweeps=300000, tol=1e-13)
    assert dykcd.criterion(prob, padmm.w) <= f_star + 1e-6


def test_rate_bounds_on_known_designs():
    unit = np.array([[1.0], [0.0], [0.0]])
    assert dykcd.bound_iusem(unit, [0]) == pytest.approx(np.sqrt(0.5), rel=1e-12)
    assert dykcd.bound_deutsch(unit, [0]) == 0.0
    assert dykcd.bound_parallel(unit, [0], d=1) == pytest.approx(np.sqrt(2.0 / 3.0), rel=1e-12)
    eye = np.eye(2)
    assert dykcd.bound_deutsch(eye, [0, 1]) == pytest.approx(0.0, abs=1e-12)


def test_logistic_coordinate_descent_descends():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 8))
    labels = (rng.uniform(size=30) < 0.5).astype(float)
    prob = dykcd.lasso_problem(X, labels, 0.4)
    res = dykcd.general_cd(prob, labels, max_sweeps=400, tol=1e-12)
    crits = np.asarray(res.criteria)
    assert np.all(np.diff(crits) <= 1e-10)
    assert dykcd.general_equivalence_check(prob, labels, sweeps=20) <= 1e-7


def test_shape_errors_surface_as_value_errors():
    X, y, lam = make_instance(seed=6, n=10, p=8)
    prob = dykcd.lasso_problem(X, y, lam)
    with pytest.raises(ValueError):
        dykcd.criterion(prob, np.zeros(3))
