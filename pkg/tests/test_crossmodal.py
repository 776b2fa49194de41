"""Optimal transport association against LP and closed-form oracles."""

import numpy as np
import pytest
from scipy.optimize import linprog

from panelkit.config import Config
from panelkit.crossmodal import (
    CostMatrix,
    FusionBlock,
    cost_matrix,
    solve_transport,
    wasserstein_loss,
)
from panelkit.errors import EmptyInput, ZeroMass
from panelkit.nn import tensor as T
from panelkit.nn.optim import ParameterStore
from panelkit.nn.tensor import Tensor, backward

from conftest import assert_grad_close, fd_grad

RNG = np.random.default_rng(88)


def test_cost_matrix_values_match_formula():
    p = RNG.normal(size=(4, 8))
    f = RNG.normal(size=(3, 8))
    delta = cost_matrix(p, f).delta.data
    assert delta.shape == (3, 4)
    fn = f / np.linalg.norm(f, axis=1, keepdims=True)
    pn = p / np.linalg.norm(p, axis=1, keepdims=True)
    expect = ((fn[:, None, :] - pn[None, :, :]) ** 2).mean(axis=2)
    np.testing.assert_allclose(delta, expect, atol=1e-9)
    assert (delta >= 0).all()


def test_cost_matrix_scale_invariant():
    p = RNG.normal(size=(4, 8))
    f = RNG.normal(size=(3, 8))
    a = cost_matrix(p, f).delta.data
    b = cost_matrix(p * 7.0, f * 0.1).delta.data
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_cost_matrix_rejects_empty_or_mismatched():
    with pytest.raises(EmptyInput):
        cost_matrix(np.zeros((0, 4)), np.ones((2, 4)))
    with pytest.raises(EmptyInput):
        cost_matrix(np.ones((2, 4)), np.ones((2, 5)))


def test_transport_1x1_plan_is_all_mass():
    plan = solve_transport(np.array([[0.7]]), epsilon=0.1)
    np.testing.assert_allclose(plan.f, [[1.0]], atol=1e-6)
    assert plan.total_mass == pytest.approx(1.0, abs=1e-6)


def test_transport_2x2_small_epsilon_is_diagonal():
    # strongly favored diagonal: near-zero regularization recovers the
    # permutation assignment
    cost = np.array([[0.0, 1.0], [1.0, 0.0]])
    plan = solve_transport(cost, epsilon=0.01, iters=500)
    np.testing.assert_allclose(plan.f, [[0.5, 0.0], [0.0, 0.5]], atol=1e-3)


def test_transport_marginals_match_weights():
    delta = RNG.uniform(0.0, 1.0, size=(5, 7))
    plan = solve_transport(delta, epsilon=0.1, iters=500)
    np.testing.assert_allclose(plan.f.sum(axis=1), np.full(5, 1 / 5), atol=1e-6)
    np.testing.assert_allclose(plan.f.sum(axis=0), np.full(7, 1 / 7), atol=1e-6)


def test_transport_cost_close_to_lp_oracle():
    # with small epsilon the entropic cost approaches the exact LP optimum
    g, k = 4, 5
    delta = RNG.uniform(0.0, 1.0, size=(g, k))
    plan = solve_transport(delta, epsilon=0.005, iters=5000)
    ent_cost = (plan.f * delta).sum()

    # LP: minimize <f, delta> s.t. row sums = 1/g, col sums = 1/k
    a_eq = []
    b_eq = []
    for i in range(g):
        row = np.zeros(g * k)
        row[i * k : (i + 1) * k] = 1.0
        a_eq.append(row)
        b_eq.append(1.0 / g)
    for j in range(k):
        col = np.zeros(g * k)
        col[j::k] = 1.0
        a_eq.append(col)
        b_eq.append(1.0 / k)
    res = linprog(delta.ravel(), A_eq=np.array(a_eq), b_eq=np.array(b_eq), bounds=(0, None))
    assert res.status == 0
    # entropic cost upper-bounds the optimum, up to the LP solver's own tolerance
    assert ent_cost >= res.fun - 1e-7
    assert ent_cost - res.fun < 0.02


def test_transport_custom_weights():
    delta = RNG.uniform(size=(3, 3))
    w_g = np.array([0.5, 0.3, 0.2])
    w_k = np.array([0.2, 0.2, 0.6])
    plan = solve_transport(delta, epsilon=0.1, iters=1000, w_g=w_g, w_k=w_k)
    np.testing.assert_allclose(plan.f.sum(axis=1), w_g, atol=1e-6)
    np.testing.assert_allclose(plan.f.sum(axis=0), w_k, atol=1e-6)


def test_transport_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        solve_transport(np.ones((2, 2)), epsilon=0.0)


def test_wasserstein_constant_cost_returns_constant():
    # delta identically c gives W = c regardless of the plan
    plan = solve_transport(np.full((3, 4), 0.37), epsilon=0.1)
    w = wasserstein_loss(plan, Tensor(np.full((3, 4), 0.37)))
    np.testing.assert_allclose(w.item(), 0.37, atol=1e-9)


def test_wasserstein_matches_loop_oracle():
    delta = RNG.uniform(size=(3, 4))
    plan = solve_transport(delta, epsilon=0.1, iters=500)
    w = wasserstein_loss(plan, Tensor(delta)).item()
    total = sum(
        plan.f[i, j] * delta[i, j] for i in range(3) for j in range(4)
    ) / plan.f.sum()
    np.testing.assert_allclose(w, total, atol=1e-12)


def test_wasserstein_zero_mass_raises():
    with pytest.raises(ZeroMass):
        wasserstein_loss(np.zeros((2, 2)), Tensor(np.ones((2, 2))))
    with pytest.raises(ZeroMass):
        wasserstein_loss(np.ones((2, 3)), Tensor(np.ones((3, 2))))


def test_frozen_plan_gradient_matches_fd():
    # gradients flow through the cost features only; the plan is constant
    p0 = RNG.normal(size=(4, 6))
    f0 = RNG.normal(size=(3, 6))
    plan = solve_transport(cost_matrix(p0, f0), epsilon=0.1, iters=500)

    def loss_of(fdata):
        return wasserstein_loss(plan, cost_matrix(p0, Tensor(fdata)).delta)

    leaf = Tensor(f0.copy())
    backward(wasserstein_loss(plan, cost_matrix(p0, leaf).delta))
    numeric = fd_grad(lambda a: loss_of(a).item(), f0.copy())
    assert_grad_close(leaf.grad, numeric)


def test_fusion_rows_depend_only_on_own_query():
    cfg = Config(feature_dim=16, heads=2)
    store = ParameterStore()
    fuse = FusionBlock(store, cfg, np.random.default_rng(0))
    prompts = RNG.normal(size=(5, 16))
    patches = RNG.normal(size=(7, 16))
    base = fuse(prompts, patches).data
    # perturbing prompt row 2 must leave all other output rows unchanged
    mod = prompts.copy()
    mod[2] += 10.0
    out = fuse(mod, patches).data
    others = [0, 1, 3, 4]
    np.testing.assert_allclose(out[others], base[others], atol=1e-12)
    assert np.abs(out[2] - base[2]).max() > 1e-6


def test_fusion_rejects_empty():
    cfg = Config(feature_dim=16, heads=2)
    fuse = FusionBlock(ParameterStore(), cfg, np.random.default_rng(0))
    with pytest.raises(EmptyInput):
        fuse(np.zeros((0, 16)), np.ones((3, 16)))
