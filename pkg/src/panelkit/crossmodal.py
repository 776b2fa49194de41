"""Cross-modal association: optimal transport between patch and prompt
features, the transport-weighted proxy loss, and cross-attention fusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, NoConvergence, ZeroMass
from .nn import tensor as T
from .nn.layers import CrossAttentionBlock
from .nn.tensor import Tensor

MARGINAL_TOL = 1e-6
WARMUP_ITERS = 20  # dual updates per temperature stage before the target one


@dataclass
class CostMatrix:
    delta: object        # (G, K') Tensor, tape-connected to the features
    normalized: bool = True


@dataclass(frozen=True)
class TransportPlan:
    f: np.ndarray        # (G, K') nonnegative coupling
    w_g: np.ndarray      # (G,) source weights
    w_k: np.ndarray      # (K',) sink weights

    @property
    def total_mass(self):
        return float(self.f.sum())


def _l2_normalize(x):
    norms = T.pow_const(T.sum_(x * x, axis=-1, keepdims=True) + 1e-12, 0.5)
    return x * T.pow_const(norms, -1.0)


def cost_matrix(p_loc, f_loc):
    """Pairwise mean-squared error between L2-normalized feature rows.

    delta[g, k] = ||f̂_g - p̂_k||² / D = (2 - 2 f̂_g · p̂_k) / D for unit rows.
    """
    if isinstance(p_loc, np.ndarray):
        p_loc = Tensor(p_loc)
    if isinstance(f_loc, np.ndarray):
        f_loc = Tensor(f_loc)
    if p_loc.shape[0] == 0 or f_loc.shape[0] == 0:
        raise EmptyInput("cost_matrix needs nonempty feature sets")
    if p_loc.shape[-1] != f_loc.shape[-1]:
        raise EmptyInput(f"feature dims differ: {p_loc.shape} vs {f_loc.shape}")
    d = p_loc.shape[-1]
    fn = _l2_normalize(f_loc)
    pn = _l2_normalize(p_loc)
    sim = T.matmul(fn, T.transpose(pn))  # (G, K')
    delta = (2.0 - 2.0 * sim) * (1.0 / d)
    # normalization keeps entries >= 0 up to rounding
    delta = T.clamp(delta, 0.0, 4.0 / d + 1.0)
    return CostMatrix(delta=delta)


def solve_transport(cost, epsilon=0.05, iters=200, w_g=None, w_k=None):
    """Entropic-regularized transport via log-domain alternating scaling.

    The plan is detached from the tape: gradients never flow through the
    solver (the plan is treated as a constant downstream).
    """
    delta = cost.delta.data if isinstance(cost, CostMatrix) else np.asarray(cost)
    g, k = delta.shape
    if w_g is None:
        w_g = np.full(g, 1.0 / g)
    if w_k is None:
        w_k = np.full(k, 1.0 / k)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    log_wg, log_wk = np.log(w_g), np.log(w_k)
    # epsilon scaling: halve a large temperature down to the target, carrying
    # the dual potentials (cost units) across stages to warm-start each solve
    schedule = []
    e = max(float(delta.max()), epsilon)
    while e > epsilon * 1.0001:
        schedule.append(e)
        e /= 2.0
    schedule.append(epsilon)
    alpha = np.zeros(g)
    beta = np.zeros(k)
    residual = np.inf
    for stage, eps in enumerate(schedule):
        final = stage == len(schedule) - 1
        for it in range(iters if final else WARMUP_ITERS):
            alpha = eps * (log_wg - _logsumexp((-delta + beta[None, :]) / eps, axis=1))
            beta = eps * (log_wk - _logsumexp((-delta + alpha[:, None]) / eps, axis=0))
            if final and (it % 5 == 4 or it == iters - 1):
                plan = np.exp((-delta + alpha[:, None] + beta[None, :]) / eps)
                row_err = np.abs(plan.sum(axis=1) - w_g).max()
                col_err = np.abs(plan.sum(axis=0) - w_k).max()
                residual = max(row_err, col_err)
                if residual <= MARGINAL_TOL:
                    break
    plan = np.exp((-delta + alpha[:, None] + beta[None, :]) / epsilon)
    if residual > MARGINAL_TOL:
        raise NoConvergence(residual)
    return TransportPlan(f=plan, w_g=w_g, w_k=w_k)


def _logsumexp(x, axis):
    m = x.max(axis=axis, keepdims=True)
    out = m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def wasserstein_loss(plan, cost):
    """W_D = sum(f * delta) / sum(f), with the plan held constant."""
    delta = cost.delta if isinstance(cost, CostMatrix) else cost
    f = plan.f if isinstance(plan, TransportPlan) else np.asarray(plan)
    if f.shape != delta.shape:
        raise ZeroMass(f"plan shape {f.shape} != cost shape {delta.shape}")
    mass = f.sum()
    if mass <= 0:
        raise ZeroMass("transport plan carries no mass")
    return T.sum_(Tensor(f) * delta) * (1.0 / mass)


class FusionBlock:
    """Cross-attention fusion: query = prompt slots, key/value = patches.

    Every operation is per-query-row, so output row i depends only on
    prompt row i (and all patch features): exact slot disentanglement.
    """

    def __init__(self, store, config, rng, prefix="fuse"):
        self.block = CrossAttentionBlock(
            store, prefix, config.feature_dim, config.heads, rng
        )

    def __call__(self, p_loc, f_loc):
        if isinstance(p_loc, np.ndarray):
            p_loc = Tensor(p_loc)
        if isinstance(f_loc, np.ndarray):
            f_loc = Tensor(f_loc)
        if p_loc.shape[0] == 0 or f_loc.shape[0] == 0:
            raise EmptyInput("fusion needs nonempty inputs")
        return self.block(p_loc, f_loc)
