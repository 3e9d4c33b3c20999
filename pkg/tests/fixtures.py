"""Small frozen fixtures shared by the gradient and GAE tests."""

import numpy as np

from privkick.dirichlet import make_rng
from privkick.nets import init_params, policy_forward
from privkick.ppo import Batch

OBS_DIM, M = 4, 3


def five_step_batch(seed=0, spread=0.15):
    """Five states with behaviour log-probs from a nearby policy."""
    rng = make_rng(seed, 77)
    policy = init_params([OBS_DIM, 6, 5, M], rng, "policy", 0.01)
    obs = rng.random((5, OBS_DIM))
    pi = policy_forward(policy, obs).pi
    actions = np.array([0, 2, 1, 1, 0])
    logp_old = np.log(pi[np.arange(5), actions]) + rng.uniform(-spread, spread, 5)
    adv = np.array([1.3, -0.7, 0.4, -1.1, 0.2])
    ret = np.array([0.5, -0.2, 1.0, 0.3, -0.8])
    teacher = rng.dirichlet(np.ones(M), 5)
    return policy, Batch(obs, actions, logp_old, adv, ret, teacher)


def finite_difference(f, params, h=1e-5):
    base = params.flat()
    g = np.zeros_like(base)
    for i in range(base.size):
        v = base.copy()
        v[i] += h
        params.set_flat(v)
        up = f()
        v[i] -= 2 * h
        params.set_flat(v)
        down = f()
        g[i] = (up - down) / (2 * h)
    params.set_flat(base)
    return g


def rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300))
