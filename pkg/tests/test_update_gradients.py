"""Finite-difference verification of the assembled training gradients and
the additive structure of the total objective."""

import dataclasses

import numpy as np
import pytest

from askac.config import ExperimentConfig, resolve
from askac.rollout import ASK, EXEC, RolloutBuffer, compute_gae, compute_returns
from askac.trainer import Trainer, spawn_rngs


class TinyEnv:
    env_tag = "cartpole"
    n_actions = 2
    obs_dim = 4

    def render_payload(self):
        return {}


def tiny_trainer(algo="aska2c", seed=0, **over):
    cfg = resolve(dataclasses.replace(
        ExperimentConfig(algorithm=algo, env="cartpole", seed=seed,
                         total_steps=400, timesteps_per_iteration=8,
                         policy_hidden_layers=(6,), value_hidden_layers=(6,),
                         advisor="scripted"),
        **over))
    return Trainer(cfg, TinyEnv(), None, spawn_rngs(seed)), cfg


def craft_buffer(trainer, rng, T=8, with_asks=True):
    """Random but internally consistent rollout data for the trainer's nets."""
    from askac.nn import log_softmax, mlp_forward

    buf = RolloutBuffer.empty(T, 4)
    buf.obs = rng.standard_normal((T, 4))
    buf.actions = rng.integers(0, 2, T)
    buf.rewards = rng.standard_normal(T)
    buf.terminated[:] = rng.random(T) < 0.2
    buf.truncated[:] = (~buf.terminated) & (rng.random(T) < 0.1)
    buf.truncated[-1] = buf.truncated[-1] or not buf.terminated[-1]
    if with_asks and trainer.requester is not None:
        buf.meta = np.where(rng.random(T) < 0.4, ASK, EXEC).astype(np.int8)
    for t in range(T):
        buf.values[t] = mlp_forward(trainer.critic, buf.obs[t])[0]
    buf.next_values = rng.standard_normal(T) * (buf.terminated == 0)
    for t in range(T):
        lp = 0.0
        if trainer.requester is not None:
            lp += float(log_softmax(mlp_forward(trainer.requester, buf.obs[t]))[buf.meta[t]])
        if buf.meta[t] == ASK:
            buf.advisor_action[t] = buf.actions[t]
            buf.advisor_provided[t] = True
        else:
            lp += float(log_softmax(mlp_forward(trainer.actor, buf.obs[t]))[buf.actions[t]])
        # slight behavior offset so PPO ratios are not trivially 1
        buf.behavior_logp[t] = lp + rng.standard_normal() * 0.1
    cfg = trainer.cfg
    buf.returns = compute_returns(buf.rewards, buf.terminated, buf.truncated,
                                  buf.next_values, cfg.discount_factor)
    buf.advantages = compute_gae(buf.rewards, buf.values, buf.next_values,
                                 buf.terminated, buf.truncated,
                                 cfg.discount_factor, cfg.gae_discount)
    return buf


def total_of(trainer, buf, B, unstable, clip=0.2):
    cfg = trainer.cfg
    advs = buf.advantages
    ask_members = np.zeros(len(buf), dtype=bool)
    ask_members[unstable] = True
    adv_members = buf.advisor_action >= 0
    org, adv_l, ask_l, bundles = trainer.batch_gradients(
        buf, B, advs, adv_members, int(adv_members.sum()),
        ask_members, len(unstable), clip)
    total = org + cfg.advisor_loss_coeff * adv_l + cfg.ask_loss_coeff * ask_l
    return total, (org, adv_l, ask_l), bundles


def all_params(trainer):
    nets = [trainer.actor, trainer.critic]
    if trainer.requester is not None:
        nets.append(trainer.requester)
    return [p for net in nets for p in net.params()]


def all_grads(bundles):
    return [g for b in bundles for g in b.arrays()]


@pytest.mark.parametrize("algo", ["aska2c", "askppo", "a2c", "ppo", "cm", "heu"])
def test_total_gradient_matches_finite_differences(algo):
    rng = np.random.default_rng(42)
    advisor = None if algo in ("a2c", "ppo") else "scripted"
    trainer, cfg = tiny_trainer(algo, advisor=advisor or "none")
    buf = craft_buffer(trainer, rng, with_asks=algo in ("aska2c", "askppo"))
    if algo in ("cm", "heu"):
        # labels everywhere (cm) / on a subset with masked policy term (heu)
        mask = np.ones(len(buf), bool) if algo == "cm" else rng.random(len(buf)) < 0.5
        buf.advisor_action[mask] = rng.integers(0, 2, int(mask.sum()))
        if algo == "heu":
            buf.pg_mask[mask] = 0.0
            buf.advisor_provided[mask] = True
    B = np.arange(len(buf))
    unstable = np.array([0, 3]) if trainer.requester is not None else np.empty(0, int)

    _, _, bundles = total_of(trainer, buf, B, unstable)
    grads = all_grads(bundles)

    h = 1e-6
    for p, g in zip(all_params(trainer), grads):
        for idx in list(np.ndindex(p.shape))[::3]:
            old = p[idx]
            p[idx] = old + h
            up, _, _ = total_of(trainer, buf, B, unstable)
            p[idx] = old - h
            dn, _, _ = total_of(trainer, buf, B, unstable)
            p[idx] = old
            fd = (up - dn) / (2 * h)
            assert g[idx] == pytest.approx(fd, rel=1e-4, abs=1e-7), (
                f"{algo}: param shape {p.shape} idx {idx}")


def test_gradient_additivity_of_total_loss():
    """grad(total) == grad(org) + adv_coeff*grad(adv) + ask_coeff*grad(ask)."""
    rng = np.random.default_rng(7)
    variants = {}
    for adv_c, ask_c in [(0.0, 0.0), (1.0, 0.0), (0.0, 0.5), (1.0, 0.5)]:
        trainer, _ = tiny_trainer("aska2c", advisor_loss_coeff=adv_c, ask_loss_coeff=ask_c)
        buf = craft_buffer(trainer, np.random.default_rng(7))
        _, _, bundles = total_of(trainer, buf, np.arange(len(buf)), np.array([1, 4]))
        variants[(adv_c, ask_c)] = all_grads(bundles)
    for g_total, g_org, g_adv, g_ask in zip(
            variants[(1.0, 0.5)], variants[(0.0, 0.0)],
            variants[(1.0, 0.0)], variants[(0.0, 0.5)]):
        recomposed = g_adv + g_ask - g_org  # org counted twice in the two parts
        np.testing.assert_allclose(g_total, recomposed, atol=1e-10)


def test_advisor_loss_value_through_unified_path():
    """One example with uniform heads gives ln2 + ln2; empty set gives zero."""
    trainer, cfg = tiny_trainer("aska2c")
    # make both heads exactly uniform
    for net in (trainer.actor, trainer.requester):
        for w in net.weights:
            w[:] = 0.0
        for b in net.biases:
            b[:] = 0.0
    rng = np.random.default_rng(1)
    buf = craft_buffer(trainer, rng, with_asks=False)
    buf.meta[:] = EXEC
    buf.advisor_action[:] = -1
    buf.advisor_action[2] = 1  # a single advisor example
    _, (org, adv_l, ask_l), _ = total_of(trainer, buf, np.arange(len(buf)), np.empty(0, int))
    assert adv_l == pytest.approx(2 * np.log(2), abs=1e-12)
    assert ask_l == 0.0

    buf.advisor_action[2] = -1
    _, (_, adv_l, ask_l), _ = total_of(trainer, buf, np.arange(len(buf)), np.empty(0, int))
    assert adv_l == 0.0 and ask_l == 0.0


def test_ask_loss_value_through_unified_path():
    trainer, _ = tiny_trainer("aska2c")
    for w in trainer.requester.weights:
        w[:] = 0.0
    for b in trainer.requester.biases:
        b[:] = 0.0
    buf = craft_buffer(trainer, np.random.default_rng(2), with_asks=False)
    buf.advisor_action[:] = -1
    _, (_, _, ask_l), _ = total_of(trainer, buf, np.arange(len(buf)), np.array([0, 5]))
    assert ask_l == pytest.approx(np.log(2), abs=1e-12)


def test_minibatch_reweighting_preserves_full_set_means():
    """Averaged over an epoch's minibatches, the advisor/ask terms equal the
    full-batch values (same fixed membership, untouched nets)."""
    trainer, cfg = tiny_trainer("askppo", num_epochs=1)
    rng = np.random.default_rng(3)
    buf = craft_buffer(trainer, rng, T=8)
    buf.advisor_action[:] = -1
    for t in (1, 4, 6):
        buf.advisor_action[t] = int(buf.actions[t])
    unstable = np.array([0, 2, 5])
    full_total, (org_f, adv_f, ask_f), _ = total_of(trainer, buf, np.arange(8), unstable)

    halves = [np.array([0, 1, 2, 3]), np.array([4, 5, 6, 7])]
    advs, asks = [], []
    for B in halves:
        _, (_, a, k), _ = total_of(trainer, buf, B, unstable)
        advs.append(a)
        asks.append(k)
    assert np.mean(advs) == pytest.approx(adv_f, abs=1e-12)
    assert np.mean(asks) == pytest.approx(ask_f, abs=1e-12)
