"""The training loop: episode sampling with on-demand advisor queries, the
adaptive state selector, and one unified update covering the plain A2C/PPO
backbones, their advisor-in-the-loop variants, continuous monitoring, and
the importance-threshold heuristic.

Per iteration: collect a fixed number of steps (episodes concatenated,
resuming across iterations), derive returns/advantages, run the selector
over the collection-time value errors, then optimize

    L_total = L_org + advisor_coeff * L_adv + ask_coeff * L_ask

where L_org is the backbone policy + value loss over the joint
requester/actor decision, L_adv is the supervised cross-entropy on states
the advisor answered (labels toward the actor, exec toward the requester),
and L_ask promotes asking on the selector's unstable states. A2C does one
full-batch pass; PPO runs its epoch/minibatch schedule with set-membership
masks reweighted so the minibatch expectations match the full-set means.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import losses
from .advisors import Advisor, AdvisorQuery, AdvisorTimeout
from .config import ExperimentConfig
from .nn import (
    Adam,
    GradBundle,
    Mlp,
    clip_grad_norm,
    init_mlp,
    log_softmax,
    mlp_backward,
    mlp_forward,
    mlp_forward_cache,
    sample_categorical,
    softmax,
)
from .rollout import (
    ASK,
    EXEC,
    RolloutBuffer,
    anneal_fraction,
    compute_gae,
    compute_returns,
    normalize_advantages,
)
from .selector import SelectorState
from .envs.schedule import ChangepointSchedule, apply_env_param

log = logging.getLogger(__name__)

RNG_STREAMS = ("env", "actor_init", "critic_init", "requester_init",
               "action", "meta", "shuffle", "advisor", "eval")


class TrainingDiverged(RuntimeError):
    """Numeric divergence (non-finite loss) aborted the run."""


def spawn_rngs(seed: int) -> dict[str, np.random.Generator]:
    """Named independent generators so that optional machinery (requester,
    advisor noise) never perturbs the backbone's sampling streams."""
    children = np.random.SeedSequence(seed).spawn(len(RNG_STREAMS))
    return {name: np.random.default_rng(c) for name, c in zip(RNG_STREAMS, children)}


@dataclass
class MetricsRow:
    iteration: int
    global_step: int
    train_return: float
    roa: float
    ask_count: int
    value_loss: float
    ewma: float
    unstable_rate: float
    unstable_count: int
    wall_time: float

    FIELDS = ("iteration", "global_step", "train_return", "roa", "ask_count",
              "value_loss", "ewma", "unstable_rate", "unstable_count", "wall_time")

    def as_list(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


@dataclass
class IterationLosses:
    """Per-iteration loss record (summed over the iteration's updates)."""

    org: float = 0.0
    adv: float = 0.0
    ask: float = 0.0
    updates: int = 0


class Trainer:
    """Runs one experiment configuration to completion."""

    def __init__(self, cfg: ExperimentConfig, env, advisor: Advisor | None,
                 rngs: dict[str, np.random.Generator] | None = None):
        assert cfg.timesteps_per_iteration, "config must be resolved first"
        self.cfg = cfg
        self.env = env
        self.advisor = advisor
        self.rngs = rngs or spawn_rngs(cfg.seed)

        obs_dim, n_actions = env.obs_dim, env.n_actions
        self.actor = init_mlp([obs_dim, *cfg.policy_hidden_layers, n_actions],
                              self.rngs["actor_init"], out_gain=0.01)
        self.critic = init_mlp([obs_dim, *cfg.value_hidden_layers, 1],
                               self.rngs["critic_init"], out_gain=1.0)
        self.requester: Mlp | None = None
        nets = [self.actor, self.critic]
        if cfg.uses_requester:
            self.requester = init_mlp([obs_dim, *cfg.policy_hidden_layers, 2],
                                      self.rngs["requester_init"], out_gain=0.01)
            nets.append(self.requester)
        self.optimizer = Adam(nets, base_lr=cfg.learning_rate)
        self.selector = SelectorState(decay=cfg.exponential_decay_rate,
                                      max_unstable_rate=cfg.max_unstable_rate)
        self.schedule = ChangepointSchedule(list(cfg.changepoints))

        self.global_step = 0
        self.iteration = 0
        self.query_count = 0
        self.rows: list[MetricsRow] = []
        self.loss_history: list[IterationLosses] = []
        self.force_meta: int | None = None  # test hook: pin the meta decision

        self._obs: np.ndarray | None = None
        self._episode_return = 0.0
        self._last_train_return = float("nan")
        self._start_time = time.perf_counter()

    # -- policy queries --------------------------------------------------------

    def actor_probs(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        logits = mlp_forward(self.actor, obs)
        return logits, softmax(logits)

    def decide_meta(self, req_logits: np.ndarray) -> int:
        """Sample ask/exec from the requester head (reproducible stream)."""
        return sample_categorical(softmax(req_logits), self.rngs["meta"])

    def _query_advisor(self, obs: np.ndarray) -> int | None:
        """One advisor query; None signals a timeout (fall back to exec)."""
        assert self.advisor is not None
        self.query_count += 1
        query = AdvisorQuery(
            env_tag=self.env.env_tag,
            observation=obs,
            legal_actions=list(range(self.env.n_actions)),
            query_id=self.query_count,
            render=self.env.render_payload(),
        )
        try:
            action = self.advisor.act(query)
        except AdvisorTimeout:
            log.warning("advisor timeout on query %d; executing own policy", query.query_id)
            return None
        return int(action)

    # -- collection (episode sampling) ------------------------------------------

    def collect_iteration(self) -> tuple[RolloutBuffer, list[float]]:
        cfg = self.cfg
        T = cfg.timesteps_per_iteration
        buf = RolloutBuffer.empty(T, self.env.obs_dim)
        completed: list[float] = []
        algo = cfg.algorithm

        if self._obs is None:
            self._obs = self.env.reset()

        for t in range(T):
            if self.schedule.advance(self.global_step, lambda v: apply_env_param(self.env, v)):
                log.info("changepoint crossed at step %d", self.global_step)
            obs = self._obs
            actor_logits, actor_p = self.actor_probs(obs)

            meta = EXEC
            req_logp = 0.0
            if self.requester is not None:
                req_logits = mlp_forward(self.requester, obs)
                meta = self.force_meta if self.force_meta is not None else self.decide_meta(req_logits)
                req_logp = float(log_softmax(req_logits)[meta])

            advisor_label = -1
            advisor_acted = False
            if algo == "cm":
                reply = self._query_advisor(obs)  # label only; the agent acts
                advisor_label = -1 if reply is None else reply
            elif algo == "heu":
                importance = float(actor_p.max() - actor_p.min())
                if importance < cfg.heu_threshold:
                    reply = self._query_advisor(obs)
                    if reply is not None:
                        advisor_label, advisor_acted = reply, True
            elif meta == ASK:
                reply = self._query_advisor(obs)
                if reply is None:
                    meta = EXEC  # timeout fallback: the pair is not recorded
                    req_logp = float(log_softmax(req_logits)[EXEC])
                else:
                    advisor_label, advisor_acted = reply, True

            if advisor_acted:
                action = advisor_label
                behavior_logp = req_logp  # requester term only; no actor gradient
                pg_mask = 1.0 if self.requester is not None else 0.0
            else:
                action = sample_categorical(actor_p, self.rngs["action"])
                behavior_logp = req_logp + float(log_softmax(actor_logits)[action])
                pg_mask = 1.0

            value = float(mlp_forward(self.critic, obs)[0])
            result = self.env.step(action)
            self.global_step += 1
            self._episode_return += result.reward

            buf.obs[t] = obs
            buf.meta[t] = meta
            buf.actions[t] = action
            buf.rewards[t] = result.reward
            buf.terminated[t] = result.terminated
            buf.truncated[t] = result.truncated
            buf.advisor_provided[t] = advisor_acted
            buf.advisor_action[t] = advisor_label
            buf.behavior_logp[t] = behavior_logp
            buf.pg_mask[t] = pg_mask
            buf.values[t] = value

            if result.terminated:
                buf.next_values[t] = 0.0
            elif result.truncated:
                buf.next_values[t] = float(mlp_forward(self.critic, result.obs)[0])

            if result.terminated or result.truncated:
                completed.append(self._episode_return)
                self._episode_return = 0.0
                self._obs = self.env.reset()
            else:
                self._obs = result.obs

        # bootstrap the iteration cut and chain interior next-values
        if not (buf.terminated[T - 1] or buf.truncated[T - 1]):
            buf.truncated[T - 1] = True
            buf.next_values[T - 1] = float(mlp_forward(self.critic, self._obs)[0])
        interior = ~(buf.terminated[:-1] | buf.truncated[:-1])
        buf.next_values[:-1][interior] = buf.values[1:][interior]

        buf.returns = compute_returns(buf.rewards, buf.terminated, buf.truncated,
                                      buf.next_values, cfg.discount_factor)
        buf.advantages = compute_gae(buf.rewards, buf.values, buf.next_values,
                                     buf.terminated, buf.truncated,
                                     cfg.discount_factor, cfg.gae_discount)
        return buf, completed

    # -- updates ----------------------------------------------------------------

    def _update(self, buf: RolloutBuffer, unstable_idx: np.ndarray) -> IterationLosses:
        cfg = self.cfg
        T = len(buf)
        record = IterationLosses()

        advs = buf.advantages
        if cfg.backbone == "ppo":
            advs = normalize_advantages(advs)

        adv_members = buf.advisor_action >= 0
        n_adv = int(adv_members.sum())
        ask_members = np.zeros(T, dtype=bool)
        ask_members[unstable_idx] = True
        n_ask = len(unstable_idx)

        eps = anneal_fraction(self.global_step - T, cfg.effective_steps) if cfg.anneal else 1.0
        clip = cfg.ppo_clipping * eps if cfg.anneal else cfg.ppo_clipping

        if cfg.backbone == "a2c":
            epochs, batches = 1, [np.arange(T)]
        else:
            epochs = cfg.num_epochs
            mb = cfg.minibatch_size or T

        for _ in range(epochs):
            if cfg.backbone == "ppo":
                perm = self.rngs["shuffle"].permutation(T)
                batches = [perm[i:i + mb] for i in range(0, T, mb)]
            for B in batches:
                org, adv_loss, ask_loss, bundles = self.batch_gradients(
                    buf, B, advs, adv_members, n_adv, ask_members, n_ask, clip)
                total = losses.total_loss(org, adv_loss, ask_loss,
                                          cfg.advisor_loss_coeff, cfg.ask_loss_coeff)
                if not np.isfinite(total):
                    raise TrainingDiverged(
                        f"non-finite loss at iteration {self.iteration} "
                        f"(algorithm={cfg.algorithm}, seed={cfg.seed})")
                record.org += org
                record.adv += adv_loss
                record.ask += ask_loss
                record.updates += 1
                clip_grad_norm(bundles, cfg.gradient_clipping)
                self.optimizer.step(bundles, anneal=eps)
        return record

    def batch_gradients(
        self,
        buf: RolloutBuffer,
        B: np.ndarray,
        advs: np.ndarray,
        adv_members: np.ndarray,
        n_adv: int,
        ask_members: np.ndarray,
        n_ask: int,
        clip: float,
    ) -> tuple[float, float, float, list[GradBundle]]:
        """Losses and exact parameter gradients of the total objective for
        one (mini)batch of buffer rows. Membership weights are scaled by
        T/(|set| * |B|) so minibatch expectations match the full-set means
        of the advisor/ask terms."""
        cfg = self.cfg
        T = len(buf)
        n = len(B)
        actor_logits, actor_cache = mlp_forward_cache(self.actor, buf.obs[B])
        values_out, critic_cache = mlp_forward_cache(self.critic, buf.obs[B])
        values = values_out[:, 0]
        d_actor = np.zeros_like(actor_logits)
        d_req = None
        req_logits = req_cache = None
        if self.requester is not None:
            req_logits, req_cache = mlp_forward_cache(self.requester, buf.obs[B])
            d_req = np.zeros_like(req_logits)

        # policy term over the joint requester/actor decision
        pg_rows = buf.pg_mask[B] > 0
        actor_lp = losses.log_prob_rows(actor_logits, buf.actions[B])
        exec_rows = buf.meta[B] == EXEC
        logp_new = np.where(exec_rows, actor_lp, 0.0)
        if self.requester is not None:
            logp_new = logp_new + losses.log_prob_rows(req_logits, buf.meta[B])
        if cfg.backbone == "ppo":
            pg_loss, dlogp_rows = losses.pg_loss_clipped(
                logp_new[pg_rows], buf.behavior_logp[B][pg_rows],
                advs[B][pg_rows], clip, n)
        else:
            pg_loss, dlogp_rows = losses.pg_loss_vanilla(
                logp_new[pg_rows], advs[B][pg_rows], n)
        dlogp = np.zeros(n)
        dlogp[pg_rows] = dlogp_rows

        actor_rows = pg_rows & exec_rows
        if actor_rows.any():
            p = softmax(actor_logits[actor_rows])
            onehot = np.zeros_like(p)
            onehot[np.arange(len(p)), buf.actions[B][actor_rows]] = 1.0
            d_actor[actor_rows] += dlogp[actor_rows, None] * (onehot - p)
        if self.requester is not None:
            p = softmax(req_logits)
            onehot = np.zeros_like(p)
            onehot[np.arange(n), buf.meta[B]] = 1.0
            d_req += dlogp[:, None] * (onehot - p)

        v_loss, d_values = losses.value_mse(values, buf.returns[B], cfg.vf_coeff)

        ent_loss = 0.0
        if cfg.entropy_coeff != 0.0:
            h, dh = losses.entropy_mean(actor_logits)
            ent_loss -= cfg.entropy_coeff * h
            d_actor -= cfg.entropy_coeff * dh
            if self.requester is not None:
                hr, dhr = losses.entropy_mean(req_logits)
                ent_loss -= cfg.entropy_coeff * hr
                d_req -= cfg.entropy_coeff * dhr

        # Eq-style supervised terms, reweighted to the full-set means
        adv_loss = 0.0
        if n_adv > 0:
            w = adv_members[B] * (T / (n_adv * n))
            targets = np.maximum(buf.advisor_action[B], 0)
            ce_a, d_ce_a = losses.weighted_ce(actor_logits, targets, w)
            adv_loss += ce_a
            d_actor += cfg.advisor_loss_coeff * d_ce_a
            if self.requester is not None:
                ce_r, d_ce_r = losses.weighted_ce(req_logits, np.full(n, EXEC), w)
                adv_loss += ce_r
                d_req += cfg.advisor_loss_coeff * d_ce_r

        ask_loss = 0.0
        if self.requester is not None and n_ask > 0:
            w = ask_members[B] * (T / (n_ask * n))
            ask_loss, d_ce = losses.weighted_ce(req_logits, np.full(n, ASK), w)
            d_req += cfg.ask_loss_coeff * d_ce

        bundles = [
            mlp_backward(self.actor, actor_cache, d_actor),
            mlp_backward(self.critic, critic_cache, d_values[:, None]),
        ]
        if self.requester is not None:
            bundles.append(mlp_backward(self.requester, req_cache, d_req))
        return pg_loss + v_loss + ent_loss, adv_loss, ask_loss, bundles

    # -- driver ------------------------------------------------------------------

    def iterate(self) -> MetricsRow:
        """One full iteration: sample, select, update, emit a metrics row."""
        self.iteration += 1
        t0 = time.perf_counter()
        buf, completed = self.collect_iteration()
        unstable_idx, diag = self.selector.update(buf.values, buf.returns)
        record = self._update(buf, unstable_idx)
        self.loss_history.append(record)

        if completed:
            self._last_train_return = float(np.mean(completed))
        ask_count = int((buf.advisor_action >= 0).sum())
        row = MetricsRow(
            iteration=self.iteration,
            global_step=self.global_step,
            train_return=self._last_train_return,
            roa=ask_count / len(buf),
            ask_count=ask_count,
            value_loss=diag["value_loss"],
            ewma=diag["ewma"],
            unstable_rate=diag["unstable_rate"],
            unstable_count=diag["unstable_count"],
            wall_time=time.perf_counter() - t0,
        )
        self.rows.append(row)
        return row

    def train(self, on_row=None) -> list[MetricsRow]:
        for _ in range(self.cfg.n_iterations):
            row = self.iterate()
            if on_row is not None:
                on_row(row)
        return self.rows


def greedy_action(actor: Mlp, obs: np.ndarray) -> int:
    return int(np.argmax(mlp_forward(actor, obs)))


def evaluate_policy(actor: Mlp, env, episodes: int = 10) -> tuple[float, float, list[float]]:
    """Greedy test rollouts with no requester and no advisor."""
    returns = []
    for _ in range(episodes):
        obs = env.reset()
        total = 0.0
        while True:
            result = env.step(greedy_action(actor, obs))
            obs = result.obs
            total += result.reward
            if result.terminated or result.truncated:
                break
        returns.append(total)
    mean = float(np.mean(returns))
    std = float(np.std(returns))
    return mean, std, returns
