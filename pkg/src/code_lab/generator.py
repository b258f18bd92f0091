"""The environment designer: a noise-conditioned autoregressive placement policy.

Sampling a website design::

    o ~ N(0, I);  h0 = f0(o);  k ~ Cat(fK(h0)) over {0..K}
    x_1 = fI([0; 0; k/K]),  (h, c) = (h0, 0)
    for i in 1..N:
        (h, c) = LSTM(x_i, (h, c))
        a_i ~ Cat(fP(h)) over catalog + SKIP
        b_i ~ Cat(fL(h)) restricted to pages [0, k)     (skipped when a_i is SKIP)
        x_{i+1} = fI([onehot(a_i); onehot(b_i); k/K])

With k = 0 every placement is a forced SKIP (no choice, log-prob 0). For the
grid domain the page-count and page heads are not used and the chosen
subtasks form the design.

The module also holds the scalar objectives that make up the designer's
reward (population regret, PAIRED regret, the difficulty budget).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .gridenv import SUBTASKS, GridDesign
from .nn import ops
from .nn.heads import categorical_head
from .nn.layers import DenseStack, LSTMCell, Module
from .nn.tape import Tape, TrainingFault
from .webenv.catalog import SKIP, catalog
from .webenv.site import Placement, WebsiteDesign


class ConfigError(ValueError):
    """Invalid objective or generator configuration."""


# -- scalar objectives --------------------------------------------------------------

def pop_regret(mean_returns):
    """Best agent's mean return minus the population mean."""
    r = [float(x) for x in mean_returns]
    if len(r) < 2:
        raise ConfigError("population regret needs at least two agents")
    return max(r) - math.fsum(r) / len(r)


def paired_regret(antagonist_returns, protagonist_returns):
    """max_i R^A_i - mean_m R^P_m."""
    if not antagonist_returns or not protagonist_returns:
        raise ConfigError("paired regret needs returns from both agents")
    p = [float(x) for x in protagonist_returns]
    return max(float(x) for x in antagonist_returns) - math.fsum(p) / len(p)


@dataclass(frozen=True)
class ObjectiveConfig:
    alpha: float = 0.8
    beta: float = 0.0
    delta: float = 0.0
    n_max: int = 10
    scale_by_best: bool = True
    legacy_budget: bool = False

    def __post_init__(self):
        if self.delta > self.beta:
            raise ConfigError(f"delta {self.delta} must not exceed beta {self.beta}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha {self.alpha} outside [0, 1]")
        if self.n_max <= 0:
            raise ConfigError("n_max must be positive")


def difficulty_sign(best_return, cfg):
    return (1 if best_return > cfg.beta else 0) - (1 if best_return < cfg.delta else 0)


def difficulty_objective(best_return, n_hat, cfg):
    """(1[R > beta] - 1[R < delta]) * n_hat / N_max, times |R| when ``scale_by_best``."""
    value = difficulty_sign(best_return, cfg) * float(n_hat) / cfg.n_max
    if cfg.scale_by_best:
        value *= abs(float(best_return))
    return value + 0.0  # no negative zero


def generator_reward(regret, difficulty, alpha):
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha {alpha} outside [0, 1]")
    return (1.0 - alpha) * regret + alpha * difficulty


def legacy_budget_loss(rollout, best_return):
    """R_best * sum_i log pi(SKIP); minimising it pushes mass off SKIP when R_best > 0."""
    return float(best_return) * math.fsum(rollout.skip_logps)


def skip_mass(rollout):
    """N_hat = -sum_i log pi(SKIP) over the placement steps."""
    return 0.0 - math.fsum(rollout.skip_logps)


# -- parameters -----------------------------------------------------------------------

@dataclass
class GeneratorConfig:
    domain: str = "web"
    hidden: int = 100
    max_pages: int = 10
    budget: int = 10
    primitives: tuple = field(default_factory=lambda: tuple(s.name for s in catalog()))

    def __post_init__(self):
        if self.domain not in ("web", "grid"):
            raise ConfigError(f"unknown domain {self.domain!r}")
        self.primitives = tuple(self.primitives)
        if self.domain == "grid" and self.primitives == tuple(s.name for s in catalog()):
            self.primitives = SUBTASKS

    @property
    def n_actions(self):
        return len(self.primitives) + 1  # + SKIP

    @property
    def skip_index(self):
        return len(self.primitives)


class GeneratorParams(Module):
    def __init__(self, cfg, rng=None):
        self.cfg = cfg
        H = cfg.hidden
        self.f0 = DenseStack("gen.f0", [H, H, H], rng)
        self.core = LSTMCell("gen.core", H, H, rng)
        self.fP = DenseStack("gen.fP", [H, H, cfg.n_actions], rng)
        if cfg.domain == "web":
            self.fK = DenseStack("gen.fK", [H, H, cfg.max_pages + 1], rng)
            self.fL = DenseStack("gen.fL", [H, H, cfg.max_pages], rng)
            self.fI = DenseStack("gen.fI", [cfg.n_actions + cfg.max_pages + 1, H, H], rng)
        else:
            self.fK = self.fL = None
            self.fI = DenseStack("gen.fI", [cfg.n_actions, H, H], rng)

    def step_input(self, action, page, k):
        cfg = self.cfg
        if cfg.domain == "grid":
            x = np.zeros(cfg.n_actions)
            if action is not None:
                x[action] = 1.0
            return x
        x = np.zeros(cfg.n_actions + cfg.max_pages + 1)
        if action is not None:
            x[action] = 1.0
        if page is not None:
            x[cfg.n_actions + page] = 1.0
        x[-1] = k / cfg.max_pages
        return x


# -- rollouts -------------------------------------------------------------------------

@dataclass
class DesignRollout:
    design: object
    noise: np.ndarray
    k: int
    actions: list  # primitive index per step (SKIP = n_actions - 1)
    pages: list  # page per step (None for SKIP)
    step_logps: list  # log-prob of the chosen primitive and page, per step
    skip_logps: list  # log pi(SKIP) per step
    k_logp: float
    entropy: float
    # tape handles, present when the rollout was recorded for an update
    logp_var: object = None
    entropy_var: object = None
    n_hat_var: object = None
    tape: object = None

    @property
    def total_logp(self):
        return self.k_logp + math.fsum(self.step_logps)

    @property
    def n_hat(self):
        return skip_mass(self)

    def to_dict(self, cfg):
        names = list(cfg.primitives) + [SKIP]
        return {
            "design": self.design.to_dict(),
            "k": self.k,
            "actions": [names[a] for a in self.actions],
            "pages": self.pages,
            "step_logps": self.step_logps,
            "skip_logps": self.skip_logps,
            "k_logp": self.k_logp,
            "entropy": self.entropy,
            "n_hat": self.n_hat,
        }

    def to_json(self, cfg):
        return json.dumps(self.to_dict(cfg))


def _run(params, tape, rng, noise=None, choices=None, greedy=False):
    """Shared sampling/scoring pass. ``choices`` = (k, actions, pages) to score instead of sample."""
    cfg = params.cfg
    H = cfg.hidden
    if noise is None:
        noise = rng.normal(size=H)
    h0 = params.f0(tape, noise)
    hc = ops.concat(tape, [h0, np.zeros(H)])
    logps, ents = [], []
    if cfg.domain == "web":
        kk = None if choices is None else choices[0]
        k, k_lp, k_ent = categorical_head(tape, params.fK(tape, h0), rng, index=kk, greedy=greedy)
        logps.append(k_lp)
        ents.append(k_ent)
    else:
        k = 0
    k_logp = logps[0].item() if logps else 0.0
    x = params.step_input(None, None, k)
    actions, pages, step_lps, skip_vars = [], [], [], []
    forced_skip = cfg.domain == "web" and k == 0
    page_mask = np.arange(cfg.max_pages) < k if cfg.domain == "web" else None
    for i in range(cfg.budget):
        xe = params.fI(tape, x)
        hc = params.core.step(tape, xe, hc)
        if forced_skip:
            actions.append(cfg.skip_index)
            pages.append(None)
            step_lps.append(0.0)
            x = params.step_input(cfg.skip_index, None, k)
            continue
        h = ops.hidden_of(tape, params.core, hc)
        logits = params.fP(tape, h)
        want = None if choices is None else choices[1][i]
        a, a_lp, a_ent = categorical_head(tape, logits, rng, index=want, greedy=greedy)
        lsm = ops.log_softmax(tape, logits)
        skip_vars.append(ops.pick(tape, lsm, cfg.skip_index))
        logps.append(a_lp)
        ents.append(a_ent)
        lp = a_lp.item()
        b = None
        if cfg.domain == "web" and a != cfg.skip_index:
            want_b = None if choices is None else choices[2][i]
            b, b_lp, b_ent = categorical_head(tape, params.fL(tape, h), rng, mask=page_mask, index=want_b,
                                              greedy=greedy)
            logps.append(b_lp)
            ents.append(b_ent)
            lp += b_lp.item()
        actions.append(a)
        pages.append(b)
        step_lps.append(lp)
        x = params.step_input(a, b, k)
    logp_var = ops.total(tape, ops.stack(tape, logps)) if logps else tape.const(0.0)
    ent_var = ops.total(tape, ops.stack(tape, ents)) if ents else tape.const(0.0)
    if skip_vars:
        n_hat_var = ops.scale(tape, ops.total(tape, ops.stack(tape, skip_vars)), -1.0)
        skip_logps = [float(v.value) for v in skip_vars]
    else:
        n_hat_var = tape.const(0.0)
        skip_logps = [0.0] * cfg.budget
    design = _design(cfg, k, actions, pages)
    return DesignRollout(design, np.asarray(noise, dtype=np.float64), k, actions, pages, step_lps, skip_logps,
                         k_logp, ent_var.item(), logp_var, ent_var, n_hat_var, tape)


def _design(cfg, k, actions, pages):
    if cfg.domain == "grid":
        chosen = {cfg.primitives[a] for a in actions if a != cfg.skip_index}
        return GridDesign.closed(chosen)
    placements = [Placement(SKIP, None) if a == cfg.skip_index else Placement(cfg.primitives[a], b)
                  for a, b in zip(actions, pages)]
    return WebsiteDesign(k, placements)


def sample_design(params, rng, tape=None, greedy=False):
    """Sample one rollout. Pass a tape to keep the graph for ``update_generator``."""
    return _run(params, tape if tape is not None else Tape(), rng, greedy=greedy)


def rescore(params, rollout, tape=None):
    """Re-evaluate a rollout's log-probs under ``params`` (deterministic, no sampling)."""
    return _run(params, tape if tape is not None else Tape(), None, noise=rollout.noise,
                choices=(rollout.k, rollout.actions, rollout.pages))


def generator_loss(tape, rollout, advantage, entropy_coeff=0.0, skip_mass_coeff=0.0):
    """-advantage * sum log-probs - entropy_coeff * H - skip_mass_coeff * N_hat."""
    loss = ops.scale(tape, rollout.logp_var, -float(advantage))
    if entropy_coeff:
        loss = ops.sub(tape, loss, ops.scale(tape, rollout.entropy_var, entropy_coeff))
    if skip_mass_coeff:
        loss = ops.sub(tape, loss, ops.scale(tape, rollout.n_hat_var, skip_mass_coeff))
    return loss


def update_generator(params, rollout, reward, optimizer, entropy_coeff=0.0, skip_mass_coeff=0.0,
                     baseline=0.0, iteration=None):
    """One policy-gradient step crediting ``reward - baseline`` to every decision.

    ``skip_mass_coeff`` adds a direct gradient term on N_hat; with its default of
    zero the update is plain REINFORCE with an entropy bonus.
    """
    if rollout.tape is None:
        raise ValueError("rollout was not recorded on a tape")
    if not math.isfinite(reward):
        raise TrainingFault("non-finite generator reward", iteration)
    tape = rollout.tape
    loss = generator_loss(tape, rollout, reward - baseline, entropy_coeff, skip_mass_coeff)
    tape.backward(loss)
    rollout.tape = None
    optimizer.step()
    return loss.item()


def parameter_count(cfg=None):
    cfg = cfg or GeneratorConfig()
    return GeneratorParams(cfg).num_parameters()
