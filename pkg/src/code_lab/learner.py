"""Navigation agents and their actor-critic update.

Web agent
---------
Every DOM node becomes a feature row ``[mean hash-embedding of its tokens;
filled; actionable; position]`` and an LSTM runs over the rows in depth-first
order. The hidden outputs at actionable nodes are the element encodings.
Instruction fields are encoded from their key and value tokens by a two-layer
dense stack. The joint action logits are

    logits[e, f] = enc_e^T W enc_f          for every instruction field f
    logits[e, -] = u^T enc_e + b0           the click-only (null field) column

with a softmax over all pairs. The value is a dense stack applied to the
element encodings pooled by the element marginal of that distribution.

Grid agent
----------
A small MLP over the flattened grid and the agent features with separate
policy and value heads.
"""
from __future__ import annotations

import re
import zlib
from dataclasses import dataclass, field

import numpy as np

from .gridenv import ACTIONS, grid_observation, grid_step
from .nn import ops
from .nn.heads import categorical_head
from .nn.layers import DenseLayer, DenseStack, LSTMCell, Module, uniform_init
from .nn.losses import a2c_losses, discounted_returns
from .nn.tape import Parameter, Tape, TrainingFault
from .webenv.env import NavAction, oracle_actions

_TOKEN = re.compile(r"[a-z0-9]+")


def tokens(text):
    return _TOKEN.findall(str(text).lower())


def bucket(token, n_buckets):
    return zlib.crc32(token.encode()) % n_buckets


@dataclass
class LearnerConfig:
    embed: int = 44
    hidden: int = 100
    buckets: int = 128


class WebLearner(Module):
    def __init__(self, cfg=None, rng=None):
        cfg = cfg or LearnerConfig()
        self.cfg = cfg
        E, H = cfg.embed, cfg.hidden
        emb = rng.uniform(-1.0, 1.0, size=(cfg.buckets, E)) if rng is not None else np.zeros((cfg.buckets, E))
        self.embedding = Parameter("learner.embedding", emb)
        self.dom = LSTMCell("learner.dom", E + 3, H, rng)
        self.field_enc = DenseStack("learner.field", [2 * E, H, H], rng)
        self.bilinear = Parameter("learner.bilinear",
                                  uniform_init(rng, (H, H), H) if rng is not None else np.zeros((H, H)))
        self.null_u = Parameter("learner.null_u", uniform_init(rng, H, H) if rng is not None else np.zeros(H))
        self.null_b = Parameter("learner.null_b", np.zeros(1))
        self.value_head = DenseStack("learner.value", [H, H, 1], rng)

    # -- features ----------------------------------------------------------------

    def _page_tokens(self, page):
        cache = page.__dict__.get("_token_cache")
        if cache is None:
            rows, refs, kinds = [], [], []
            for node, _ in page.tree.nodes():
                toks = [node.tag]
                for k in ("name", "type", "class", "placeholder", "data-primitive"):
                    if k in node.attrs:
                        toks += tokens(node.attrs[k])
                toks += tokens(node.text)
                rows.append([bucket(t, self.cfg.buckets) for t in toks])
                refs.append(node.ref)
                kinds.append(node.ref in page.elements)
            cache = (rows, refs, kinds)
            page.__dict__["_token_cache"] = cache
        return cache

    def encode_dom(self, tape, obs):
        """Element encodings (n_actionable x H) and the matching element refs."""
        rows, refs, kinds = self._page_tokens(obs.page)
        n = len(rows)
        extra = np.zeros((n, 3))
        for j, ref in enumerate(refs):
            extra[j, 0] = 1.0 if ref in obs.filled else 0.0
            extra[j, 1] = 1.0 if kinds[j] else 0.0
            extra[j, 2] = j / max(n - 1, 1)
        X = ops.concat(tape, [ops.embed_mean(tape, self.embedding, rows), extra], axis=1)
        hs = self.dom.sequence(tape, X)
        idx = [j for j in range(n) if kinds[j]]
        return ops.take(tape, hs, idx), [refs[j] for j in idx]

    def encode_fields(self, tape, instruction):
        """Field encodings (F x H), or None for an empty instruction."""
        if len(instruction) == 0:
            return None
        keys = [[bucket(t, self.cfg.buckets) for t in tokens(k)] for k, _ in instruction.fields]
        vals = [[bucket(t, self.cfg.buckets) for t in tokens(v)] for _, v in instruction.fields]
        X = ops.concat(tape, [ops.embed_mean(tape, self.embedding, keys),
                              ops.embed_mean(tape, self.embedding, vals)], axis=1)
        return self.field_enc(tape, X)

    # -- policy ------------------------------------------------------------------

    def policy_forward(self, tape, obs, fields=None):
        """Return (flat joint log-probs, value, element refs, n_fields).

        The joint layout is row-major over (element, field) with the null field
        as the last column. ``fields`` may carry precomputed field encodings.
        """
        enc, refs = self.encode_dom(tape, obs)
        if fields is None:
            fields = self.encode_fields(tape, obs.instruction)
        n = len(refs)
        null = ops.add(tape, ops.matmul(tape, enc, self.null_u), self.null_b)
        null = ops.reshape(tape, null, (n, 1))
        if fields is not None:
            sim = ops.matmul(tape, ops.matmul(tape, enc, self.bilinear), ops.transpose(tape, fields))
            logits = ops.concat(tape, [sim, null], axis=1)
            n_fields = fields.value.shape[0]
        else:
            logits = null
            n_fields = 0
        flat = ops.reshape(tape, logits, (n * (n_fields + 1),))
        logp = ops.log_softmax(tape, flat)
        probs = ops.reshape(tape, ops.exp(tape, logp), (n, n_fields + 1))
        marginal = ops.sum_cols(tape, probs)
        pooled = ops.matmul(tape, marginal, enc)
        value = ops.pick(tape, self.value_head(tape, pooled), 0)
        return logp, value, refs, n_fields

    def distribution(self, obs):
        """Joint probabilities as an (elements x (fields + 1)) array, plus the value."""
        logp, value, refs, nf = self.policy_forward(Tape(), obs)
        return np.exp(logp.value).reshape(len(refs), nf + 1), value.item()

    def act(self, tape, obs, rng, greedy=False, fields=None):
        logp, value, refs, nf = self.policy_forward(tape, obs, fields)
        idx, lp, ent = categorical_head(tape, logp, rng, greedy=greedy)
        e, f = divmod(idx, nf + 1)
        action = NavAction(refs[e], None if f == nf else f)
        return action, lp, value, ent

    def start_episode(self, tape, obs):
        return self.encode_fields(tape, obs.instruction)


class GridLearner(Module):
    def __init__(self, obs_size, hidden=64, rng=None):
        self.trunk = DenseStack("grid.trunk", [obs_size, hidden], rng, final_activation="tanh")
        self.pi = DenseLayer("grid.pi", hidden, len(ACTIONS), "identity", rng)
        self.v = DenseLayer("grid.v", hidden, 1, "identity", rng)

    @staticmethod
    def features(state):
        grid, feats = grid_observation(state)
        return np.concatenate([grid.ravel(), feats])

    def policy_forward(self, tape, state):
        h = self.trunk(tape, self.features(state))
        return ops.log_softmax(tape, self.pi(tape, h)), ops.pick(tape, self.v(tape, h), 0)

    def act(self, tape, state, rng, greedy=False, fields=None):
        logp, value = self.policy_forward(tape, state)
        idx, lp, ent = categorical_head(tape, logp, rng, greedy=greedy)
        return ACTIONS[idx], lp, value, ent

    def start_episode(self, tape, obs):
        return None


class RandomWebAgent:
    """Uniform over every (element, field-or-null) pair on the page."""

    def act(self, tape, obs, rng, greedy=False, fields=None):
        refs = list(obs.page.elements)
        nf = len(obs.instruction)
        idx = int(rng.integers(0, len(refs) * (nf + 1)))
        e, f = divmod(idx, nf + 1)
        return NavAction(refs[e], None if f == nf else f), None, None, None

    def start_episode(self, tape, obs):
        return None


class OracleWebAgent:
    def act(self, tape, obs, rng, greedy=False, fields=None):
        return oracle_actions(obs), None, None, None

    def start_episode(self, tape, obs):
        return None


# -- episodes and updates ----------------------------------------------------------

@dataclass
class Episode:
    tape: object = None
    log_probs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    entropies: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    success: bool = False

    @property
    def total_return(self):
        return float(sum(self.rewards))


def run_web_episode(agent, env, rng, greedy=False, record=True):
    """Play one episode; with ``record`` the whole episode stays on one tape for an update."""
    obs = env.reset()
    tape = Tape()
    ep = Episode(tape if record else None)
    fields = agent.start_episode(tape, obs)
    done = False
    while not done:
        if not record:
            tape = Tape()  # nothing to differentiate; keep each step's graph short-lived
        action, lp, v, ent = agent.act(tape, obs, rng, greedy=greedy, fields=fields)
        obs, r, done, _ = env.step(action)
        if record and lp is not None:
            ep.log_probs.append(lp)
            ep.values.append(v)
            ep.entropies.append(ent)
        ep.rewards.append(r)
    ep.success = env.success
    return ep


def run_grid_episode(agent, state, rng, greedy=False, record=True):
    tape = Tape()
    ep = Episode(tape if record else None)
    done = False
    while not done:
        if not record:
            tape = Tape()
        action, lp, v, ent = agent.act(tape, state, rng, greedy=greedy)
        state, r, done = grid_step(state, action)
        if record and lp is not None:
            ep.log_probs.append(lp)
            ep.values.append(v)
            ep.entropies.append(ent)
        ep.rewards.append(r)
    ep.success = state.success
    return ep


def episode_loss(ep, gamma, entropy_coeff=0.01, value_coeff=0.5, weight=1.0):
    tape = ep.tape
    returns = discounted_returns(ep.rewards, gamma)
    pol, val, bonus = a2c_losses(tape, ep.log_probs, ep.values, returns, entropy_coeff, ep.entropies)
    loss = ops.sub(tape, ops.add(tape, pol, ops.scale(tape, val, value_coeff)), bonus)
    return ops.scale(tape, loss, weight)


def update_learner(params, episodes, gamma, optimizer, entropy_coeff=0.01, value_coeff=0.5,
                   iteration=None):
    """One optimizer step on the mean A2C loss of ``episodes`` (recorded with this params version)."""
    total = 0.0
    for ep in episodes:
        if ep.tape is None:
            raise ValueError("episode was not recorded")
        if not ep.log_probs:
            continue
        loss = episode_loss(ep, gamma, entropy_coeff, value_coeff, 1.0 / len(episodes))
        if not np.isfinite(loss.value):
            raise TrainingFault("non-finite learner loss", iteration)
        ep.tape.backward(loss)
        ep.tape = None
        total += loss.item()
    optimizer.step()
    return total


def parameter_count(cfg=None):
    return WebLearner(cfg or LearnerConfig()).num_parameters()
