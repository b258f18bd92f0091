"""Joint training of the designer and a population of learners, plus baselines.

One iteration (``code``):

1. sample a design from the generator
2. render it
3. every agent plays M episodes on it and takes one A2C step
4. regret = best agent mean - population mean
5. difficulty from the best mean and the design's SKIP mass
6. generator step on (1 - alpha) regret + alpha difficulty
7. one metrics row

The other ``algo`` values swap the design source or the generator reward:
``popregret_only`` (alpha = 0), ``paired`` (fixed antagonist/protagonist),
``minimax`` (-protagonist return), ``dr`` (uniform random designs), ``cl``
(scheduled inclusion probability) and ``alp`` (|return change| of one learner).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import generator as gen
from .gridenv import SUBTASKS, GridDesign, build_grid
from .learner import (GridLearner, LearnerConfig, WebLearner, run_grid_episode, run_web_episode,
                      update_learner)
from .nn import checkpoint
from .nn.optim import make_optimizer
from .nn.random import RandomStream
from .nn.tape import Tape, TrainingFault
from .webenv.catalog import RESTRICTED, SKIP, catalog
from .webenv.env import WebEnv
from .webenv.site import Placement, WebsiteDesign, render
from .webenv.suite import test_suite

ALGOS = ("code", "popregret_only", "paired", "minimax", "dr", "cl", "alp")
REGRET_ALGOS = ("code", "popregret_only", "paired")
METRICS_VERSION = 1


@dataclass
class TrainingConfig:
    """Every knob of a run. Serialized as flat JSON."""

    algo: str = "code"
    domain: str = "web"
    seed: int | None = None
    iterations: int = 2000
    population: int = 2
    m_episodes: int = 2
    budget: int = 10  # N, also N_max of the difficulty term
    max_pages: int = 10  # K
    catalog: str = "full"  # "full", "restricted" or a comma list of primitive names
    gamma: float = 0.99
    alpha: float = 0.8
    beta: float = 0.0
    delta: float = 0.0
    kappa: float = 0.01
    horizon_base: int = 4
    horizon_per_field: int = 3
    reward_mode: str = "shaped"  # "shaped" or "binary"
    scale_by_best: bool = True
    legacy_budget: bool = False
    skip_mass_coeff: float = 0.0  # optional direct N_hat gradient of the difficulty term
    b_paired: bool = False
    learner_optimizer: str = "sgd"
    learner_lr: float = 0.03
    learner_entropy: float = 0.01
    value_coeff: float = 0.5
    generator_optimizer: str = "sgd"
    generator_lr: float = 0.01
    generator_entropy: float = 0.01
    baseline_decay: float = 0.9
    clip_norm: float = 5.0
    gen_hidden: int = 100
    learner_embed: int = 44
    learner_hidden: int = 100
    grid_hidden: int = 64
    grid_size: int = 8
    cl_p0: float = 0.1
    frozen_learners: bool = False
    eval_every: int = 0
    eval_episodes: int = 10
    eval_suite: str = "login1"  # "login1", "suite" or "none"
    checkpoint_every: int = 0
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.algo not in ALGOS:
            raise ValueError(f"algo: unknown value {self.algo!r}")
        if self.domain not in ("web", "grid"):
            raise ValueError(f"domain: unknown value {self.domain!r}")
        if self.delta > self.beta:
            raise ValueError("delta: must not exceed beta")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha: must lie in [0, 1]")
        if self.m_episodes < 1:
            raise ValueError("m_episodes: must be at least 1")
        if self.population < 2 and self.algo in REGRET_ALGOS:
            raise ValueError("population: regret algorithms need at least two agents")
        if self.population < 1:
            raise ValueError("population: must be at least 1")
        if self.reward_mode not in ("shaped", "binary"):
            raise ValueError(f"reward_mode: unknown value {self.reward_mode!r}")
        if self.budget < 1 or self.max_pages < 1:
            raise ValueError("budget/max_pages: must be positive")

    # -- (de)serialization --------------------------------------------------------

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.keys())
        if unknown:
            raise KeyError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def with_overrides(self, overrides):
        """Copy with ``{key: value-or-string}`` applied; strings are coerced to the field type."""
        d = self.to_dict()
        types = {f.name: f.type for f in fields(self)}
        for key, value in overrides.items():
            if key not in d:
                raise KeyError(f"unknown config key: {key}")
            d[key] = coerce(value, types[key], d[key])
        return TrainingConfig(**d)

    def primitive_names(self):
        if self.domain == "grid":
            return SUBTASKS
        if self.catalog == "full":
            return tuple(s.name for s in catalog())
        if self.catalog == "restricted":
            return RESTRICTED
        return tuple(n.strip() for n in self.catalog.split(",") if n.strip())

    def objective(self):
        return gen.ObjectiveConfig(self.alpha, self.beta, self.delta, self.budget, self.scale_by_best,
                                   self.legacy_budget)


def coerce(value, type_name, current):
    if not isinstance(value, str):
        return value
    t = str(type_name)
    if "bool" in t:
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if "int" in t:
        return None if value.lower() == "none" else int(value)
    if "float" in t:
        return float(value)
    return value


# -- baseline design sources ---------------------------------------------------------

def dr_design(rng, cfg):
    """k ~ U{0..K}; each of N steps picks a primitive (or SKIP) uniformly and a page in [0, k)."""
    names = cfg.primitive_names()
    if cfg.domain == "grid":
        picks = [int(rng.integers(0, len(names) + 1)) for _ in range(cfg.budget)]
        return GridDesign.closed({names[a] for a in picks if a < len(names)})
    k = int(rng.integers(0, cfg.max_pages + 1))
    placements = []
    for _ in range(cfg.budget):
        a = int(rng.integers(0, len(names) + 1))
        if k == 0 or a == len(names):
            placements.append(Placement(SKIP, None))
        else:
            placements.append(Placement(names[a], int(rng.integers(0, k))))
    return WebsiteDesign(k, placements)


def cl_probability(iteration, cfg):
    """Inclusion probability rising linearly from ``cl_p0`` to 1 over the run."""
    if cfg.iterations <= 1:
        return 1.0
    return min(1.0, cfg.cl_p0 + (1.0 - cfg.cl_p0) * iteration / (cfg.iterations - 1))


def cl_design(rng, iteration, cfg, p=None):
    """Each catalog primitive is included with probability p(iteration) on a uniform page in [0, K)."""
    p = cl_probability(iteration, cfg) if p is None else p
    names = cfg.primitive_names()
    chosen = [n for n in names if rng.random() < p]
    if cfg.domain == "grid":
        return GridDesign.closed(chosen)
    return WebsiteDesign(cfg.max_pages, [Placement(n, int(rng.integers(0, cfg.max_pages))) for n in chosen])


def alp_reward(prev_return, cur_return):
    return abs(float(cur_return) - float(prev_return))


def best_index(values):
    """Index of the maximum; ties go to the lowest index."""
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def design_counts(design, budget):
    """(non-SKIP, active, passive) counts of a web or grid design."""
    if isinstance(design, GridDesign):
        n = len(design.subtasks)
        return n, n, 0
    return design.counts()


# -- evaluation -----------------------------------------------------------------------

def eval_designs(name):
    suite = test_suite()
    if name == "login1":
        return {"Login_1": suite["Login"][1]}
    if name == "suite":
        return {f"{env}_{level}": d for env, levels in suite.items() for level, d in levels.items()}
    if name == "none":
        return {}
    raise ValueError(f"unknown eval suite {name!r}")


def evaluate(agent, designs, episodes, rng, kappa=0.01, horizon_rule=(4, 3), greedy=True):
    """Success rate per design: fraction of episodes ending with the +1 terminal."""
    table = {}
    for name, design in designs.items():
        wins = 0
        for _ in range(episodes):
            site = render(design, rng)
            ep = run_web_episode(agent, WebEnv(site, kappa, horizon_rule=horizon_rule), rng, greedy=greedy,
                                 record=False)
            wins += bool(ep.success)
        table[name] = wins / episodes if episodes else 0.0
    return table


# -- trainer --------------------------------------------------------------------------

@dataclass
class Agent:
    params: object
    optimizer: object
    rng: RandomStream


@dataclass
class TrainerState:
    iteration: int = 0
    baseline: float = 0.0
    prev_return: float = 0.0
    rows: list = field(default_factory=list)


def metrics_header(cfg):
    cols = ["iter", "algo", "regret", "difficulty", "n_hat", "non_skip", "active_count", "passive_count"]
    cols += [f"return_agent_{i}" for i in range(cfg.population)]
    cols += ["best_return", "best_agent", "gen_reward"]
    cols += [f"eval_{name}" for name in eval_designs(cfg.eval_suite)] if cfg.eval_every else []
    return cols


class Trainer:
    def __init__(self, cfg, seed=None):
        if seed is not None:
            cfg = cfg.with_overrides({"seed": seed})
        if cfg.seed is None:
            raise ValueError("seed: a seed is required")
        self.cfg = cfg
        root = RandomStream(cfg.seed)
        (gen_init, self.gen_rng, self.design_rng, self.render_rng, self.eval_rng,
         agents_root) = root.spawn(6)
        names = cfg.primitive_names()
        self.gen_cfg = gen.GeneratorConfig(cfg.domain, cfg.gen_hidden, cfg.max_pages, cfg.budget, names)
        self.generator = gen.GeneratorParams(self.gen_cfg, gen_init)
        self.gen_opt = make_optimizer(cfg.generator_optimizer, self.generator.parameters(), cfg.generator_lr,
                                      cfg.clip_norm)
        self.agents = []
        for i, stream in enumerate(agents_root.spawn(cfg.population)):
            init, play = stream.spawn(2)
            if cfg.domain == "web":
                params = WebLearner(LearnerConfig(cfg.learner_embed, cfg.learner_hidden), init)
            else:
                obs = cfg.grid_size * cfg.grid_size * 9 + 8
                params = GridLearner(obs, cfg.grid_hidden, init)
            opt = make_optimizer(cfg.learner_optimizer, params.parameters(), cfg.learner_lr, cfg.clip_norm)
            self.agents.append(Agent(params, opt, play))
        self.state = TrainerState()
        self.objective = cfg.objective()
        self._pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None

    # -- pieces ----------------------------------------------------------------------

    def _design(self):
        cfg, it = self.cfg, self.state.iteration
        if cfg.algo == "dr":
            return None, dr_design(self.design_rng, cfg)
        if cfg.algo == "cl":
            return None, cl_design(self.design_rng, it, cfg)
        tape = Tape()
        rollout = gen.sample_design(self.generator, self.gen_rng, tape)
        return rollout, rollout.design

    def _build(self, design):
        cfg = self.cfg
        if cfg.domain == "web":
            return render(design, self.render_rng)
        seed = int(self.render_rng.integers(0, 2**63 - 1))
        return ("grid", design, seed)

    def _collect(self, i, env_spec):
        """Agent ``i`` plays M episodes and (unless frozen) takes one update. Returns episode returns."""
        cfg, agent = self.cfg, self.agents[i]
        episodes = []
        for m in range(cfg.m_episodes):
            if cfg.domain == "web":
                env = WebEnv(env_spec, cfg.kappa, cfg.reward_mode,
                             horizon_rule=(cfg.horizon_base, cfg.horizon_per_field))
                ep = run_web_episode(agent.params, env, agent.rng, record=not cfg.frozen_learners)
            else:
                _, design, seed = env_spec
                state = build_grid(design, np.random.default_rng([seed, i, m]), cfg.grid_size, cfg.grid_size,
                                   kappa=cfg.kappa)
                ep = run_grid_episode(agent.params, state, agent.rng, record=not cfg.frozen_learners)
            episodes.append(ep)
        returns = [ep.total_return for ep in episodes]
        if not cfg.frozen_learners:
            update_learner(agent.params, episodes, cfg.gamma, agent.optimizer, cfg.learner_entropy,
                           cfg.value_coeff, self.state.iteration)
        return returns

    def _collect_all(self, env_spec):
        idx = range(len(self.agents))
        if self._pool is None:
            return [self._collect(i, env_spec) for i in idx]
        return list(self._pool.map(lambda i: self._collect(i, env_spec), idx))

    def _generator_update(self, rollout, reward, best_return):
        cfg = self.cfg
        coeff = 0.0
        if cfg.algo == "code" or (cfg.algo == "paired" and cfg.b_paired):
            sign = gen.difficulty_sign(best_return, self.objective)
            scale = abs(best_return) if cfg.scale_by_best else 1.0
            coeff += cfg.skip_mass_coeff * cfg.alpha * sign * scale / cfg.budget
        if cfg.legacy_budget:
            # minimising R * sum log pi(SKIP) equals maximising R * N_hat
            coeff += best_return
        advantage_base = self.state.baseline
        gen.update_generator(self.generator, rollout, reward, self.gen_opt, cfg.generator_entropy, coeff,
                             advantage_base, self.state.iteration)
        d = cfg.baseline_decay
        self.state.baseline = d * self.state.baseline + (1.0 - d) * reward

    # -- iteration ------------------------------------------------------------------------

    def step(self):
        """Run one training iteration and return its metrics row (a dict)."""
        cfg, st = self.cfg, self.state
        rollout, design = self._design()
        env_spec = self._build(design)
        all_returns = self._collect_all(env_spec)
        means = [math.fsum(r) / len(r) for r in all_returns]
        best = best_index(means)
        best_return = means[best]
        n_hat = rollout.n_hat if rollout is not None else 0.0
        regret = gen.pop_regret(means) if len(means) >= 2 else 0.0
        difficulty = gen.difficulty_objective(best_return, n_hat, self.objective)
        reward = 0.0
        if cfg.algo == "code":
            reward = gen.generator_reward(regret, difficulty, cfg.alpha)
        elif cfg.algo == "popregret_only":
            reward = regret
        elif cfg.algo == "paired":
            regret = gen.paired_regret(all_returns[0], all_returns[1])
            best, best_return = 0, means[0]
            difficulty = gen.difficulty_objective(best_return, n_hat, self.objective)
            reward = gen.generator_reward(regret, difficulty, cfg.alpha) if cfg.b_paired else regret
        elif cfg.algo == "minimax":
            reward = -means[0]
        elif cfg.algo == "alp":
            reward = alp_reward(st.prev_return, means[0])
            st.prev_return = means[0]
        if rollout is not None:
            self._generator_update(rollout, reward, best_return)
        non_skip, active, passive = design_counts(design, cfg.budget)
        row = {"iter": st.iteration, "algo": cfg.algo, "regret": regret, "difficulty": difficulty,
               "n_hat": n_hat, "non_skip": non_skip, "active_count": active, "passive_count": passive}
        for i, m in enumerate(means):
            row[f"return_agent_{i}"] = m
        row.update(best_return=best_return, best_agent=best, gen_reward=reward)
        if cfg.eval_every and (st.iteration + 1) % cfg.eval_every == 0:
            row.update({f"eval_{k}": v for k, v in self.evaluate().items()})
        st.rows.append(row)
        st.iteration += 1
        return row

    def evaluate(self, designs=None, episodes=None):
        """Mean greedy success over the population, per evaluation design."""
        cfg = self.cfg
        designs = eval_designs(cfg.eval_suite) if designs is None else designs
        episodes = cfg.eval_episodes if episodes is None else episodes
        if cfg.domain != "web" or not designs:
            return {}
        tables = [evaluate(a.params, designs, episodes, self.eval_rng, cfg.kappa,
                           (cfg.horizon_base, cfg.horizon_per_field)) for a in self.agents]
        return {k: float(np.mean([t[k] for t in tables])) for k in designs}

    def run(self, out_dir=None, iterations=None, progress=None):
        """Train for the configured number of iterations, writing outputs under ``out_dir``."""
        cfg = self.cfg
        total = cfg.iterations if iterations is None else iterations
        sink = None
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, "config.json"), "w") as fh:
                fh.write(cfg.to_json() + "\n")
            sink = MetricsSink(os.path.join(out_dir, "metrics.csv"), metrics_header(cfg))
        try:
            while self.state.iteration < total:
                try:
                    row = self.step()
                except TrainingFault:
                    if out_dir is not None:
                        self.save_checkpoint(out_dir, tag="fault")
                    raise
                if sink is not None:
                    sink.write(row)
                if out_dir is not None and cfg.checkpoint_every and self.state.iteration % cfg.checkpoint_every == 0:
                    self.save_checkpoint(out_dir)
                if progress is not None:
                    progress(row)
        finally:
            if sink is not None:
                sink.close()
        if out_dir is not None:
            self.save_checkpoint(out_dir, tag="final")
            table = self.evaluate() if cfg.eval_suite != "none" else {}
            with open(os.path.join(out_dir, "eval.json"), "w") as fh:
                json.dump(table, fh, indent=1, sort_keys=True)
            write_manifest(out_dir)
        return self.state.rows

    def save_checkpoint(self, out_dir, tag=None):
        tag = tag or f"iter_{self.state.iteration:06d}"
        path = os.path.join(out_dir, "checkpoints", tag)
        os.makedirs(path, exist_ok=True)
        meta = {"iteration": self.state.iteration, "baseline": self.state.baseline}
        checkpoint.save(os.path.join(path, "generator.json"), self.generator, meta)
        for i, a in enumerate(self.agents):
            checkpoint.save(os.path.join(path, f"agent_{i}.json"), a.params, meta)
        with open(os.path.join(path, "config.json"), "w") as fh:
            fh.write(self.cfg.to_json() + "\n")
        return path

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()


# -- metrics ----------------------------------------------------------------------------

def format_value(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


class MetricsSink:
    """Append-only CSV writer with a fixed header."""

    def __init__(self, path, header):
        self.path = path
        self.header = list(header)
        try:
            self._fh = open(path, "w", newline="")
        except OSError as exc:
            raise OSError(f"cannot open metrics file {path}: {exc}") from exc
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(self.header)

    def write(self, row):
        emit_metrics(row, self._writer, self.header)
        self._fh.flush()

    def close(self):
        self._fh.close()


def emit_metrics(row, writer, header):
    writer.writerow([format_value(row.get(col, "")) for col in header])


def rows_to_csv(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        emit_metrics(row, w, header)
    return buf.getvalue()


def read_metrics(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_manifest(out_dir):
    files = []
    for dirpath, _, names in os.walk(out_dir):
        for n in sorted(names):
            if n == "manifest.json":
                continue
            files.append(os.path.relpath(os.path.join(dirpath, n), out_dir))
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump({"version": METRICS_VERSION, "files": sorted(files)}, fh, indent=1)
