"""Command-line entry point.

    code-lab train --algo code --domain web --seed 7 --out runs/a alpha=0.8
    code-lab eval runs/a/checkpoints/final --suite suite --episodes 20
    code-lab analyze-chain --n-max 6 --l-max 3 --p 0.3,0.5,0.7
    code-lab export-html design.json --out site.html
    code-lab inspect-design design.json
    code-lab param-audit
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import analysis, generator, learner
from .nn import checkpoint
from .nn.random import RandomStream
from .nn.tape import TrainingFault
from .petri import validate
from .trainer import Trainer, TrainingConfig, evaluate, eval_designs
from .webenv import WebsiteDesign, export_html, render

PAPER_COUNTS = {"generator": 152461, "learner": 104501}


class UsageError(Exception):
    pass


def parse_overrides(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path, overrides, seed=None):
    base = {}
    if path:
        with open(path) as fh:
            base = json.load(fh)
        if not isinstance(base, dict):
            raise UsageError(f"config {path} is not a JSON object")
    try:
        cfg = TrainingConfig.from_dict(dict(base, seed=base.get("seed")))
        cfg = cfg.with_overrides(overrides)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(str(exc).strip("'\"")) from exc
    if seed is not None:
        cfg = cfg.with_overrides({"seed": seed})
    if cfg.seed is None and os.environ.get("CODE_LAB_SEED"):
        cfg = cfg.with_overrides({"seed": os.environ["CODE_LAB_SEED"]})
    return cfg


# -- subcommands --------------------------------------------------------------------

def cmd_train(args):
    overrides = parse_overrides(args.overrides)
    for flag, key in (("algo", "algo"), ("domain", "domain"), ("alpha", "alpha"), ("m", "m_episodes"),
                      ("iterations", "iterations"), ("workers", "workers")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = str(value)
    cfg = load_config(args.config, overrides, args.seed)
    if cfg.seed is None:
        raise UsageError("seed: pass --seed, set it in the config or set CODE_LAB_SEED")
    trainer = Trainer(cfg)

    def progress(row):
        if not args.quiet and (row["iter"] + 1) % max(1, cfg.iterations // 20) == 0:
            print(f"iter {row['iter'] + 1}/{cfg.iterations} best_return={row['best_return']:.3f} "
                  f"non_skip={row['non_skip']}", file=sys.stderr)

    try:
        trainer.run(args.out, progress=progress)
    except TrainingFault as exc:
        print(f"training aborted: {exc} (iteration {exc.iteration}); checkpoint kept under {args.out}",
              file=sys.stderr)
        return 1
    finally:
        trainer.close()
    with open(os.path.join(args.out, "eval.json")) as fh:
        print(fh.read().strip())
    return 0


def _load_agent(path, index):
    cfg_path = os.path.join(path, "config.json")
    if not os.path.exists(cfg_path):
        raise OSError(f"no checkpoint config at {cfg_path}")
    with open(cfg_path) as fh:
        cfg = TrainingConfig.from_dict(json.load(fh))
    agent = learner.WebLearner(learner.LearnerConfig(cfg.learner_embed, cfg.learner_hidden))
    tensors, _ = checkpoint.load(os.path.join(path, f"agent_{index}.json"))
    checkpoint.load_into(agent, tensors)
    return cfg, agent


def success_table(agent, suite, episodes, seed):
    rng = RandomStream(seed)
    table = evaluate(agent, eval_designs(suite), episodes, rng)
    return {k: 100.0 * v for k, v in table.items()}


def cmd_eval(args):
    if args.agent == "checkpoint":
        if not args.checkpoint:
            raise UsageError("eval needs a checkpoint directory (or --agent oracle/random)")
        _, agent = _load_agent(args.checkpoint, args.index)
    elif args.agent == "oracle":
        agent = learner.OracleWebAgent()
    else:
        agent = learner.RandomWebAgent()
    table = success_table(agent, args.suite, args.episodes, args.seed)
    for name, pct in table.items():
        print(f"{name:<14} {pct:6.1f}%")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(table, fh, indent=1, sort_keys=True)
    return 0


def cmd_analyze_chain(args):
    try:
        p_list = [float(x) for x in args.p.split(",") if x]
        rows = analysis.tabulate(args.n_max, args.l_max, p_list, args.rule)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    text = analysis.rows_to_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _read_design(path):
    with open(path) as fh:
        return WebsiteDesign.from_json(fh.read())


def cmd_export_html(args):
    design = _read_design(args.design)
    site = render(design, RandomStream(args.seed))
    text = export_html(site.pages, title=os.path.basename(args.design))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_inspect_design(args):
    if args.design:
        design = _read_design(args.design)
    else:
        if not args.checkpoint:
            raise UsageError("inspect-design needs a design file or --checkpoint")
        with open(os.path.join(args.checkpoint, "config.json")) as fh:
            cfg = TrainingConfig.from_dict(json.load(fh))
        params = generator.GeneratorParams(generator.GeneratorConfig(
            cfg.domain, cfg.gen_hidden, cfg.max_pages, cfg.budget, cfg.primitive_names()))
        tensors, _ = checkpoint.load(os.path.join(args.checkpoint, "generator.json"))
        checkpoint.load_into(params, tensors)
        rollout = generator.sample_design(params, RandomStream(args.seed), greedy=args.greedy)
        design = rollout.design
        print(rollout.to_json(params.cfg))
    if not hasattr(design, "num_pages"):
        print(design.to_json())
        return 0
    site = render(design, RandomStream(args.seed))
    non_skip, active, passive = design.counts()
    report = validate(site.net)
    print(f"pages: {design.num_pages} (rendered {len(site.pages)})")
    print(f"placements: {non_skip} (active {active}, passive {passive})")
    print(f"instruction: {dict(site.instruction.fields)}")
    for i, page in enumerate(site.pages):
        kinds = [el.kind for el in page.elements.values()]
        print(f"page {i}: {page.field_counts} fields, {len(kinds)} actionable elements")
    print("net: " + ("valid" if report.ok else "; ".join(report.errors)))
    return 0 if report.ok else 1


def cmd_param_audit(args):
    gen_cfg = generator.GeneratorConfig(hidden=args.gen_hidden)
    counts = {"generator": generator.parameter_count(gen_cfg),
              "learner": learner.parameter_count(learner.LearnerConfig(args.embed, args.hidden))}
    print(f"{'network':<10} {'ours':>8} {'reported':>9} {'delta':>6}")
    for name, n in counts.items():
        ref = PAPER_COUNTS[name]
        print(f"{name:<10} {n:>8} {ref:>9} {n - ref:>+6}")
    return 0


# -- parser ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="code-lab", description="Compositional design of environments")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run a training job")
    t.add_argument("--config", help="flat JSON config file")
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--seed", type=int)
    t.add_argument("--algo")
    t.add_argument("--domain")
    t.add_argument("--alpha", type=float)
    t.add_argument("--m", type=int, help="episodes per agent per iteration")
    t.add_argument("--iterations", type=int)
    t.add_argument("--workers", type=int)
    t.add_argument("--quiet", action="store_true")
    t.add_argument("overrides", nargs="*", help="key=value config overrides")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="success table of an agent on the test suite")
    e.add_argument("checkpoint", nargs="?")
    e.add_argument("--agent", choices=("checkpoint", "oracle", "random"), default="checkpoint")
    e.add_argument("--index", type=int, default=0, help="population member to evaluate")
    e.add_argument("--suite", choices=("login1", "suite"), default="suite")
    e.add_argument("--episodes", type=int, default=20)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--json", help="also write the table here")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("analyze-chain", help="chain MDP reachability table")
    c.add_argument("--n-max", type=int, default=6)
    c.add_argument("--l-max", type=int, default=3)
    c.add_argument("--p", default="0.3,0.5,0.7")
    c.add_argument("--rule", choices=analysis.RULES, default="no-op-forbidden")
    c.add_argument("--out")
    c.set_defaults(func=cmd_analyze_chain)

    h = sub.add_parser("export-html", help="render a design JSON to static HTML")
    h.add_argument("design")
    h.add_argument("--out")
    h.add_argument("--seed", type=int, default=0)
    h.set_defaults(func=cmd_export_html)

    i = sub.add_parser("inspect-design", help="summarize a design file or a generator sample")
    i.add_argument("design", nargs="?")
    i.add_argument("--checkpoint")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--greedy", action="store_true")
    i.set_defaults(func=cmd_inspect_design)

    a = sub.add_parser("param-audit", help="parameter counts of the default networks")
    a.add_argument("--gen-hidden", type=int, default=100)
    a.add_argument("--embed", type=int, default=44)
    a.add_argument("--hidden", type=int, default=100)
    a.set_defaults(func=cmd_param_audit)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
