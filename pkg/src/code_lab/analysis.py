"""Reachability in the chain MDP and the degenerate-curriculum probe.

The chain has states 0..N with the goal at N. Each step goes right with
probability p and left otherwise; the agent has N + 2L steps. Three
quantities are computed exactly with :class:`fractions.Fraction`:

* ``p_reach_formula``: sum_{t=0..L} C(N+2t, t) p^(N+t) (1-p)^t
* ``p_reach_bound``:   p^N (1 + p - p^2)^L
* ``p_reach_bruteforce``: the true first-passage probability, by enumeration

What happens on "left" at state 0 is a rule: ``"stay"`` keeps the agent at 0,
``"no-op-forbidden"`` lets it walk on into negative positions (every action
moves the agent).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from . import kernels

RULES = ("stay", "no-op-forbidden")
MAX_ENUMERATION_BUDGET = 24


class CapacityError(ValueError):
    """Step budget too large for exhaustive enumeration."""


@dataclass(frozen=True)
class ChainSpec:
    N: int
    L: int
    p: Fraction
    rule: str = "no-op-forbidden"

    def __post_init__(self):
        object.__setattr__(self, "p", Fraction(self.p).limit_denominator(10**9)
                           if isinstance(self.p, float) else Fraction(self.p))
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.L < 0:
            raise ValueError("L must be nonnegative")
        if not 0 < self.p < 1:
            raise ValueError("p must lie strictly between 0 and 1")
        if self.rule not in RULES:
            raise ValueError(f"unknown origin rule {self.rule!r}")

    @property
    def budget(self):
        return self.N + 2 * self.L


def p_reach_formula(spec):
    p, q = spec.p, 1 - spec.p
    return sum((comb(spec.N + 2 * t, t) * p ** (spec.N + t) * q ** t for t in range(spec.L + 1)), Fraction(0))


def p_reach_bound(spec):
    p = spec.p
    return p ** spec.N * (1 + p - p * p) ** spec.L


def p_reach_bruteforce(spec):
    """Exact probability of hitting the goal within the budget, by enumerating action strings."""
    budget = spec.budget
    if budget > MAX_ENUMERATION_BUDGET:
        raise CapacityError(f"budget {budget} exceeds the enumeration limit {MAX_ENUMERATION_BUDGET}")
    counts = kernels.chain_hit_counts(spec.N, budget, spec.rule == "stay")
    p, q = spec.p, 1 - spec.p
    return sum((int(c) * p ** r * q ** (budget - r) for r, c in enumerate(counts) if c), Fraction(0))


def tabulate(n_max, l_max, p_list, rule="no-op-forbidden"):
    """Rows (N, L, p, formula, bound, bruteforce) for every combination, N-major."""
    rows = []
    for n in range(1, n_max + 1):
        for l in range(l_max + 1):
            for p in p_list:
                spec = ChainSpec(n, l, p, rule)
                bf = p_reach_bruteforce(spec) if spec.budget <= MAX_ENUMERATION_BUDGET else None
                rows.append((n, l, spec.p, p_reach_formula(spec), p_reach_bound(spec), bf))
    return rows


CSV_HEADER = ("N", "L", "p", "formula", "bound", "bruteforce")


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for n, l, p, f, b, bf in rows:
        w.writerow([n, l, repr(float(p)), repr(float(f)), repr(float(b)), "" if bf is None else repr(float(bf))])
    return buf.getvalue()


# -- degenerate curriculum probe ----------------------------------------------------

@dataclass
class ProbeReport:
    non_skip_fraction: list
    difficulty: list
    best_return: list
    window: int

    @property
    def first_mean(self):
        head = self.non_skip_fraction[:self.window]
        return sum(head) / len(head)

    @property
    def last_mean(self):
        tail = self.non_skip_fraction[-self.window:]
        return sum(tail) / len(tail)

    @property
    def mean_difficulty(self):
        return sum(self.difficulty) / len(self.difficulty)


def degenerate_case_probe(trainer, iterations, window=100):
    """Run ``trainer`` and report the fraction of non-SKIP placements per design."""
    budget = trainer.cfg.budget
    frac, diff, best = [], [], []
    for _ in range(iterations):
        row = trainer.step()
        frac.append(row["non_skip"] / budget)
        diff.append(row["difficulty"])
        best.append(row["best_return"])
    return ProbeReport(frac, diff, best, min(window, iterations))
