"""Episode dynamics for rendered websites."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..petri import enabled, fire, is_final


class ContractViolation(ValueError):
    """An action that refers to an element not on the current page."""


@dataclass(frozen=True)
class NavAction:
    element: int
    field: int | None = None


@dataclass
class Observation:
    page: object  # Page
    instruction: object  # Instruction
    page_index: int
    filled: frozenset  # refs of field elements whose field is complete
    done_keys: frozenset


def horizon(site, base=4, per_field=3):
    """Step limit: base + per_field * F_p summed over pages, F_p = active fields on page p."""
    return sum(base + per_field * p.field_counts for p in site.pages)


class WebEnv:
    """One episode on a rendered site.

    ``reward_mode`` "shaped" pays 1/F per completed field, -kappa per step and
    +-1 at the end; "binary" pays only the terminal +-1.
    """

    def __init__(self, site, kappa=0.01, reward_mode="shaped", max_steps=None, horizon_rule=(4, 3)):
        if reward_mode not in ("shaped", "binary"):
            raise ValueError(f"unknown reward mode {reward_mode!r}")
        self.site = site
        self.kappa = kappa
        self.reward_mode = reward_mode
        self.max_steps = horizon(site, *horizon_rule) if max_steps is None else max_steps
        self.n_fields = len(site.instruction)
        self.reset()

    def reset(self):
        self.marking = self.site.net.initial_marking()
        self.page_index = 0
        self.t = 0
        self.done = False
        self.success = False
        self.done_keys = set()
        self.potential_total = Fraction(0)
        return self.observe()

    def clone(self):
        other = WebEnv.__new__(WebEnv)
        other.__dict__.update(self.__dict__)
        other.done_keys = set(self.done_keys)
        return other

    @property
    def page(self):
        return self.site.pages[self.page_index]

    def observe(self):
        filled = frozenset(ref for ref, el in self.page.elements.items()
                           if el.kind == "field" and el.field_key in self.done_keys)
        return Observation(self.page, self.site.instruction, self.page_index, filled,
                           frozenset(self.done_keys))

    def _transition_for(self, el):
        if el.kind == "gate":
            return f"gate{self.page_index}"
        return f"prim{el.prim}.t0"

    def step(self, action):
        """Apply ``action``; returns ``(observation, reward, done, info)``."""
        if self.done:
            raise RuntimeError("step() on a finished episode")
        el = self.page.elements.get(action.element)
        if el is None:
            raise ContractViolation(f"element {action.element} is not actionable on page {self.page_index}")
        net = self.site.net
        potential = Fraction(0)
        fired = None
        t = self._transition_for(el)
        live = enabled(net, self.marking)
        if el.kind == "field":
            keys = self.site.instruction.keys
            if action.field is not None and 0 <= action.field < len(keys) \
                    and keys[action.field] == el.field_key and t in live:
                fired = t
                if el.field_key not in self.done_keys:
                    self.done_keys.add(el.field_key)
                    potential = Fraction(1, self.n_fields)
        elif t in live:
            fired = t
        if fired is not None:
            self.marking = fire(net, self.marking, fired)
            if el.kind == "gate" and not is_final(net, self.marking):
                self.page_index += 1
        self.t += 1
        self.potential_total += potential
        terminal = 0.0
        if is_final(net, self.marking):
            self.done, self.success, terminal = True, True, 1.0
        elif self.t >= self.max_steps:
            self.done, terminal = True, -1.0
        if self.reward_mode == "shaped":
            reward = float(potential) - self.kappa + terminal
        else:
            reward = terminal
        info = {"potential": potential, "terminal": terminal, "fired": fired, "success": self.success}
        return self.observe(), reward, self.done, info


def oracle_actions(obs):
    """Next action of the scripted optimal agent: fill the first open field, else submit."""
    keys = obs.instruction.keys
    for ref, el in obs.page.elements.items():
        if el.kind == "field" and el.field_key not in obs.done_keys:
            return NavAction(ref, keys.index(el.field_key))
    gate = next(ref for ref, el in obs.page.elements.items() if el.kind == "gate")
    return NavAction(gate, None)


def run_oracle(env):
    """Play the scripted optimal agent to the end; returns (total reward, potential sum, success)."""
    obs = env.reset()
    total, done = 0.0, False
    while not done:
        obs, r, done, _ = env.step(oracle_actions(obs))
        total += r
    return total, env.potential_total, env.success
