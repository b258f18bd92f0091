"""Central finite-difference checks for tape gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tape import Tape


@dataclass
class GradCheckReport:
    checked: int = 0
    failures: list = field(default_factory=list)
    max_rel_error: float = 0.0

    @property
    def ok(self):
        return not self.failures


def _close(a, n, rtol, atol):
    return abs(a - n) <= rtol * max(abs(a), abs(n)) + atol


def _rel(a, n):
    denom = max(abs(a), abs(n))
    return 0.0 if denom == 0.0 else abs(a - n) / denom


def analytic_grads(loss_fn, params):
    for p in params:
        p.zero_grad()
    tape = Tape()
    out = loss_fn(tape)
    tape.backward(out)
    grads = [p.grad.copy() for p in params]
    for p in params:
        p.zero_grad()
    return out.item(), grads


def _value(loss_fn):
    return loss_fn(Tape()).item()


def check_gradients(loss_fn, params, rng, n_coords=8, eps=1e-5, rtol=1e-4, atol=1e-8,
                    n_directions=2):
    """Compare the tape gradient of ``loss_fn`` against central differences.

    ``loss_fn(tape)`` must build a scalar on the given tape and be a pure
    function of the parameter values. Checks ``n_coords`` random coordinates
    per parameter plus ``n_directions`` random directional derivatives.
    """
    params = list(params)
    _, grads = analytic_grads(loss_fn, params)
    report = GradCheckReport()
    for p, g in zip(params, grads):
        flat = p.value.reshape(-1)
        picks = rng.choice(flat.size, size=min(n_coords, flat.size), replace=False)
        for j in picks:
            old = flat[j]
            flat[j] = old + eps
            hi = _value(loss_fn)
            flat[j] = old - eps
            lo = _value(loss_fn)
            flat[j] = old
            num = (hi - lo) / (2 * eps)
            ana = float(g.reshape(-1)[j])
            report.checked += 1
            report.max_rel_error = max(report.max_rel_error, _rel(ana, num))
            if not _close(ana, num, rtol, atol):
                report.failures.append((p.name, int(j), ana, num))
    for _ in range(n_directions):
        dirs = [rng.normal(size=p.shape) for p in params]
        norm = np.sqrt(sum(float(np.sum(d * d)) for d in dirs))
        dirs = [d / norm for d in dirs]
        saved = [p.value.copy() for p in params]
        for p, d, s in zip(params, dirs, saved):
            p.value[...] = s + eps * d
        hi = _value(loss_fn)
        for p, d, s in zip(params, dirs, saved):
            p.value[...] = s - eps * d
        lo = _value(loss_fn)
        for p, s in zip(params, saved):
            p.value[...] = s
        num = (hi - lo) / (2 * eps)
        ana = float(sum(np.sum(g * d) for g, d in zip(grads, dirs)))
        report.checked += 1
        report.max_rel_error = max(report.max_rel_error, _rel(ana, num))
        if not _close(ana, num, rtol, atol):
            report.failures.append(("direction", -1, ana, num))
    return report


def check_input_gradient(fn, x, rng, n_coords=8, eps=1e-5, rtol=1e-4, atol=1e-8):
    """Finite-difference check of d fn(x) / dx for a function of a plain array input.

    ``fn(tape, xvar)`` gets ``xvar`` as a tape leaf and returns a scalar.
    """
    x = np.array(x, dtype=np.float64)
    tape = Tape()
    leaf = tape.record(x.copy(), (), None)
    out = fn(tape, leaf)
    tape.backward(out)
    ana_full = leaf.grad if leaf.grad is not None else np.zeros_like(x)
    report = GradCheckReport()
    flat = x.reshape(-1)
    for j in rng.choice(flat.size, size=min(n_coords, flat.size), replace=False):
        old = flat[j]
        flat[j] = old + eps
        hi = fn(Tape(), x.copy()).item()
        flat[j] = old - eps
        lo = fn(Tape(), x.copy()).item()
        flat[j] = old
        num = (hi - lo) / (2 * eps)
        ana = float(ana_full.reshape(-1)[j])
        report.checked += 1
        report.max_rel_error = max(report.max_rel_error, _rel(ana, num))
        if not _close(ana, num, rtol, atol):
            report.failures.append(("x", int(j), ana, num))
    return report
