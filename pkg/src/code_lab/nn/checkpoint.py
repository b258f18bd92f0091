"""JSON checkpoints of named tensors.

Floats are written with 17 significant digits so a load reproduces every
value bit for bit.
"""
from __future__ import annotations

import json

import numpy as np

FORMAT_VERSION = 1


def _encode_floats(values):
    return "[" + ",".join(format(float(v), ".17g") for v in values) + "]"


def dumps(params, meta=None):
    """Serialize a mapping name -> array (or a module's parameters) to a JSON string."""
    if hasattr(params, "parameters"):
        params = {p.name: p.value for p in params.parameters()}
    parts = []
    for name in params:
        arr = np.asarray(params[name], dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"tensor {name!r} has non-finite entries")
        parts.append('{"name":%s,"shape":%s,"data":%s}'
                     % (json.dumps(name), json.dumps(list(arr.shape)), _encode_floats(arr.ravel())))
    return ('{"version":%d,"meta":%s,"tensors":[%s]}\n'
            % (FORMAT_VERSION, json.dumps(meta or {}, sort_keys=True), ",".join(parts)))


def loads(text):
    doc = json.loads(text)
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    tensors = {}
    for t in doc["tensors"]:
        arr = np.array(t["data"], dtype=np.float64)
        tensors[t["name"]] = arr.reshape(t["shape"])
    return tensors, doc.get("meta", {})


def save(path, module_or_params, meta=None):
    with open(path, "w") as fh:
        fh.write(dumps(module_or_params, meta))


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def load_into(module, tensors):
    """Copy loaded tensors into a module's parameters (names and shapes must match)."""
    own = module.named_parameters()
    missing = set(own) - set(tensors)
    if missing:
        raise KeyError(f"checkpoint lacks {sorted(missing)}")
    for name, p in own.items():
        arr = tensors[name]
        if arr.shape != p.value.shape:
            raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {p.value.shape}")
        p.value[...] = arr
