"""The fixed evaluation suite: five website families at four difficulty levels.

Level ``d`` keeps the first ceil(d/4 * F4) active primitives of the level-4
design plus ``d - 1`` passive distractors. Designs are stored in
``suite.json`` next to this module and pinned by hash.
"""
from __future__ import annotations

import hashlib
import json
import math
from importlib import resources

from .site import Placement, WebsiteDesign

SUITE_VERSION = 1
SUITE_SHA256 = "f3aa4b8c6d7c7e940c19446c53933e9d74e09b32fc340537594bd265049d1f58"
ENVS = ("Login", "Address", "Payment", "Shopping", "Flight")
LEVELS = (1, 2, 3, 4)

# (active primitives by page, passive distractors in order, fixed passive home page)
_FAMILIES = {
    "Login": ([["username", "password", "rememberme", "stayloggedin", "captcha"]],
              ["header_login", "forgotpassword", "forgotusername"], None),
    "Address": ([["firstname", "lastname", "addressline1", "addressline2", "city", "state", "zipcode"]],
                ["header", "navbar", "footer"], None),
    "Payment": ([["cc", "ccnumber", "ccexpdate", "cccvv", "fullname"]],
                ["header", "dealmedia", "footer"], None),
    "Flight": ([["departureairport", "destinationairport", "departuredate", "destinationdate",
                 "flighttype", "cabin", "numberofpeople"]],
               ["header_select_items", "navbar", "footer"], None),
    "Shopping": ([["username", "password", "rememberme", "stayloggedin", "captcha"],
                  ["firstname", "lastname", "addressline1", "addressline2", "city", "state", "zipcode"]],
                 ["deck", "carousel", "footer"], ["navbar"]),
}


def build_design(env, level):
    """Construct the suite design for ``env`` at ``level`` from the family definition."""
    pages, distractors, home = _FAMILIES[env]
    f4 = sum(len(p) for p in pages)
    keep = math.ceil(level / 4 * f4)
    placements = []
    offset = 0
    if home is not None:
        placements += [Placement(n, 0) for n in home]
        placements += [Placement(n, 0) for n in distractors[:level - 1]]
        offset = 1
    left = keep
    for p, names in enumerate(pages):
        take = names[:left]
        left -= len(take)
        placements += [Placement(n, p + offset) for n in take]
    if home is None:
        placements += [Placement(n, 0) for n in distractors[:level - 1]]
    used = sorted({pl.page for pl in placements})
    remap = {old: new for new, old in enumerate(used)}
    placements = [Placement(pl.primitive, remap[pl.page]) for pl in placements]
    return WebsiteDesign(len(used), placements)


def build_suite():
    return {env: {level: build_design(env, level) for level in LEVELS} for env in ENVS}


def suite_to_json(suite):
    doc = {"version": SUITE_VERSION,
           "designs": {env: {str(l): suite[env][l].to_dict() for l in LEVELS} for env in ENVS}}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def fixture_text():
    return resources.files(__package__).joinpath("suite.json").read_text()


def test_suite(verify=True):
    """Load the pinned suite: ``{env: {level: WebsiteDesign}}``."""
    text = fixture_text()
    if verify:
        digest = hashlib.sha256(text.encode()).hexdigest()
        if digest != SUITE_SHA256:
            raise ValueError(f"suite fixture hash {digest} does not match the pinned {SUITE_SHA256}")
    doc = json.loads(text)
    if doc["version"] != SUITE_VERSION:
        raise ValueError(f"suite fixture version {doc['version']} != {SUITE_VERSION}")
    return {env: {int(l): WebsiteDesign.from_dict(d) for l, d in levels.items()}
            for env, levels in doc["designs"].items()}


test_suite.__test__ = False  # not a pytest test
