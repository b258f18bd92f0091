"""Abstract form-filling websites built from design primitives."""
from .catalog import RESTRICTED, SKIP, CatalogError, PrimitiveSpec, catalog, lookup
from .env import ContractViolation, NavAction, Observation, WebEnv, horizon, oracle_actions, run_oracle
from .html import export_html
from .site import DomNode, DomTree, Instruction, Placement, RenderedSite, WebsiteDesign, render
from .suite import ENVS, LEVELS, build_suite, test_suite

__all__ = [
    "RESTRICTED", "SKIP", "CatalogError", "PrimitiveSpec", "catalog", "lookup", "ContractViolation",
    "NavAction", "Observation", "WebEnv", "horizon", "oracle_actions", "run_oracle", "export_html",
    "DomNode", "DomTree", "Instruction", "Placement", "RenderedSite", "WebsiteDesign", "render",
    "ENVS", "LEVELS", "build_suite", "test_suite",
]
