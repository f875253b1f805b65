"""Fokker-Planck generator assembly, evolution and condition checking.

Thin wrapper over the compiled ``_fpkit`` module. Functions that the core
reports as JSON strings are decoded to plain dicts/lists here.
"""

import json as _json

from _fpkit import (
    AssemblyError,
    Generator,
    Scenario,
    ScenarioError,
    assemble,
    catalog,
    differentiate,
    evaluate,
    hille_drift_catalog,
    load_scenario,
    parse_scenario,
    scenario,
    solve,
    with_resolution,
)
import _fpkit as _core

__all__ = [
    "AssemblyError",
    "Generator",
    "Scenario",
    "ScenarioError",
    "assemble",
    "catalog",
    "check",
    "compare_extensions",
    "convergence_study",
    "differentiate",
    "evaluate",
    "hille_classify",
    "hille_drift_catalog",
    "load_scenario",
    "parse_scenario",
    "render_report",
    "scenario",
    "solve",
    "with_resolution",
]


def check(scenario, seed=7):
    """Every condition checker on one scenario, as a list of report dicts."""
    return _json.loads(_core.check(scenario, seed))


def compare_extensions(scenario, threads=1, seed=7):
    """Solve under both boundary closures and compare, as a dict."""
    return _json.loads(_core.compare_extensions(scenario, threads, seed))


def convergence_study(scenario, dts, resolutions, threads=1):
    """Residual and consistency ladders, as a dict with a ``rows`` list."""
    return _json.loads(_core.convergence_study(scenario, list(dts), list(resolutions), threads))


def hille_classify(drift, ladder_max=14):
    """Solvability of the 1-D problems for drift ``b``, as a dict."""
    return _json.loads(_core.hille_classify(drift, ladder_max))


def render_report(experiments, out_dir):
    """Write report.json / report.md / curves.csv from experiment dicts."""
    _core.render_report([_json.dumps(e) for e in experiments], str(out_dir))
