"""Mixed-initiative LTL planning: automata, plans, IRL and headless sessions."""

import json
import os

from . import _core
from ._core import (
    Error,
    NoAcceptingRun,
    NoFeasibleInsertion,
    NoLift,
    NoPath,
    ParseError,
    ScenarioError,
    UnknownId,
)

__all__ = [
    "Error", "NoAcceptingRun", "NoFeasibleInsertion", "NoLift", "NoPath", "ParseError",
    "ScenarioError", "UnknownId", "nba", "synthesize", "revise", "temp_task", "learn_beta",
    "run_script", "replay",
]


def _scenario(scenario):
    if isinstance(scenario, (str, os.PathLike)):
        with open(scenario) as f:
            return f.read()
    return json.dumps(scenario)


def _lines(items):
    return [s if isinstance(s, str) else json.dumps(s) for s in items]


def nba(formula, ap=()):
    """Büchi automaton for an LTL formula, as a dict."""
    return json.loads(_core.nba(formula, list(ap)))


def synthesize(scenario, beta=None, gamma=None):
    """Optimal plan from the initial region. `scenario` is a dict or a file path."""
    return json.loads(_core.plan(_scenario(scenario), beta, gamma, []))


def revise(scenario, history, beta=None, gamma=None):
    """Optimal plan from the product states consistent with a visited-region history."""
    return json.loads(_core.plan(_scenario(scenario), beta, gamma, list(history)))


def temp_task(scenario, pickup, dropoff, deadline, beta=None, gamma=None, history=()):
    return json.loads(_core.temp_task(_scenario(scenario), pickup, dropoff, deadline, beta, gamma,
                                      list(history)))


def learn_beta(scenario, regions, beta0):
    """Estimate beta from a demonstrated region trace."""
    return json.loads(_core.irl_learn(_scenario(scenario), list(regions), beta0))


def run_script(scenario, script, seed=0, duration=1e9):
    """Headless scripted session. `script` is a list of directive dicts or JSON lines, or a path."""
    if isinstance(script, (str, os.PathLike)):
        with open(script) as f:
            script = [l for l in f.read().splitlines() if l.strip()]
    return _core.sim_run(_scenario(scenario), _lines(script), seed, duration)


def replay(log):
    """Replay an event log (list of lines or a path)."""
    if isinstance(log, (str, os.PathLike)):
        with open(log) as f:
            log = [l for l in f.read().splitlines() if l.strip()]
    return _core.session_replay(_lines(log))
