"""Run configuration: a declarative JSON file describing one optimization.

Schema (all keys optional unless noted):

    {
      "evaluator": {"builtin": "branin"}            exactly one of builtin /
                   | {"command": "python eval.py",   command (required)
                      "timeout_s": 30.0},
      "domain":    {"lower": [..], "upper": [..],   box problems; exclusive
                    "integer_dims": [..]},           with "space"
      "space":     {"params": [{"name": "lr",
                                "kind": "log10_continuous",
                                "low": -4, "high": -1}, ...],
                    "groups": [{"name": "layers", "max_layers": 5,
                                "size_low": 10, "size_high": 500,
                                "size_step": 10}, ...],
                    "encoding": "count_variable"},
      "sense":     "minimize" | "maximize",
      "budget":    {"max_evaluations": 100,
                    "max_seconds": 3600.0,
                    "target_value": 0.01},
      "workers":   1,
      "seed":      0,
      "weights":   [0.95, 0.75, 0.5, 0.25, 0.05],
      "ga":        {"population_size": 50, "generations": 20,
                    "mutation_rate": 0.1, "elite_fraction": 0.25,
                    "mutation_sigma": 0.1},
      "design_size": null,
      "value_cap": 0.35
    }

"value_cap" is the quantile above which objective values are capped before
each surrogate fit (null fits raw values).

A builtin evaluator brings its own domain, so "domain"/"space" must be
omitted; an external command requires one of them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .core import BoxDomain, DomainError, ObjectiveSense
from .engine import Budget, EngineError, OptimizerConfig
from .hpo import HpoSpace, LayeredGroup, ParamSpec, SpaceError, to_domain
from .proposer import DEFAULT_WEIGHTS, GaConfig
from .testfuncs import TestFunction, UnknownFunctionError, get_function


class ConfigError(ValueError):
    """Raised when a run configuration is malformed."""


@dataclass
class RunConfig:
    evaluator_kind: str                  # "builtin" | "command"
    evaluator: object                    # TestFunction | command string
    domain: BoxDomain
    space: Optional[HpoSpace]
    sense: ObjectiveSense
    budget: Budget
    workers: int
    seed: int
    optimizer: OptimizerConfig
    timeout_s: Optional[float] = None

    @property
    def design_size(self) -> int:
        return self.optimizer.design_size or self.domain.n + 1


def _expect_keys(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}; "
                          f"allowed: {sorted(allowed)}")


def _parse_space(obj: dict) -> HpoSpace:
    _expect_keys(obj, {"params", "groups", "encoding"}, '"space"')
    try:
        params = tuple(
            ParamSpec(name=p["name"], kind=p["kind"], low=p.get("low"),
                      high=p.get("high"), categories=tuple(p.get("categories", ())))
            for p in obj.get("params", ()))
        groups = tuple(
            LayeredGroup(name=g["name"], max_layers=g["max_layers"],
                         size_low=g["size_low"], size_high=g["size_high"],
                         size_step=g.get("size_step", 1))
            for g in obj.get("groups", ()))
        return HpoSpace(params=params, groups=groups,
                        encoding=obj.get("encoding", "count_variable"))
    except (KeyError, TypeError, SpaceError) as exc:
        raise ConfigError(f'invalid "space": {exc}')


def _parse_domain(obj: dict) -> BoxDomain:
    _expect_keys(obj, {"lower", "upper", "integer_dims"}, '"domain"')
    try:
        return BoxDomain(obj["lower"], obj["upper"],
                         obj.get("integer_dims", ()))
    except (KeyError, TypeError, DomainError) as exc:
        raise ConfigError(f'invalid "domain": {exc}')


def _parse_budget(obj: dict) -> Budget:
    _expect_keys(obj, {"max_evaluations", "max_seconds", "target_value"},
                 '"budget"')
    try:
        return Budget(max_evaluations=obj.get("max_evaluations"),
                      max_wallclock=obj.get("max_seconds"),
                      target_value=obj.get("target_value"))
    except EngineError as exc:
        raise ConfigError(str(exc))


def parse_config(obj: dict) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("configuration must be a JSON object")
    _expect_keys(obj, {"evaluator", "domain", "space", "sense", "budget",
                       "workers", "seed", "weights", "ga", "design_size",
                       "value_cap"},
                 "configuration")

    ev = obj.get("evaluator")
    if not isinstance(ev, dict) or ("builtin" in ev) == ("command" in ev):
        raise ConfigError('"evaluator" must set exactly one of "builtin" or "command"')
    _expect_keys(ev, {"builtin", "command", "timeout_s"}, '"evaluator"')

    space = None
    if ev.get("builtin") is not None:
        if "domain" in obj or "space" in obj:
            raise ConfigError("builtin evaluators carry their own domain; "
                              'drop "domain"/"space"')
        try:
            func: TestFunction = get_function(ev["builtin"])
        except UnknownFunctionError as exc:
            raise ConfigError(str(exc))
        kind, evaluator, domain = "builtin", func, func.domain
    else:
        if ("domain" in obj) == ("space" in obj):
            raise ConfigError('external evaluators need exactly one of "domain" or "space"')
        if "space" in obj:
            space = _parse_space(obj["space"])
            domain = to_domain(space)
        else:
            domain = _parse_domain(obj["domain"])
        kind, evaluator = "command", ev["command"]
        if not isinstance(evaluator, str) or not evaluator.strip():
            raise ConfigError('"command" must be a nonempty string')

    sense_raw = obj.get("sense", "minimize")
    try:
        sense = ObjectiveSense(sense_raw)
    except ValueError:
        raise ConfigError(f'"sense" must be "minimize" or "maximize", got {sense_raw!r}')

    budget = _parse_budget(obj.get("budget", {"max_evaluations": 100}))

    workers = obj.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError(f'"workers" must be an integer >= 1, got {workers!r}')
    seed = obj.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f'"seed" must be an integer, got {seed!r}')

    weights = tuple(obj.get("weights", DEFAULT_WEIGHTS))
    if not weights or any(not isinstance(w, (int, float)) or not 0 <= w <= 1
                          for w in weights):
        raise ConfigError('"weights" must be numbers in [0, 1]')

    ga = None
    if obj.get("ga") is not None:
        _expect_keys(obj["ga"], {"population_size", "generations",
                                 "mutation_rate", "elite_fraction",
                                 "mutation_sigma"}, '"ga"')
        try:
            ga = GaConfig(**{**dict(population_size=50, generations=20,
                                    mutation_rate=0.1, elite_fraction=0.25,
                                    mutation_sigma=0.1), **obj["ga"]})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f'invalid "ga": {exc}')

    design_size = obj.get("design_size")
    if design_size is not None:
        if not isinstance(design_size, int) or design_size < domain.n + 1:
            raise ConfigError(f'"design_size" must be an integer >= n+1 = {domain.n + 1}')

    value_cap = obj.get("value_cap", 0.35)
    if value_cap is not None and (not isinstance(value_cap, (int, float))
                                  or not 0 < value_cap <= 1):
        raise ConfigError('"value_cap" must be null or a number in (0, 1]')

    optimizer = OptimizerConfig(weights=weights, ga=ga, design_size=design_size,
                                value_cap=value_cap)
    cfg = RunConfig(evaluator_kind=kind, evaluator=evaluator, domain=domain,
                    space=space, sense=sense, budget=budget, workers=workers,
                    seed=seed, optimizer=optimizer,
                    timeout_s=ev.get("timeout_s"))

    if budget.max_evaluations is not None and budget.max_evaluations < cfg.design_size:
        raise ConfigError(
            f"budget max_evaluations={budget.max_evaluations} is below the "
            f"initial design size {cfg.design_size}")
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        obj = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}")
    return parse_config(obj)
