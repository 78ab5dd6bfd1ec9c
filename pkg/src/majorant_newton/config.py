"""Experiment configuration: JSON loading, schema validation and resolution."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .families import (
    HolderParams,
    LipschitzDensity,
    density_from_json,
    example_models,
    generalized_model,
    holder_model,
    lipschitz_model,
    load_density,
)
from .problems import PROBLEMS, get_problem
from .scalar import MajorantError, MajorantModel
from .solver import Problem, worst_case_instance


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config.schema.json").read_text())


@dataclass
class Sweep:
    fractions: list
    allow_outside: bool = False


@dataclass
class ExperimentConfig:
    majorant: dict
    kappa: float
    problem: Optional[str] = None
    known_root: bool = True
    x0: object = None
    step_atol: float = 1e-15
    residual_atol: float = 1e-15
    max_iters: int = 100
    csv_path: Optional[str] = None
    report_path: Optional[str] = None
    plot_path: Optional[str] = None
    samples: int = 64
    probes: int = 20
    seed: int = 0
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=None) -> "ExperimentConfig":
        try:
            jsonschema.validate(raw, load_schema())
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from None
        problem, known_root = raw.get("problem"), True
        if isinstance(problem, dict):
            problem, known_root = problem["id"], problem.get("known_root", True)
        tol = raw.get("tolerances", {})
        out = raw.get("outputs", {})
        cert = raw.get("certify", {})
        cfg = cls(
            majorant=raw["majorant"],
            kappa=float(raw["kappa"]),
            problem=problem,
            known_root=known_root,
            x0=_parse_x0(raw.get("x0")),
            step_atol=tol.get("step_atol", 1e-15),
            residual_atol=tol.get("residual_atol", 1e-15),
            max_iters=tol.get("max_iters", 100),
            csv_path=out.get("csv_path"),
            report_path=out.get("report_path"),
            plot_path=out.get("plot_path"),
            samples=cert.get("samples", 64),
            probes=cert.get("probes", 20),
            seed=raw.get("seed", 0),
        )
        if base_dir is not None:
            cfg.base_dir = Path(base_dir)
        if problem is not None and problem != "worst_case" and problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {problem!r}")
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent)

    def output(self, name: Optional[str], out_dir, default: Optional[str]) -> Optional[Path]:
        name = name or default
        if name is None:
            return None
        p = Path(name)
        if not p.is_absolute():
            p = Path(out_dir) / p if out_dir is not None else self.base_dir / p
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def build_model(self) -> MajorantModel:
        return build_model(self.majorant, self.base_dir)

    def build_problem(self, model: Optional[MajorantModel] = None) -> Problem:
        if self.problem is None:
            raise ConfigError("config names no problem")
        try:
            if self.problem == "worst_case":
                prob = worst_case_instance(model or self.build_model(), self.kappa)
            else:
                prob = get_problem(self.problem, self.kappa)
        except (MajorantError, KeyError) as exc:
            raise ConfigError(str(exc)) from None
        if not self.known_root:
            prob.x_star = None
        return prob


def _parse_x0(x0):
    if x0 is None:
        return None
    if isinstance(x0, dict):
        if "fractions" in x0:
            if any(k in x0 for k in ("count", "min_frac", "max_frac")):
                raise ConfigError("sweep takes either fractions or count/min_frac/max_frac")
            fr = [float(v) for v in x0["fractions"]]
        else:
            missing = {"count", "min_frac", "max_frac"} - set(x0)
            if missing:
                raise ConfigError(f"radial sweep is missing {sorted(missing)}")
            fr = list(np.linspace(x0["min_frac"], x0["max_frac"], x0["count"]))
        allow = x0.get("allow_outside", False)
        for v in fr:
            if not v > 0:
                raise ConfigError(f"sweep fraction {v} is not positive")
            if v > 1 and not allow:
                raise ConfigError(f"sweep fraction {v} > 1 needs allow_outside")
        return Sweep(sorted(fr), allow)
    if isinstance(x0, (int, float)):
        return np.array([float(x0)])
    if all(isinstance(v, (int, float)) for v in x0):
        return np.array(x0, dtype=float)
    return [np.array(v, dtype=float) for v in x0]


def _num(params: dict, key: str) -> float:
    if key not in params:
        raise ConfigError(f"majorant params need {key!r}")
    v = params[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"majorant param {key!r} must be a number")
    return float(v)


def build_model(spec: dict, base_dir=None) -> MajorantModel:
    family, params = spec["family"], spec.get("params", {})
    try:
        if family == "holder":
            return holder_model(HolderParams(K=_num(params, "K"), p=_num(params, "p")))
        if family == "lipschitz":
            inv = _num(params, "inv_norm") if "inv_norm" in params else 1.0
            return lipschitz_model(_num(params, "L"), inv)
        if family == "generalized":
            p = _num(params, "p") if "p" in params else None
            return generalized_model(build_density(params, base_dir), p)
        if family == "example":
            if "name" not in params:
                raise ConfigError("example majorant needs 'name'")
            p = _num(params, "p") if "p" in params else None
            return example_models(params["name"], p)
    except MajorantError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown majorant family {family!r}")


def build_density(params: dict, base_dir=None) -> LipschitzDensity:
    if "segments" in params:
        return density_from_json(params["segments"])
    if "table" in params:
        return LipschitzDensity.tabulated(params["table"]["u"], params["table"]["L"])
    if "density_path" in params:
        path = Path(params["density_path"])
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        return load_density(str(path))
    if "constant" in params:
        return LipschitzDensity.constant(_num(params, "constant"))
    raise ConfigError("generalized majorant needs segments, table, density_path or constant")


def density_of(spec: dict, base_dir=None) -> Optional[LipschitzDensity]:
    if spec.get("family") != "generalized":
        return None
    return build_density(spec.get("params", {}), base_dir)


def starts_from(cfg: ExperimentConfig, r: float, dim: int, center) -> list:
    """Starting points of the config; sweep fractions are taken along one seeded direction."""
    x0 = cfg.x0
    if x0 is None:
        raise ConfigError("config gives no x0")
    if isinstance(x0, Sweep):
        if not math.isfinite(r):
            raise ConfigError("sweep needs a finite convergence radius")
        d = sweep_direction(dim, cfg.seed)
        return [center + f * r * d for f in x0.fractions]
    pts = [x0] if isinstance(x0, np.ndarray) else x0
    for p in pts:
        if p.size != dim:
            raise ConfigError(f"x0 {p.tolist()} has dimension {p.size}, problem expects {dim}")
    return pts


def sweep_direction(dim: int, seed: int) -> np.ndarray:
    if dim == 1:
        return np.ones(1)
    d = np.random.default_rng(seed).standard_normal(dim)
    return d / np.linalg.norm(d)
