"""Monte Carlo phase experiments and run records.

Trial ``k`` at grid point ``g`` is driven by the seed tuple
``(base, g, k)``: the instance uses ``(base, g, k, 0)`` and any random
initialization ``(base, g, k, 1)``. Results are therefore independent of the
number of worker processes.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import pool_map
from .instances import Model, bernoulli_z2, gaussian_z2, kuramoto_coupling
from .kuramoto import FlowOptions, flow
from .landscape import Verdict, theorem1_verdict
from .manifold import random_configuration
from .solver import SolverOptions, solve


class Criterion(enum.Enum):
    BENIGN_CERTIFIED = "BenignCertified"
    SOLVER_GLOBAL = "SolverGlobal"
    SYNCHRONIZED = "Synchronized"


PHASE_MODELS = (Model.GAUSSIAN_Z2, Model.BERNOULLI_Z2, Model.KURAMOTO)
PARAM_NAME = {Model.GAUSSIAN_Z2: "sigma", Model.BERNOULLI_Z2: "delta", Model.KURAMOTO: "alpha"}


def _log_ratio(n: int, epsilon: float) -> float:
    return math.sqrt((2.0 + epsilon) * math.log(n) / n)


def gaussian_threshold(n: int, p: int, epsilon: float = 0.01) -> float:
    """Largest noise level ``sigma`` covered: ``((p-1)/(p+1)) sqrt(n / ((2+eps) log n))``."""
    return (p - 1) / (p + 1) * math.sqrt(n / ((2.0 + epsilon) * math.log(n)))


def bernoulli_threshold(n: int, p: int, epsilon: float = 0.01) -> float:
    """Smallest bias ``delta`` covered: ``((p+1)/(p-1)) sqrt((2+eps) log n / n)``."""
    return (p + 1) / (p - 1) * _log_ratio(n, epsilon)


def kuramoto_threshold(n: int, p: int, epsilon: float = 0.01) -> float:
    """Largest repulsion ``alpha`` covered: ``1/2 - ((p+1)/(2(p-1))) sqrt((2+eps) log n / n)``."""
    return 0.5 - (p + 1) / (2.0 * (p - 1)) * _log_ratio(n, epsilon)


def threshold(model: Model, n: int, p: int, epsilon: float = 0.01) -> dict:
    """Noise threshold of the benign regime for ``model`` and the side of it that is covered."""
    if p < 2:
        raise ValueError("thresholds need p >= 2")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if model is Model.GAUSSIAN_Z2:
        return {"value": gaussian_threshold(n, p, epsilon), "covered": "below"}
    if model is Model.BERNOULLI_Z2:
        return {"value": bernoulli_threshold(n, p, epsilon), "covered": "above"}
    if model is Model.KURAMOTO:
        return {"value": kuramoto_threshold(n, p, epsilon), "covered": "below"}
    raise ValueError(f"no threshold for model {model.value}")


def make_instance(model: Model, n: int, value: float, seed):
    if model is Model.GAUSSIAN_Z2:
        return gaussian_z2(n, value, seed)
    if model is Model.BERNOULLI_Z2:
        return bernoulli_z2(n, value, seed)
    if model is Model.KURAMOTO:
        return kuramoto_coupling(n, value, seed)
    raise ValueError(f"model {model.value} has no phase parameter")


@dataclass(frozen=True)
class TrialSpec:
    model: Model
    n: int
    p: int
    value: float
    seed: tuple
    criteria: tuple
    solver: SolverOptions = field(default_factory=SolverOptions)
    flow: FlowOptions = field(default_factory=FlowOptions)


def run_trial(spec: TrialSpec) -> dict:
    """Evaluate every requested criterion on one seeded draw; returns ``{criterion value: bool}``."""
    inst = make_instance(spec.model, spec.n, spec.value, spec.seed + (0,))
    out = {}
    lap = None
    if Criterion.BENIGN_CERTIFIED in spec.criteria or Criterion.SOLVER_GLOBAL in spec.criteria:
        lap = inst.laplacian()
    if Criterion.BENIGN_CERTIFIED in spec.criteria:
        out[Criterion.BENIGN_CERTIFIED.value] = theorem1_verdict(lap, spec.p) is Verdict.BENIGN_CERTIFIED
    V0 = random_configuration(spec.n, spec.p, spec.seed + (1,))
    if Criterion.SOLVER_GLOBAL in spec.criteria:
        out[Criterion.SOLVER_GLOBAL.value] = bool(solve(lap, V0, spec.solver).report.is_global)
    if Criterion.SYNCHRONIZED in spec.criteria:
        out[Criterion.SYNCHRONIZED.value] = bool(flow(inst.C, V0, spec.flow).synchronized)
    return out


@dataclass(frozen=True)
class PhaseResult:
    model: Model
    grid: np.ndarray
    p: int
    n: int
    trials: int
    success_rate: np.ndarray
    criterion: Criterion
    seed: int
    threshold: float
    covered: str
    epsilon: float

    @property
    def successes(self) -> np.ndarray:
        return np.rint(self.success_rate * self.trials).astype(int)

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "parameter": PARAM_NAME[self.model],
            "grid": self.grid.tolist(),
            "p": self.p,
            "n": self.n,
            "trials": self.trials,
            "success_rate": self.success_rate.tolist(),
            "criterion": self.criterion.value,
            "seed": self.seed,
            "threshold": self.threshold,
            "covered": self.covered,
            "epsilon": self.epsilon,
        }

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([PARAM_NAME[self.model], "success_rate", "successes", "trials", "threshold"])
            for g, r, s in zip(self.grid, self.success_rate, self.successes):
                w.writerow([repr(float(g)), repr(float(r)), int(s), self.trials, repr(self.threshold)])


def run_phases(
    model: Model, n: int, p: int, grid, trials: int, criteria, seed: int = 0,
    epsilon: float = 0.01, jobs: int | None = None,
    solver_opts: SolverOptions | None = None, flow_opts: FlowOptions | None = None,
) -> dict:
    """One :class:`PhaseResult` per criterion, all evaluated on shared draws."""
    model = Model(model)
    if model not in PHASE_MODELS:
        raise ValueError(f"phase experiments support {[m.value for m in PHASE_MODELS]}")
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0 or np.any(np.diff(grid) < 0):
        raise ValueError("grid must be non-empty and sorted ascending")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    criteria = tuple(Criterion(c) for c in criteria)
    thr = threshold(model, n, p, epsilon)
    specs = [
        TrialSpec(model, n, p, float(v), (seed, g, k), criteria,
                  solver_opts or SolverOptions(), flow_opts or FlowOptions())
        for g, v in enumerate(grid)
        for k in range(trials)
    ]
    outcomes = pool_map(run_trial, specs, jobs)
    results = {}
    for c in criteria:
        hits = np.array([o[c.value] for o in outcomes], dtype=float).reshape(grid.size, trials)
        results[c] = PhaseResult(
            model, grid, p, n, trials, hits.sum(axis=1) / trials, c, seed,
            thr["value"], thr["covered"], epsilon,
        )
    return results


def run_phase(model, n, p, grid, trials, criterion, seed=0, epsilon=0.01, jobs=None,
              solver_opts=None, flow_opts=None) -> PhaseResult:
    crit = Criterion(criterion)
    return run_phases(model, n, p, grid, trials, (crit,), seed, epsilon, jobs, solver_opts, flow_opts)[crit]


def smoothed_non_increasing(rates, trials: int, window: int = 3) -> bool:
    """Moving-average check that ``rates`` do not rise by more than ``2 / sqrt(trials)``."""
    rates = np.asarray(rates, dtype=float)
    if rates.size < window:
        smooth = rates
    else:
        smooth = np.convolve(rates, np.ones(window) / window, mode="valid")
    return bool(np.all(np.diff(smooth) <= 2.0 / math.sqrt(trials)))


@dataclass
class RunRecord:
    command: str
    config: dict
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    version: str = __version__
    exit_code: int = 0
    error: str | None = None

    def to_dict(self) -> dict:
        d = {
            "command": self.command,
            "config": self.config,
            "outputs": [str(o) for o in self.outputs],
            "wall_time": self.wall_time,
            "version": self.version,
            "exit_code": self.exit_code,
        }
        if self.error is not None:
            d["error"] = self.error
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), default=_json_default)


class Stopwatch:
    def __init__(self):
        self.start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")
