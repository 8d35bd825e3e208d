"""Full-batch gradient descent, repeated runs and learning-rate sweeps."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .core import Dataset, FieldParams, LinearHead, TrainConfig, init_params, validate
from .model import ModelState

__all__ = ["EpochRecord", "RunResult", "SweepStats", "TrainingDiverged", "train", "run_repeated", "sweep", "max_workers"]

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    def __init__(self, message: str, result: "RunResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    cost: float
    train_accuracy: float


@dataclass(frozen=True, eq=False)
class RunResult:
    """One training run.

    ``costs[k]`` / ``accuracies[k]`` belong to the parameters after ``k``
    updates, so a complete run holds ``epochs + 1`` entries.
    """

    seed: int
    config: TrainConfig
    costs: np.ndarray
    accuracies: np.ndarray
    initial_state: ModelState
    final_state: ModelState
    aborted: bool = False

    @property
    def history(self) -> list[EpochRecord]:
        return [EpochRecord(i, float(c), float(a)) for i, (c, a) in enumerate(zip(self.costs, self.accuracies))]

    @property
    def epochs_completed(self) -> int:
        return len(self.costs) - 1

    @property
    def final_cost(self) -> float:
        return float(self.costs[-1])


@dataclass(frozen=True)
class SweepStats:
    rate: float
    mean: np.ndarray
    std: np.ndarray
    runs: tuple[RunResult, ...]

    @property
    def aborted(self) -> int:
        return sum(r.aborted for r in self.runs)


def max_workers() -> int:
    """Thread cap for repeated runs, from ``VFNN_THREADS`` (default: CPU count)."""
    raw = os.environ.get("VFNN_THREADS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def train(dataset: Dataset, config: TrainConfig, initial: ModelState | None = None, kernels=None,
          raise_on_divergence: bool = False) -> RunResult:
    """Run ``config.epochs`` full-batch updates ``p <- p - eta * grad``.

    Parameters start from ``init_params(n, S, config.seed)`` unless
    ``initial`` is given (used to resume from a checkpoint).  A non-finite
    cost or gradient stops the run early with ``aborted=True``.
    """
    validate(dataset)
    n = dataset.dim
    if initial is None:
        theta, head = init_params(n, config.num_gaussians, config.seed)
        initial = ModelState(theta, head, config.flow)
    elif initial.dim != n:
        raise ValueError(f"initial state is {initial.dim}-D, data is {n}-D")
    else:
        initial = replace(initial, flow=config.flow)
    k = kernels or _backend.kernels
    costs, accs, C, V, w, b, status = k.train_loop(
        dataset.points,
        dataset.labels.astype(np.float64),
        initial.theta.centers,
        initial.theta.directions,
        initial.head.weights,
        initial.head.bias,
        config.flow.step_size,
        config.flow.num_steps,
        config.reg_lambda,
        config.learning_rate,
        config.epochs,
    )
    if len(costs) == 0:
        raise FloatingPointError("initial cost is not finite")
    final = ModelState(FieldParams(C, V), LinearHead(w, b), config.flow)
    result = RunResult(config.seed, config, costs, accs, initial, final, aborted=bool(status))
    if result.aborted:
        msg = f"seed {config.seed}: non-finite cost or gradient after epoch {result.epochs_completed}"
        log.warning(msg)
        if raise_on_divergence:
            raise TrainingDiverged(msg, result)
    return result


def run_repeated(dataset: Dataset, config: TrainConfig, repeats: int, kernels=None) -> list[RunResult]:
    """``repeats`` independent runs with seeds ``config.seed, config.seed + 1, ...``.

    Runs execute on a thread pool; results come back in seed order and are
    the same for any worker count.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    configs = [replace(config, seed=config.seed + i) for i in range(repeats)]
    workers = min(max_workers(), repeats)
    if workers == 1:
        return [train(dataset, c, kernels=kernels) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: train(dataset, c, kernels=kernels), configs))


def aggregate(runs: list[RunResult]) -> tuple[np.ndarray, np.ndarray]:
    """Per-epoch mean and (population) std of cost; aborted runs are cut off."""
    length = min(len(r.costs) for r in runs)
    stack = np.vstack([r.costs[:length] for r in runs])
    return stack.mean(axis=0), stack.std(axis=0)


def sweep(dataset: Dataset, base: TrainConfig, rates, repeats: int, kernels=None) -> list[SweepStats]:
    rates = list(rates)
    if not rates:
        raise ValueError("need at least one learning rate")
    out = []
    for rate in rates:
        runs = run_repeated(dataset, replace(base, learning_rate=float(rate)), repeats, kernels=kernels)
        mean, std = aggregate(runs)
        out.append(SweepStats(float(rate), mean, std, tuple(runs)))
        log.info("rate %g: final mean cost %.6g (std %.3g)", rate, mean[-1], std[-1])
    return out
