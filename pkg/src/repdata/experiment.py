"""End-to-end comparison of training on a dataset, its dominating reduction
and a random subset of the same size."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .bounds import loss_gap_bound
from .dataset import LabeledDataset, SamplerConfig, load_iris_binary, sample_interlaced_torus, sample_labeled_circle, save_csv
from .metric import optimal_epsilon_subset
from .perceptron import TrainConfig, accuracy, init_weights, train
from .persistence import epsilon_interval
from .reduce import epsilon_for_target_size, random_stratified_subset, reduce_dataset

SCHEMA_VERSION = 1

# above this size the dimension-1 diagram (cubic number of triangles) is skipped
MAX_POINTS_FOR_DIM1 = 200

DEFAULTS = {
    "torus": {"epsilon": None, "target_size": 267},
    "iris": {"epsilon": 0.5, "target_size": None},
    "circle": {"epsilon": 12.0, "target_size": None},
}


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    epsilon: Optional[float] = None
    target_size: Optional[int] = None
    trainer: TrainConfig = field(default_factory=TrainConfig)
    repetitions: int = 100
    seed: int = 0
    out_dir: Optional[str] = None
    points_per_class: int = 2000
    iris_classes: tuple[int, int] = (0, 2)
    timing_epochs: int = 10000
    time_training: bool = True

    def __post_init__(self):
        if self.name not in DEFAULTS:
            raise ValueError(f"unknown experiment {self.name!r}; choose from {sorted(DEFAULTS)}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.epsilon is not None and self.target_size is not None:
            raise ValueError("give either epsilon or target_size, not both")

    def resolved(self) -> "ExperimentSpec":
        if self.epsilon is not None or self.target_size is not None:
            return self
        return replace(self, **DEFAULTS[self.name])


def _seeds(master: int, count: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(master).generate_state(count)]


def make_dataset(spec: ExperimentSpec, seed: int) -> LabeledDataset:
    if spec.name == "torus":
        return sample_interlaced_torus(SamplerConfig("interlaced-torus", spec.points_per_class, seed=seed))
    if spec.name == "circle":
        return sample_labeled_circle(SamplerConfig("circle", 11, seed=seed, num_points=21))
    return load_iris_binary(spec.iris_classes)


def _metrics(original: LabeledDataset, subset: LabeledDataset) -> dict:
    dims = (0, 1) if len(original) <= MAX_POINTS_FOR_DIM1 else (0,)
    interval = epsilon_interval(original.points, subset.points, dims=dims)
    return {
        "size": len(subset),
        "optimal_epsilon": optimal_epsilon_subset(original, subset),
        "hausdorff": interval.hausdorff,
        "bottleneck": {str(q): v for q, v in interval.bottleneck.items()},
        "epsilon_interval": [interval.lower, interval.upper],
    }


def _summary(values) -> dict:
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "min": float(arr.min()), "max": float(arr.max())}


def _timed(fn, repeats: int = 3):
    best, result = float("inf"), None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run the whole comparison and return a JSON-ready report.

    With ``out_dir`` set, the three datasets, the per-epoch traces and
    ``report.json`` are written there. Everything except the ``timings``
    section is a deterministic function of the spec.
    """
    spec = spec.resolved()
    data_seed, subset_seed, init_seed, train_seed, weights_seed = _seeds(spec.seed, 5)
    original = make_dataset(spec, data_seed)

    timings = {}
    epsilon = spec.epsilon
    if spec.target_size is not None:
        epsilon, _ = epsilon_for_target_size(original, spec.target_size)
    timings["reduction_s"], reduction = _timed(lambda: reduce_dataset(original, epsilon))
    dominating = reduction.reduced
    random_subset, _ = random_stratified_subset(original, reduction.per_class_sizes, subset_seed)

    datasets = {"original": original, "dominating": dominating, "random": random_subset}
    w0 = init_weights(original.dim, init_seed)
    trainer = replace(spec.trainer, seed=train_seed, record_history=True)
    traces = {name: train(data, w0, trainer, reference=original) for name, data in datasets.items()}

    gaps = {"dominating": [], "random": []}
    for s in _seeds(weights_seed, spec.repetitions):
        w = init_weights(original.dim, s)
        for name in gaps:
            gaps[name].append(loss_gap_bound(w, original, datasets[name]))

    report = {
        "schema_version": SCHEMA_VERSION,
        "experiment": spec.name,
        "seed": spec.seed,
        "trainer": asdict(spec.trainer),
        "reduction": {**reduction.to_dict(), "epsilon": epsilon},
        "metrics": {name: _metrics(original, datasets[name]) for name in ("dominating", "random")},
        "training": {
            name: {
                "final_train_accuracy": tr.train_acc[-1],
                "final_original_accuracy": tr.ref_acc[-1],
                "final_train_loss": tr.train_loss[-1],
                "final_original_loss": tr.ref_loss[-1],
                "weights": tr.weights.tolist(),
            }
            for name, tr in traces.items()
        },
        "bounds": {
            name: {
                "repetitions": spec.repetitions,
                "gap": _summary([g.gap for g in reps]),
                "weighted_gap": _summary([g.weighted_gap for g in reps]),
                "bound": _summary([g.bound for g in reps]),
                "bound_capped": _summary([g.bound_capped for g in reps]),
            }
            for name, reps in gaps.items()
        },
    }

    if spec.time_training:
        gd = TrainConfig(mode="gd", epochs=spec.timing_epochs, eta0=trainer.eta0, record_history=False)
        timings["gd_epochs"] = spec.timing_epochs
        timings["gd_original_s"], _ = _timed(lambda: train(original, w0, gd))
        timings["gd_dominating_s"], _ = _timed(lambda: train(dominating, w0, gd))
        timings["dominating_total_s"] = timings["reduction_s"] + timings["gd_dominating_s"]
    report["timings"] = timings

    if spec.out_dir is not None:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, data in datasets.items():
            save_csv(data, out / f"{name}.csv")
            traces[name].to_csv(out / f"trace_{name}.csv")
        (out / "report.json").write_text(json.dumps(report, indent=2))
    return report
