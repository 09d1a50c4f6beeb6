"""End-to-end runs: select, featurise, classify, optionally under a control.

An experiment for one (selection, feature) pair produces the feature
matrix and a report with the held-out accuracy of a 60/40 split and the
range of the 5-fold cross-validated accuracy.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .classify import Dataset, cross_validate, evaluate, split, train_svm
from .digraph import Digraph, closed_neighbourhood
from .errors import ValidationError
from .params import parse_code
from .pipeline import (DEFAULT_M, BinaryDynamicsSet, BinSpec, centre_firing_matrix,
                       featurise_many, parameter_table, rank_vertices)
from . import validation as V

__all__ = ["ExperimentConfig", "ExperimentResult", "run_experiment", "features_for"]


@dataclass(frozen=True)
class ExperimentConfig:
    selection: str
    feature: str = "size"
    m: int = DEFAULT_M
    end: str = "top"
    bins: BinSpec = field(default_factory=BinSpec)
    seed: int = 0
    train_fraction: float = 0.6
    folds: int = 5
    c: float = 1.0
    validation: str | None = None

    def __post_init__(self):
        parse_code(self.selection)
        parse_code(self.feature)
        if self.end not in ("top", "bottom"):
            raise ValidationError(f"end must be 'top' or 'bottom', not {self.end!r}")
        if self.validation is not None and self.validation not in V.VALIDATION_MODES:
            raise ValidationError(f"unknown validation mode {self.validation!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bins"] = [self.bins.start, self.bins.stop, self.bins.n_bins]
        return d


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    features: list          # one (X, y) per sample; one sample unless random selection
    reports: list[dict]

    def summary(self) -> dict:
        acc = [r["accuracy"] for r in self.reports]
        out = {
            "selection": self.config.selection,
            "feature": self.config.feature,
            "end": self.config.end,
            "validation": self.config.validation,
            "accuracy": float(np.mean(acc)),
            "cv_mean": float(np.mean([r["cv"]["mean"] for r in self.reports])),
            "cv_min": float(min(r["cv"]["min"] for r in self.reports)),
            "cv_max": float(max(r["cv"]["max"] for r in self.reports)),
        }
        if len(acc) > 1:
            out["samples"] = acc
            out["accuracy_min"] = float(min(acc))
            out["accuracy_max"] = float(max(acc))
        return out


def _score(x: np.ndarray, y: np.ndarray, cfg: ExperimentConfig) -> dict:
    ds = Dataset(x, y)
    train, test = split(ds, cfg.train_fraction, cfg.seed)
    report = evaluate(train_svm(train, c=cfg.c), test).to_dict()
    report["cv"] = cross_validate(ds, cfg.folds, cfg.seed, c=cfg.c).to_dict()
    return report


def _centres(g: Digraph, cfg: ExperimentConfig, values) -> np.ndarray:
    if values is None:
        values = parameter_table(g, [cfg.selection])[:, 0]
    if not 0 <= cfg.m <= g.n_vertices:
        raise ValidationError(f"cannot select {cfg.m} of {g.n_vertices} vertices")
    return rank_vertices(values, cfg.end)[: cfg.m]


def features_for(g: Digraph, ds: BinaryDynamicsSet, cfg: ExperimentConfig, values=None,
                 threads: int = 1) -> list[tuple[np.ndarray, np.ndarray]]:
    """Feature matrices of the run described by ``cfg``.

    ``values`` optionally holds the selection parameter of every vertex.
    Returns a list with one ``(X, y)`` per sample (twenty for random
    selection, one otherwise).
    """
    mode = cfg.validation
    if mode == "random_selection":
        draws = V.random_selection(g, cfg.m, cfg.seed)
        return [featurise_many(ds, [closed_neighbourhood(g, int(c)) for c in d], cfg.bins,
                               cfg.feature, threads) for d in draws]
    centres = _centres(g, cfg, values)
    if mode == "centres_only":
        rows = [centre_firing_matrix(t, centres, cfg.bins).flattened for t in ds]
        x = np.vstack(rows) if rows else np.empty((0, len(centres) * cfg.bins.n_bins))
        return [(x, ds.labels)]
    if mode == "degree_matched_subgraphs":
        nbs = V.degree_matched_subgraphs(g, centres, cfg.seed)
    elif mode == "fake_neighbourhoods":
        _, nbs = V.fake_neighbourhoods(g, centres, cfg.seed)
    else:
        nbs = [closed_neighbourhood(g, int(c)) for c in centres]
    if mode == "shuffled_activity":
        ds, _, _ = V.shuffled_activity(ds, g.n_vertices, seed=cfg.seed)
    return [featurise_many(ds, nbs, cfg.bins, cfg.feature, threads)]


def run_experiment(g: Digraph, ds: BinaryDynamicsSet, cfg: ExperimentConfig, values=None,
                   threads: int = 1) -> ExperimentResult:
    if len(ds) == 0:
        raise ValidationError("no trials to classify")
    feats = features_for(g, ds, cfg, values, threads)
    reports = [_score(x, y, cfg) for x, y in feats]
    return ExperimentResult(cfg, feats, reports)
