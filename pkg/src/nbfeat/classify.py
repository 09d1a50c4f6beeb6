"""Classification of vector summaries.

One-versus-one soft-margin support vector machines with an RBF kernel,
trained by sequential minimal optimisation with second-order working set
selection, plus a nearest-centroid baseline.  Features are standardised
with training-set statistics before either classifier sees them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import NumericalError, ValidationError

DEFAULT_C = 1.0
SMO_TOL = 1e-3
SMO_MAX_ITER = 1_000_000
TAU = 1e-12

__all__ = [
    "Dataset",
    "Standardizer",
    "BinarySVM",
    "TrainedModel",
    "AccuracyReport",
    "split",
    "stratified_folds",
    "train_svm",
    "evaluate",
    "cross_validate",
    "nearest_centroid",
    "solve_smo",
]


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if x.ndim == 1:
            x = x.reshape(len(y), -1) if len(y) else x.reshape(0, 0)
        if x.ndim != 2 or x.shape[0] != len(y):
            raise ValidationError(f"{x.shape[0] if x.ndim else 0} feature rows for {len(y)} labels")
        if not np.isfinite(x).all():
            raise ValidationError("features contain non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.y)

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.y)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.x[idx], self.y[idx])


# splitting -----------------------------------------------------------------

def _class_members(y: np.ndarray, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.permutation(np.flatnonzero(y == c)) for c in np.unique(y)]


def split(ds: Dataset, train_fraction: float = 0.6, seed=0) -> tuple[Dataset, Dataset]:
    """Stratified shuffle split.

    The overall training size is ``round(train_fraction * N)``, shared out
    over classes by largest remainder so that each class keeps its
    proportion to within one row.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError("train fraction must lie strictly between 0 and 1")
    classes, counts = np.unique(ds.y, return_counts=True)
    if len(classes) and counts.min() < 2:
        raise ValidationError(f"class {classes[counts.argmin()]} has fewer than 2 rows")
    rng = np.random.default_rng(seed)
    members = _class_members(ds.y, rng)
    ideal = train_fraction * counts
    take = np.floor(ideal).astype(np.int64)
    extra = int(round(train_fraction * len(ds))) - int(take.sum())
    if extra > 0:
        # stable sort keeps ties in class order
        order = np.argsort(-(ideal - take), kind="stable")
        take[order[:extra]] += 1
    take = np.clip(take, 1, counts - 1)
    train = np.concatenate([m[:k] for m, k in zip(members, take)]) if len(members) else np.empty(0, int)
    test = np.concatenate([m[k:] for m, k in zip(members, take)]) if len(members) else np.empty(0, int)
    if len(test) == 0:
        raise ValidationError("split leaves an empty test set")
    return ds.subset(np.sort(train)), ds.subset(np.sort(test))


def stratified_folds(y, folds: int, seed=0) -> list[np.ndarray]:
    """Disjoint index sets covering ``range(len(y))``.

    Each class is shuffled and the classes, one after another, are dealt
    round-robin onto the folds; every class is spread evenly (within one
    row) and fold sizes differ by at most one.
    """
    y = np.asarray(y)
    if folds < 2:
        raise ValidationError("need at least 2 folds")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) and counts.min() < folds:
        raise ValidationError(f"class {classes[counts.argmin()]} has fewer than {folds} rows")
    rng = np.random.default_rng(seed)
    order = np.concatenate(_class_members(y, rng)) if len(y) else np.empty(0, dtype=np.int64)
    fold_of = np.arange(len(order)) % folds
    return [np.sort(order[fold_of == f]) for f in range(folds)]


# preprocessing and kernel --------------------------------------------------

@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        # constant features are centred but not scaled
        return cls(mean, np.where(std > 0, std, 1.0))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * a @ b.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def scale_gamma(x: np.ndarray) -> float:
    """``1 / (F * var(x))`` over all entries; 1 if the variance is zero."""
    var = float(x.var()) if x.size else 0.0
    return 1.0 / (x.shape[1] * var) if var > 0 else 1.0


# SMO -----------------------------------------------------------------------

def solve_smo(k: np.ndarray, y: np.ndarray, c: float = DEFAULT_C, tol: float = SMO_TOL,
              max_iter: int = SMO_MAX_ITER) -> tuple[np.ndarray, float, int]:
    """Dual soft-margin SVM: minimise ``a'Qa/2 - sum(a)`` over the box and ``y'a = 0``.

    Parameters
    ----------
    k : (n, n) kernel matrix
    y : labels in ``{-1, +1}``

    Returns
    -------
    alpha, rho, iterations
        The decision function is ``sum_i alpha_i y_i k(x_i, x) - rho``.

    Raises
    ------
    NumericalError
        If the maximal KKT violation is still above ``tol`` after
        ``max_iter`` iterations.
    """
    y = y.astype(np.float64)
    n = len(y)
    q = (y[:, None] * y[None, :]) * k
    qd = np.diag(q).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)
    for it in range(max_iter):
        ygrad = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(ygrad[up])])
        gmax = ygrad[i]
        gmin = ygrad[low].min()
        if gmax - gmin < tol:
            break
        cand = low & (ygrad < gmax)
        b = gmax - ygrad[cand]
        a = qd[i] + qd[cand] - 2.0 * y[i] * y[cand] * q[i, cand]
        a = np.where(a > 0, a, TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])

        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = qd[i] + qd[j] + 2.0 * q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > c:
                    ni, nj = c, c - diff
            elif nj > c:
                nj, ni = c, c + diff
        else:
            quad = qd[i] + qd[j] - 2.0 * q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > c:
                if ni > c:
                    ni, nj = c, total - c
            elif nj < 0:
                nj, ni = 0.0, total
            if total > c:
                if nj > c:
                    nj, ni = c, total - c
            elif ni < 0:
                ni, nj = 0.0, total
        grad += q[:, i] * (ni - ai) + q[:, j] * (nj - aj)
        alpha[i], alpha[j] = ni, nj
    else:
        raise NumericalError(f"SMO did not reach tolerance {tol} in {max_iter} iterations")
    return alpha, _rho(alpha, grad, y, c), it


def _rho(alpha, grad, y, c) -> float:
    yg = y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        return float(yg[free].mean())
    # bounds from the two KKT index sets
    at_upper = alpha >= c
    at_lower = alpha <= 0
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yg[ub_mask].min() if ub_mask.any() else np.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
    if np.isinf(ub) or np.isinf(lb):
        return float(ub if np.isfinite(ub) else lb if np.isfinite(lb) else 0.0)
    return float((ub + lb) / 2.0)


@dataclass(frozen=True)
class BinarySVM:
    """Machine separating ``positive`` (decision > 0) from ``negative``."""

    positive: int
    negative: int
    support: np.ndarray        # indices into the training rows
    dual_coef: np.ndarray      # alpha_i * y_i for the support vectors
    rho: float
    iterations: int = 0


@dataclass(frozen=True)
class TrainedModel:
    classes: np.ndarray
    machines: tuple
    support_x: np.ndarray      # standardised training rows
    gamma: float
    c: float
    standardizer: Standardizer

    @property
    def n_features(self) -> int:
        return len(self.standardizer.mean)

    def decision_values(self, x: np.ndarray) -> np.ndarray:
        """One column per pairwise machine."""
        x = self._check(x)
        z = self.standardizer.transform(x)
        kz = rbf_kernel(z, self.support_x, self.gamma)
        cols = [kz[:, m.support] @ m.dual_coef - m.rho for m in self.machines]
        return np.column_stack(cols) if cols else np.empty((len(x), 0))

    def predict(self, x) -> np.ndarray:
        """Majority vote of the pairwise machines; ties go to the lowest class id."""
        x = self._check(x)
        dv = self.decision_values(x)
        pos = {int(c): i for i, c in enumerate(self.classes)}
        votes = np.zeros((len(x), len(self.classes)), dtype=np.int64)
        rows = np.arange(len(x))
        for col, m in enumerate(self.machines):
            winner = np.where(dv[:, col] > 0, pos[m.positive], pos[m.negative])
            np.add.at(votes, (rows, winner), 1)
        return self.classes[np.argmax(votes, axis=1)]

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ValidationError(
                f"model expects {self.n_features} features, got shape {x.shape}")
        return x


def train_svm(train: Dataset, c: float = DEFAULT_C, gamma: str | float = "scale",
              tol: float = SMO_TOL, max_iter: int = SMO_MAX_ITER) -> TrainedModel:
    """One-versus-one RBF SVM on standardised features.

    ``gamma="scale"`` uses ``1 / (F * var)`` of the standardised
    training matrix.
    """
    classes = train.classes
    if len(classes) < 2:
        raise ValidationError("training data needs at least two classes")
    if c <= 0:
        raise ValidationError("C must be positive")
    std = Standardizer.fit(train.x)
    z = std.transform(train.x)
    if gamma == "scale":
        g = scale_gamma(z)
    else:
        g = float(gamma)
        if g <= 0:
            raise ValidationError("gamma must be positive")
    kernel = rbf_kernel(z, z, g)
    machines = []
    for a, b in combinations(classes.tolist(), 2):
        idx = np.flatnonzero((train.y == a) | (train.y == b))
        yy = np.where(train.y[idx] == a, 1, -1)
        try:
            alpha, rho, it = solve_smo(kernel[np.ix_(idx, idx)], yy, c, tol, max_iter)
        except NumericalError as exc:
            raise NumericalError(f"class pair ({a}, {b}): {exc}") from exc
        sv = alpha > 0
        machines.append(BinarySVM(a, b, idx[sv], alpha[sv] * yy[sv], rho, it))
    return TrainedModel(classes, tuple(machines), z, g, c, std)


# evaluation ----------------------------------------------------------------

@dataclass(frozen=True)
class AccuracyReport:
    accuracy: float
    classes: np.ndarray
    confusion: np.ndarray       # rows: true class, columns: predicted class
    folds: tuple = field(default=())

    @classmethod
    def from_predictions(cls, y_true, y_pred, classes=None) -> "AccuracyReport":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if len(y_true) == 0:
            raise ValidationError("cannot score an empty test set")
        classes = np.unique(np.concatenate([y_true, y_pred])) if classes is None \
            else np.unique(np.concatenate([np.asarray(classes), y_true, y_pred]))
        pos = np.searchsorted(classes, y_true), np.searchsorted(classes, y_pred)
        conf = np.zeros((len(classes), len(classes)), dtype=np.int64)
        np.add.at(conf, pos, 1)
        return cls(float(np.mean(y_true == y_pred)), classes, conf)

    @property
    def per_class(self) -> dict[int, float]:
        tot = self.confusion.sum(axis=1)
        return {int(c): (float(self.confusion[i, i] / tot[i]) if tot[i] else 0.0)
                for i, c in enumerate(self.classes)}

    def to_dict(self) -> dict:
        d = {
            "accuracy": self.accuracy,
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "classes": self.classes.tolist(),
            "confusion": self.confusion.tolist(),
        }
        if self.folds:
            d["folds"] = list(self.folds)
        return d


def evaluate(model: TrainedModel, test: Dataset) -> AccuracyReport:
    if len(test) == 0:
        raise ValidationError("cannot evaluate on an empty test set")
    return AccuracyReport.from_predictions(test.y, model.predict(test.x), model.classes)


@dataclass(frozen=True)
class CrossValidation:
    folds: tuple

    @property
    def mean(self) -> float:
        return float(np.mean(self.folds))

    @property
    def min(self) -> float:
        return float(np.min(self.folds))

    @property
    def max(self) -> float:
        return float(np.max(self.folds))

    def to_dict(self) -> dict:
        return {"folds": list(self.folds), "mean": self.mean, "min": self.min, "max": self.max}


def cross_validate(ds: Dataset, folds: int = 5, seed=0, c: float = DEFAULT_C,
                   gamma: str | float = "scale") -> CrossValidation:
    """Stratified ``folds``-fold cross-validated SVM accuracy."""
    parts = stratified_folds(ds.y, folds, seed)
    scores = []
    everything = np.arange(len(ds))
    for held in parts:
        train = ds.subset(np.setdiff1d(everything, held, assume_unique=True))
        model = train_svm(train, c=c, gamma=gamma)
        scores.append(evaluate(model, ds.subset(held)).accuracy)
    return CrossValidation(tuple(scores))


def nearest_centroid(train: Dataset, test: Dataset) -> AccuracyReport:
    """Nearest class mean in standardised space; ties go to the lowest class id."""
    if len(test) == 0:
        raise ValidationError("cannot evaluate on an empty test set")
    if len(train) == 0:
        raise ValidationError("empty training set")
    if test.n_features != train.n_features:
        raise ValidationError(f"feature width {test.n_features} != {train.n_features}")
    std = Standardizer.fit(train.x)
    z_train, z_test = std.transform(train.x), std.transform(test.x)
    classes = train.classes
    centroids = np.vstack([z_train[train.y == c].mean(axis=0) for c in classes])
    d = ((z_test[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    pred = classes[np.argmin(d, axis=1)]
    return AccuracyReport.from_predictions(test.y, pred, classes)

