"""AHP criterion weighting and TOPSIS ranking."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DegenerateInputError, UnsupportedFormError, ValidationError

# Saaty random consistency indices for n = 1..10
RANDOM_INDEX = {1: 0.0, 2: 0.0, 3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32, 8: 1.41, 9: 1.45, 10: 1.49}

COST = "cost"
BENEFIT = "benefit"


def validate_pairwise(matrix, tol: float = 1e-9) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"pairwise matrix must be square and non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise ValidationError("pairwise matrix entries must be positive and finite")
    if not np.allclose(np.diag(a), 1.0, rtol=0, atol=tol):
        raise ValidationError("pairwise matrix diagonal must be 1")
    bad = np.abs(a * a.T - 1.0) > tol
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise ValidationError(f"pairwise matrix not reciprocal at ({i + 1}, {j + 1}): "
                              f"{a[i, j]} * {a[j, i]} != 1")
    return a


class AHPWeights(NamedTuple):
    weights: np.ndarray
    lambda_max: float


def ahp_weights(matrix, tol: float = 1e-12, max_iter: int = 10_000) -> AHPWeights:
    """Principal eigenvector by power iteration, normalized to sum 1.

    Iteration starts from the uniform vector and stops once successive
    iterates differ by less than ``tol`` in max norm. ``lambda_max`` is the
    Rayleigh quotient at the final iterate.
    """
    a = validate_pairwise(matrix)
    n = a.shape[0]
    w = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = a @ w
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - w)) < tol:
            w = nxt
            break
        w = nxt
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps",
                               last=w, iterations=max_iter)
    lam = float(w @ (a @ w) / (w @ w))
    return AHPWeights(w, lam)


def ahp_weights_geometric(matrix) -> np.ndarray:
    """Row geometric-mean approximation; exact for consistent matrices."""
    a = validate_pairwise(matrix)
    g = np.exp(np.log(a).mean(axis=1))
    return g / g.sum()


def consistency_ratio(matrix) -> tuple:
    """Return ``(CI, CR)``; orders above 10 have no tabulated random index."""
    a = validate_pairwise(matrix)
    n = a.shape[0]
    if n > 10:
        raise UnsupportedFormError(f"consistency ratio supports n <= 10, got n = {n}")
    if n < 2:
        return 0.0, 0.0
    ci = (ahp_weights(a).lambda_max - n) / (n - 1)
    ri = RANDOM_INDEX[n]
    return ci, (ci / ri if ri else 0.0)


def normalize_weights(weights, n: Optional[int] = None) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or (n is not None and w.size != n):
        raise ValidationError(f"expected {n} weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
        raise ValidationError("weights must be finite, non-negative and not all zero")
    return w / w.sum()


@dataclass
class DecisionMatrix:
    values: np.ndarray
    directions: tuple
    labels: tuple
    criteria: tuple = ()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValidationError("decision matrix must be two-dimensional")
        m, n = self.values.shape
        self.directions = tuple(self.directions)
        self.labels = tuple(self.labels) if self.labels else tuple(f"A{i + 1}" for i in range(m))
        self.criteria = tuple(self.criteria) if self.criteria else tuple(f"C{j + 1}" for j in range(n))
        if len(self.directions) != n or len(self.criteria) != n or len(self.labels) != m:
            raise ValidationError("labels, criteria and directions must match the matrix shape")
        for d in self.directions:
            if d not in (COST, BENEFIT):
                raise ValidationError(f"criterion direction must be 'cost' or 'benefit', got {d!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("decision matrix values must be finite")


@dataclass
class Ranking:
    labels: tuple
    closeness: np.ndarray
    order: list                # indices, best first
    d_plus: np.ndarray
    d_minus: np.ndarray
    tie_notes: list = field(default_factory=list)

    @property
    def ordered_labels(self) -> list:
        return [self.labels[i] for i in self.order]

    def score(self, label) -> float:
        return float(self.closeness[self.labels.index(label)])


def _check_columns(dm: DecisionMatrix):
    m = dm.values.shape[0]
    if m < 2:
        raise DegenerateInputError(f"TOPSIS needs at least 2 alternatives, got {m}")
    norms = np.sqrt((dm.values ** 2).sum(axis=0))
    zero = [dm.criteria[j] for j in np.flatnonzero(norms == 0)]
    if zero:
        raise ValidationError(
            f"criterion column(s) {', '.join(zero)} are all zero and cannot be normalized; "
            "drop them from the criteria list"
        )
    return norms


def topsis(dm: DecisionMatrix, weights, tie_tol: float = 1e-12) -> Ranking:
    """Rank alternatives by relative closeness to the ideal point."""
    norms = _check_columns(dm)
    w = normalize_weights(weights, dm.values.shape[1])
    v = dm.values / norms * w
    benefit = np.array([d == BENEFIT for d in dm.directions])
    ideal = np.where(benefit, v.max(axis=0), v.min(axis=0))
    anti = np.where(benefit, v.min(axis=0), v.max(axis=0))
    d_plus = np.sqrt(((v - ideal) ** 2).sum(axis=1))
    d_minus = np.sqrt(((v - anti) ** 2).sum(axis=1))
    denom = d_plus + d_minus
    closeness = np.divide(d_minus, denom, out=np.zeros_like(denom), where=denom > 0)

    order = sorted(range(len(closeness)), key=lambda i: -closeness[i])
    notes = []
    if np.all(denom == 0):
        notes.append("total tie: all alternatives coincide with both ideal points")
    else:
        groups = [[order[0]]]
        for prev, i in zip(order, order[1:]):
            if closeness[prev] - closeness[i] <= tie_tol:
                groups[-1].append(i)
            else:
                groups.append([i])
        notes += ["tie: " + ", ".join(dm.labels[i] for i in g) for g in groups if len(g) > 1]
    return Ranking(dm.labels, closeness, order, d_plus, d_minus, notes)


def topsis_batch(dm: DecisionMatrix, weight_rows) -> np.ndarray:
    """Closeness for many weight vectors at once, shape ``(k, m)``."""
    norms = _check_columns(dm)
    W = np.asarray(weight_rows, dtype=float)
    W = W / W.sum(axis=1, keepdims=True)
    v = (dm.values / norms)[None, :, :] * W[:, None, :]
    benefit = np.array([d == BENEFIT for d in dm.directions])
    ideal = np.where(benefit, v.max(axis=1), v.min(axis=1))[:, None, :]
    anti = np.where(benefit, v.min(axis=1), v.max(axis=1))[:, None, :]
    dp = np.sqrt(((v - ideal) ** 2).sum(axis=2))
    dm_ = np.sqrt(((v - anti) ** 2).sum(axis=2))
    den = dp + dm_
    return np.divide(dm_, den, out=np.zeros_like(den), where=den > 0)


def simplex_grid(n: int, steps: int) -> np.ndarray:
    """All weight vectors with entries in multiples of ``1/steps`` summing to 1."""
    rows = [c for c in itertools.product(range(steps + 1), repeat=n - 1) if sum(c) <= steps]
    grid = np.array([list(c) + [steps - sum(c)] for c in rows], dtype=float)
    return grid / steps


@dataclass
class WeightSearch:
    weights: Optional[np.ndarray]
    margin: float              # smallest closeness gap between consecutive ranks
    matches: int
    evaluated: int


def search_weight_profile(matrices: Sequence[DecisionMatrix], target: Sequence, steps: int = 20) -> WeightSearch:
    """Find the grid weight vector reproducing ``target`` order on every matrix.

    Among matching vectors the one with the largest worst-case gap between
    consecutive closeness values wins; earlier grid points break ties.
    """
    grid = simplex_grid(matrices[0].values.shape[1], steps)
    margin = np.full(len(grid), np.inf)
    for dm in matrices:
        idx = np.array([dm.labels.index(t) for t in target])
        c = topsis_batch(dm, grid)
        ordered = c[:, idx]
        gaps = ordered[:, :-1] - ordered[:, 1:]
        margin = np.minimum(margin, gaps.min(axis=1))
    ok = margin > 0
    if not ok.any():
        return WeightSearch(None, float("nan"), 0, len(grid))
    best = int(np.argmax(np.where(ok, margin, -np.inf)))
    return WeightSearch(grid[best], float(margin[best]), int(ok.sum()), len(grid))
