"""
Self-similar measures as weighted point clouds.

Measurable sets are finite unions of level-k cylinder boxes. A sample lying on
a face shared by several cells belongs to the lowest-index cell.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from ifs_experiment_utils.errors import (
    EmptyMeasure,
    IfsExperimentError,
    InvalidWeights,
    LetterOutOfRange,
)
from ifs_experiment_utils.ifs_core import (
    TAU_GEO,
    Box,
    IfsSystem,
    all_words,
    cylinder_boxes,
)

DEFAULT_BURN_IN = 100
TAU_SEP_FACTOR = 5.0


@dataclass(frozen=True)
class SelfSimilarWeights:
    p: Tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        object.__setattr__(self, "p", p)
        if not all(np.isfinite(v) and v > 0 for v in p):
            raise InvalidWeights(f"weights must all be > 0, got {list(p)}")
        if abs(sum(p) - 1) > 1e-12:
            raise InvalidWeights(f"weights must sum to 1, got sum {sum(p)}")

    @classmethod
    def hutchinson(cls, n):
        return cls(tuple([1 / n] * n))

    @property
    def n(self):
        return len(self.p)

    @property
    def is_hutchinson(self):
        return all(abs(v - 1 / self.n) <= 1e-12 for v in self.p)

    def as_array(self):
        return np.array(self.p)


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    points: np.ndarray
    seed: Optional[int] = None
    burn_in: int = 0
    weights: Optional[SelfSimilarWeights] = None

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.points.shape[1]

    def require_samples(self):
        if self.size == 0:
            raise EmptyMeasure("the empirical measure carries no samples")

    def mass(self, box: Box):
        self.require_samples()
        return float(np.count_nonzero(box.contains(self.points))) / self.size

    def meta(self):
        return {
            "seed": self.seed,
            "burn_in": self.burn_in,
            "weights": list(self.weights.p) if self.weights is not None else None,
            "size": self.size,
        }

    def to_csv(self, path):
        columns = [f"x_{j}" for j in range(self.dimension)]
        pd.DataFrame(self.points, columns=columns).to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path, weights=None):
        df = pd.read_csv(path)
        return cls(df.to_numpy(dtype=float), weights=weights)


def _require_hutchinson(m: EmpiricalMeasure, ifs: IfsSystem):
    if m.weights is not None and not m.weights.is_hutchinson:
        raise InvalidWeights(
            f"this check needs Hutchinson weights 1/{ifs.n}, got {list(m.weights.p)}"
        )


def _check_branch(ifs: IfsSystem, i):
    if not 1 <= i <= ifs.n:
        raise LetterOutOfRange(f"branch {i} outside 1..{ifs.n}")


def chaos_game(
    ifs: IfsSystem,
    weights: SelfSimilarWeights,
    N: int,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
) -> EmpiricalMeasure:
    """
    Random iteration x_{t+1} = gamma_{i_t}(x_t), i_t drawn i.i.d. from the weights.
    The first burn_in points are dropped; the result only depends on
    (seed, N, burn_in).
    """
    if weights.n != ifs.n:
        raise InvalidWeights(f"got {weights.n} weights for {ifs.n} maps")
    if N < 1 or burn_in < 0:
        raise IfsExperimentError(f"need N >= 1 and burn_in >= 0, got {N}, {burn_in}")
    rng = np.random.default_rng(seed)
    choices = rng.choice(ifs.n, size=burn_in + N, p=weights.as_array())
    linear_parts = [m.linear_part for m in ifs.maps]
    offsets = [m.offset for m in ifs.maps]
    x = ifs.ambient_box.center
    points = np.empty((N, ifs.dimension))
    for t, i in enumerate(choices):
        x = linear_parts[i] @ x + offsets[i]
        if t >= burn_in:
            points[t - burn_in] = x
    return EmpiricalMeasure(points, seed=seed, burn_in=burn_in, weights=weights)


@dataclass(frozen=True, eq=False)
class CellPartition:
    level: int
    n: int
    words: Tuple[Tuple[int, ...], ...]
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def build(cls, ifs: IfsSystem, k: int):
        if k < 0:
            raise IfsExperimentError(f"partition level must be >= 0, got {k}")
        lo, hi = cylinder_boxes(ifs, k)
        return cls(k, ifs.n, tuple(all_words(ifs.n, k)), lo, hi)

    def __len__(self):
        return len(self.words)

    def box(self, index) -> Box:
        return Box(self.lo[index], self.hi[index])

    def assign(self, points):
        """Cell index per point, lowest index on shared faces, -1 outside all cells."""
        points = np.asarray(points, dtype=float)
        labels = np.full(points.shape[0], -1, dtype=int)
        for index in range(len(self)):
            inside = np.all(
                (points >= self.lo[index] - TAU_GEO)
                & (points <= self.hi[index] + TAU_GEO),
                axis=1,
            )
            labels[inside & (labels < 0)] = index
        return labels

    def cell_masses(self, m: EmpiricalMeasure):
        m.require_samples()
        labels = self.assign(m.points)
        counts = np.bincount(labels[labels >= 0], minlength=len(self))
        return counts / m.size

    def interiors_disjoint(self):
        for a in range(len(self)):
            for b in range(a + 1, len(self)):
                overlap = np.minimum(self.hi[a], self.hi[b]) - np.maximum(
                    self.lo[a], self.lo[b]
                )
                if np.all(overlap > TAU_GEO):
                    return False
        return True


def pushforward_mass(m: EmpiricalMeasure, ifs: IfsSystem, i, box: Box):
    """(gamma_i* m)(E) = m(gamma_i^{-1}(E)) with exact affine inversion of E."""
    return m.mass(ifs.maps[i - 1].preimage_box(box))


def image_mass(m: EmpiricalMeasure, ifs: IfsSystem, i, box: Box):
    """(m o gamma_i)(E) = m(gamma_i(E))."""
    return m.mass(ifs.maps[i - 1].image_box(box))


def self_similarity_residual(
    m: EmpiricalMeasure,
    ifs: IfsSystem,
    w: SelfSimilarWeights,
    part: CellPartition,
):
    """max over cells E of |m(E) - sum_i p_i m(gamma_i^{-1}(E))|."""
    m.require_samples()
    if part.level < 1:
        raise IfsExperimentError(
            "the fixed-point residual needs a partition level >= 1"
        )
    if w.n != ifs.n:
        raise InvalidWeights(f"got {w.n} weights for {ifs.n} maps")
    masses = part.cell_masses(m)
    residual = 0.0
    for index in range(len(part)):
        cell = part.box(index)
        rhs = sum(
            p * pushforward_mass(m, ifs, i, cell) for i, p in enumerate(w.p, start=1)
        )
        residual = max(residual, abs(masses[index] - rhs))
    return residual


def image_measure_residual(
    m: EmpiricalMeasure, ifs: IfsSystem, i, part: CellPartition
):
    """max over cells E of |m(gamma_i(E)) - m(E)/n|."""
    m.require_samples()
    _check_branch(ifs, i)
    _require_hutchinson(m, ifs)
    masses = part.cell_masses(m)
    residual = 0.0
    for index in range(len(part)):
        lhs = image_mass(m, ifs, i, part.box(index))
        residual = max(residual, abs(lhs - masses[index] / ifs.n))
    return residual


@dataclass(frozen=True, eq=False)
class RadonNikodymEstimate:
    branch: int
    words: Tuple[Tuple[int, ...], ...]
    values: np.ndarray
    flagged: np.ndarray

    def to_frame(self):
        return pd.DataFrame(
            {
                "word": ["-".join(map(str, w)) for w in self.words],
                "estimate": self.values,
                "flagged": self.flagged,
            }
        )


def rn_derivative_estimate(
    m: EmpiricalMeasure, ifs: IfsSystem, i, part: CellPartition
) -> RadonNikodymEstimate:
    """
    Cell averages m(gamma_i^{-1}(E)) / m(E) of d(gamma_i* mu)/d mu. Cells with
    m(E) = 0 are flagged and carry NaN.
    """
    m.require_samples()
    _check_branch(ifs, i)
    _require_hutchinson(m, ifs)
    masses = part.cell_masses(m)
    values = np.full(len(part), np.nan)
    flagged = masses == 0
    for index in range(len(part)):
        if flagged[index]:
            continue
        values[index] = pushforward_mass(m, ifs, i, part.box(index)) / masses[index]
    return RadonNikodymEstimate(i, part.words, values, flagged)


def rn_branch_sum(m: EmpiricalMeasure, ifs: IfsSystem, part: CellPartition):
    """Per-cell sum over branches of the derivative estimates; n in the limit."""
    estimates = [rn_derivative_estimate(m, ifs, i, part) for i in range(1, ifs.n + 1)]
    return np.sum([e.values for e in estimates], axis=0)


def cylinder_mass_deviation(m: EmpiricalMeasure, ifs: IfsSystem, part: CellPartition):
    """max over level-k cells of |m(E) - n^{-k}|; Hutchinson cylinders carry n^{-k}."""
    masses = part.cell_masses(m)
    return float(np.max(np.abs(masses - float(ifs.n) ** -part.level)))


def pairwise_overlaps(ifs: IfsSystem, m: EmpiricalMeasure):
    """Empirical mass of gamma_i(box) cap gamma_j(box) for every pair i < j."""
    m.require_samples()
    _require_hutchinson(m, ifs)
    boxes = ifs.branch_boxes
    overlaps = []
    for a in range(ifs.n):
        for b in range(a + 1, ifs.n):
            intersection = boxes[a].intersect(boxes[b])
            mass = 0.0 if intersection is None else m.mass(intersection)
            overlaps.append({"i": a + 1, "j": b + 1, "overlap": mass})
    return overlaps


def separation_overlap(ifs: IfsSystem, m: EmpiricalMeasure):
    """Largest pairwise overlap mass over i != j."""
    return max(entry["overlap"] for entry in pairwise_overlaps(ifs, m))


def separation_tolerance(N):
    return TAU_SEP_FACTOR / np.sqrt(N)


def is_separated(overlap, N):
    return overlap <= separation_tolerance(N)
