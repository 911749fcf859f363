"""
Cuntz-word approximants A_k = sum_{|w| = k} a(gamma_w(x0)) S_w S_w* of a
multiplication operator M_a, and three measures of ||M_a - A_k||:

  error_sup        sampled sup of |a o gamma_w - c_w|, the norm itself in the limit
  matrix_error     norm of the finite diagonal difference on H_m, a lower bound
  certified_bound  L c2^k diam(box) or modulus(c2^k diam(box)), an upper bound
"""
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import pandas as pd

from ifs_experiment_utils.errors import (
    IfsExperimentError,
    LevelUnderflow,
    MissingContinuityData,
)
from ifs_experiment_utils.ifs_core import (
    Box,
    IfsSystem,
    Word,
    all_words,
    check_point,
    cylinder_diameter_bound,
    word_image,
    word_label,
    word_points,
    word_rank,
)
from ifs_experiment_utils.opspace import (
    COLLOCATION,
    DEFAULT_SIZE_BUDGET,
    LevelOperator,
    check_level,
    diagonal_operator,
    evaluate_function,
    mult_operator,
)
from ifs_experiment_utils.word_algebra import CuntzPolynomial, approximant_polynomial

DEFAULT_SAMPLES_PER_CELL = 256
DEFAULT_LEVEL_OFFSET = 4
LIPSCHITZ_SLACK = 1e-6

REPORT_COLUMNS = ["k", "error_sup", "matrix_error", "certified_bound", "decay_ratio"]


@dataclass(frozen=True)
class ContinuousFunctionSpec:
    """
    A continuous a on the ambient box. `evaluator` maps a (N, d) batch of
    points to N values.
    """

    evaluator: Callable
    lipschitz: Optional[float] = None
    modulus: Optional[Callable[[float], float]] = None
    name: str = "a"

    @classmethod
    def constant(cls, value, name=None):
        return cls(lambda points: value, lipschitz=0.0, name=name or str(value))

    def __call__(self, points):
        return evaluate_function(self.evaluator, points)

    def max_difference_quotient(self, box: Box, samples=1000, seed=0):
        rng = np.random.default_rng(seed)
        x = rng.uniform(box.lo, box.hi, size=(samples, box.dimension))
        y = rng.uniform(box.lo, box.hi, size=(samples, box.dimension))
        distance = np.linalg.norm(x - y, axis=1)
        keep = distance > 0
        quotients = np.abs(self(x) - self(y))[keep] / distance[keep]
        return float(np.max(quotients, initial=0.0))

    def check_lipschitz(self, box: Box, samples=1000, seed=0):
        if self.lipschitz is None:
            raise MissingContinuityData(
                f"function '{self.name}' has no Lipschitz constant"
            )
        quotient = self.max_difference_quotient(box, samples, seed)
        return quotient <= self.lipschitz * (1 + LIPSCHITZ_SLACK)


@dataclass(frozen=True, eq=False)
class CuntzApproximant:
    n: int
    level: int
    base_point: np.ndarray
    values: np.ndarray

    @property
    def words(self) -> Tuple[Word, ...]:
        return tuple(all_words(self.n, self.level))

    @property
    def coeffs(self):
        return dict(zip(self.words, self.values))

    def coefficient(self, w):
        return self.values[word_rank(tuple(w), self.n)]

    def as_polynomial(self) -> CuntzPolynomial:
        return approximant_polynomial(self.n, self.words, self.values)

    def as_operator(self, m, budget=DEFAULT_SIZE_BUDGET) -> LevelOperator:
        """A_k on H_m: S_w S_w* keeps exactly the level-m cells extending w."""
        if m < self.level:
            raise LevelUnderflow(
                f"the level {self.level} approximant acts on H_m for m >= {self.level}, got {m}"
            )
        check_level(self.n, m, budget)
        values = np.repeat(self.values, self.n ** (m - self.level))
        return diagonal_operator(self.n, m, values)

    def to_frame(self):
        return pd.DataFrame(
            {
                "word": [word_label(w) for w in self.words],
                "coefficient_re": self.values.real,
                "coefficient_im": self.values.imag,
            }
        )


def build_approximant(
    ifs: IfsSystem,
    a: ContinuousFunctionSpec,
    k,
    x0=None,
    budget=DEFAULT_SIZE_BUDGET,
) -> CuntzApproximant:
    check_level(ifs.n, k, budget)
    x0 = check_point(ifs, ifs.ambient_box.center if x0 is None else x0)
    values = a(word_points(ifs, k, x0))
    values.setflags(write=False)
    return CuntzApproximant(ifs.n, k, x0, values)


def sup_sample_points(box: Box, samples_per_cell, seed):
    """Box vertices followed by seeded uniform points; shared by every cell."""
    rng = np.random.default_rng(seed)
    uniform = rng.uniform(box.lo, box.hi, size=(samples_per_cell, box.dimension))
    return np.concatenate([box.vertices(), uniform])


def error_sup(
    ifs: IfsSystem,
    a: ContinuousFunctionSpec,
    appr: CuntzApproximant,
    samples_per_cell=DEFAULT_SAMPLES_PER_CELL,
    seed=0,
):
    points = sup_sample_points(ifs.ambient_box, samples_per_cell, seed)
    error = 0.0
    for w, c in zip(appr.words, appr.values):
        error = max(error, float(np.max(np.abs(a(word_image(ifs, w, points)) - c))))
    return error


def certified_bound(a: ContinuousFunctionSpec, ifs: IfsSystem, k):
    radius = cylinder_diameter_bound(ifs, k)
    if a.lipschitz is not None:
        return a.lipschitz * radius
    if a.modulus is not None:
        return float(a.modulus(radius))
    raise MissingContinuityData(
        f"function '{a.name}' has neither a Lipschitz constant nor a modulus of continuity"
    )


def has_continuity_data(a: ContinuousFunctionSpec):
    return a.lipschitz is not None or a.modulus is not None


def matrix_error(
    ifs: IfsSystem,
    a: ContinuousFunctionSpec,
    appr: CuntzApproximant,
    m,
    mode=COLLOCATION,
    x0=None,
    mc_samples=10000,
    seed=0,
    budget=DEFAULT_SIZE_BUDGET,
):
    """||M_a - A_k|| on H_m; collocation defaults to the approximant's own x0."""
    if m < appr.level:
        raise LevelUnderflow(
            f"matrix level {m} is below the approximant level {appr.level}"
        )
    if x0 is None:
        x0 = appr.base_point
    mult = mult_operator(
        ifs, a, m, mode=mode, mc_samples=mc_samples, x0=x0, seed=seed, budget=budget
    )
    return (mult - appr.as_operator(m, budget)).norm()


def matrix_level(n, k, offset=DEFAULT_LEVEL_OFFSET, budget=DEFAULT_SIZE_BUDGET):
    """k + offset, lowered to the largest level that fits the budget."""
    m = k + offset
    while m > k and n**m > budget:
        m -= 1
    return m


def sampling_tolerance(a: ContinuousFunctionSpec, ifs: IfsSystem, k, samples_per_cell):
    """Resolution of error_sup, L c2^k diam / sqrt(samples); 0 without data."""
    if not has_continuity_data(a):
        return 0.0
    return certified_bound(a, ifs, k) / np.sqrt(samples_per_cell)


def convergence_report(
    ifs: IfsSystem,
    a: ContinuousFunctionSpec,
    k_min,
    k_max,
    x0=None,
    samples_per_cell=DEFAULT_SAMPLES_PER_CELL,
    seed=0,
    mode=COLLOCATION,
    level_offset=DEFAULT_LEVEL_OFFSET,
    budget=DEFAULT_SIZE_BUDGET,
) -> pd.DataFrame:
    """
    One row per k in k_min..k_max. certified_bound is NaN without continuity
    data; decay_ratio is NaN on the first row and after a zero error.
    """
    if not 0 <= k_min <= k_max:
        raise IfsExperimentError(f"need 0 <= k_min <= k_max, got {k_min}..{k_max}")
    check_level(ifs.n, k_max, budget)
    rows = []
    previous = None
    for k in range(k_min, k_max + 1):
        appr = build_approximant(ifs, a, k, x0, budget)
        sup = error_sup(ifs, a, appr, samples_per_cell, seed)
        m = matrix_level(ifs.n, k, level_offset, budget)
        bound = certified_bound(a, ifs, k) if has_continuity_data(a) else np.nan
        ratio = sup / previous if previous else np.nan
        rows.append(
            {
                "k": k,
                "error_sup": sup,
                "matrix_error": matrix_error(
                    ifs, a, appr, m, mode, seed=seed, budget=budget
                ),
                "certified_bound": bound,
                "decay_ratio": ratio,
            }
        )
        previous = sup
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_convergence_csv(report: pd.DataFrame, path):
    report.to_csv(path, index=False)
