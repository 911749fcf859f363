"""
Finite-level model of L^2(K, mu^H) in cylinder coordinates.

H_k is spanned by e_w = n^{k/2} 1_{[w]} for the n^k words of length k,
indexed lexicographically. The isometries V_i move H_k into H_{k+1}, so the
Cuntz relations hold exactly instead of up to truncation effects.
"""
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.linalg import svds

from ifs_experiment_utils.errors import (
    IfsExperimentError,
    LetterOutOfRange,
    LevelOverflow,
    LevelUnderflow,
)
from ifs_experiment_utils.ifs_core import (
    IfsSystem,
    all_words,
    check_word,
    word_image,
    word_label,
    word_points,
    word_rank,
)
from ifs_experiment_utils.measure import SelfSimilarWeights, chaos_game

DEFAULT_SIZE_BUDGET = 2**24
DENSE_NORM_LIMIT = 4096

COLLOCATION = "collocation"
AVERAGE = "average"
MODES = (COLLOCATION, AVERAGE)


def check_level(n, k, budget=DEFAULT_SIZE_BUDGET):
    if k < 0:
        raise LevelUnderflow(f"level must be >= 0, got {k}")
    if n**k > budget:
        raise LevelOverflow(
            f"level {k} needs {n}^{k} = {n ** k} coefficients, budget is {budget}"
        )
    return n**k


def _check_branch(n, i):
    if not 1 <= i <= n:
        raise LetterOutOfRange(f"branch {i} outside 1..{n}")


@dataclass(frozen=True, eq=False)
class LeveledVector:
    n: int
    level: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex).ravel()
        if coeffs.shape[0] != self.n**self.level:
            raise IfsExperimentError(
                f"level {self.level} vector needs {self.n ** self.level} coefficients, got {coeffs.shape[0]}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def basis(cls, n, w):
        word = check_word(n, w)
        coeffs = np.zeros(n ** len(word), dtype=complex)
        coeffs[word_rank(word, n)] = 1
        return cls(n, len(word), coeffs)

    @classmethod
    def zeros(cls, n, level):
        return cls(n, level, np.zeros(n**level, dtype=complex))

    @classmethod
    def constant(cls, n, value=1.0, level=0):
        # <e_w, c> = c n^{k/2} mu([w]) = c n^{-k/2}
        coeffs = np.full(n**level, value * n ** (-level / 2), dtype=complex)
        return cls(n, level, coeffs)

    @classmethod
    def random(cls, n, level, rng):
        size = n**level
        return cls(n, level, rng.normal(size=size) + 1j * rng.normal(size=size))

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def _aligned(self, other):
        if self.n != other.n:
            raise IfsExperimentError(f"vectors over n={self.n} and n={other.n}")
        level = max(self.level, other.level)
        return refine(self, level - self.level), refine(other, level - other.level)

    def __add__(self, other):
        a, b = self._aligned(other)
        return LeveledVector(self.n, a.level, a.coeffs + b.coeffs)

    def __sub__(self, other):
        a, b = self._aligned(other)
        return LeveledVector(self.n, a.level, a.coeffs - b.coeffs)

    def __mul__(self, scalar):
        return LeveledVector(self.n, self.level, self.coeffs * scalar)

    __rmul__ = __mul__

    def allclose(self, other, atol=1e-12):
        a, b = self._aligned(other)
        return bool(np.allclose(a.coeffs, b.coeffs, rtol=0, atol=atol))

    def to_frame(self):
        return pd.DataFrame(
            {
                "word": [word_label(w) for w in all_words(self.n, self.level)],
                "coefficient_re": self.coeffs.real,
                "coefficient_im": self.coeffs.imag,
            }
        )

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def refine(v: LeveledVector, steps, budget=DEFAULT_SIZE_BUDGET) -> LeveledVector:
    """The same L^2 element at level k + steps; each child gets c n^{-1/2} per step."""
    if steps < 0:
        raise IfsExperimentError(f"refinement steps must be >= 0, got {steps}")
    if steps == 0:
        return v
    check_level(v.n, v.level + steps, budget)
    scale = v.n ** (-steps / 2)
    return LeveledVector(
        v.n, v.level + steps, np.repeat(v.coeffs, v.n**steps) * scale
    )


def inner(a: LeveledVector, b: LeveledVector, budget=DEFAULT_SIZE_BUDGET) -> complex:
    if a.n != b.n:
        raise IfsExperimentError(f"vectors over n={a.n} and n={b.n}")
    level = max(a.level, b.level)
    a = refine(a, level - a.level, budget)
    b = refine(b, level - b.level, budget)
    return complex(np.vdot(a.coeffs, b.coeffs))


def apply_isometry(i, v: LeveledVector, budget=DEFAULT_SIZE_BUDGET) -> LeveledVector:
    """V_i e_w = e_{iw}: the coefficients are copied into the i-th block of H_{k+1}."""
    _check_branch(v.n, i)
    check_level(v.n, v.level + 1, budget)
    size = v.n**v.level
    coeffs = np.zeros(size * v.n, dtype=complex)
    coeffs[(i - 1) * size : i * size] = v.coeffs
    return LeveledVector(v.n, v.level + 1, coeffs)


def apply_coisometry(
    i, v: LeveledVector, refine_if_needed=True, budget=DEFAULT_SIZE_BUDGET
) -> LeveledVector:
    """V_i* e_{iw} = e_w and V_i* e_{jw} = 0 for j != i."""
    _check_branch(v.n, i)
    if v.level == 0:
        if not refine_if_needed:
            raise LevelUnderflow("V_i* needs a vector of level >= 1")
        v = refine(v, 1, budget)
    size = v.n ** (v.level - 1)
    return LeveledVector(v.n, v.level - 1, v.coeffs[(i - 1) * size : i * size])


def composition_operator(
    i, v: LeveledVector, refine_if_needed=True, budget=DEFAULT_SIZE_BUDGET
) -> LeveledVector:
    """C_{gamma_i} v = sqrt(n) V_i* v."""
    return math.sqrt(v.n) * apply_coisometry(i, v, refine_if_needed, budget)


def operator_norm(matrix):
    """Spectral norm, exact for the structured (zero, diagonal) cases."""
    matrix = sparse.csr_matrix(matrix, copy=True)
    matrix.eliminate_zeros()
    if matrix.nnz == 0:
        return 0.0
    coo = matrix.tocoo()
    if np.all(coo.row == coo.col):
        return float(np.max(np.abs(coo.data)))
    if min(matrix.shape) == 1:
        return float(np.sqrt(np.sum(np.abs(coo.data) ** 2)))
    if max(matrix.shape) <= DENSE_NORM_LIMIT:
        return float(np.linalg.norm(matrix.toarray(), 2))
    return float(svds(matrix, k=1, return_singular_vectors=False)[0])


@dataclass(frozen=True, eq=False)
class LevelOperator:
    n: int
    domain_level: int
    codomain_level: int
    matrix: sparse.csr_matrix

    def __post_init__(self):
        matrix = sparse.csr_matrix(self.matrix, dtype=complex)
        expected = (self.n**self.codomain_level, self.n**self.domain_level)
        if matrix.shape != expected:
            raise IfsExperimentError(
                f"operator H_{self.domain_level} -> H_{self.codomain_level} needs shape {expected}, got {matrix.shape}"
            )
        object.__setattr__(self, "matrix", matrix)

    @property
    def is_diagonal(self):
        if self.domain_level != self.codomain_level:
            return False
        coo = self.matrix.tocoo()
        return bool(np.all(coo.row == coo.col))

    def diagonal(self):
        return self.matrix.diagonal()

    def apply(self, v: LeveledVector) -> LeveledVector:
        if v.n != self.n or v.level != self.domain_level:
            raise IfsExperimentError(
                f"operator acts on H_{self.domain_level}, got a level {v.level} vector"
            )
        return LeveledVector(self.n, self.codomain_level, self.matrix @ v.coeffs)

    def _check_same_levels(self, other):
        if (self.n, self.domain_level, self.codomain_level) != (
            other.n,
            other.domain_level,
            other.codomain_level,
        ):
            raise IfsExperimentError("operators act between different levels")

    def __matmul__(self, other):
        if self.n != other.n or self.domain_level != other.codomain_level:
            raise IfsExperimentError(
                f"cannot compose H_{self.domain_level} -> H_{self.codomain_level} after "
                f"H_{other.domain_level} -> H_{other.codomain_level}"
            )
        return LevelOperator(
            self.n, other.domain_level, self.codomain_level, self.matrix @ other.matrix
        )

    def __add__(self, other):
        self._check_same_levels(other)
        return LevelOperator(
            self.n, self.domain_level, self.codomain_level, self.matrix + other.matrix
        )

    def __sub__(self, other):
        self._check_same_levels(other)
        return LevelOperator(
            self.n, self.domain_level, self.codomain_level, self.matrix - other.matrix
        )

    def __mul__(self, scalar):
        return LevelOperator(
            self.n, self.domain_level, self.codomain_level, self.matrix * scalar
        )

    __rmul__ = __mul__

    def adjoint(self):
        return LevelOperator(
            self.n,
            self.codomain_level,
            self.domain_level,
            self.matrix.conj().transpose(),
        )

    def norm(self):
        return operator_norm(self.matrix)

    def to_dense(self):
        return self.matrix.toarray()

    def to_frame(self):
        dense = self.to_dense()
        if np.all(dense.imag == 0):
            dense = dense.real
        return pd.DataFrame(dense, columns=[str(c) for c in range(dense.shape[1])])

    def to_csv(self, path):
        """Row index = codomain word rank, column = domain word rank."""
        self.to_frame().to_csv(path, index=False)


def identity_operator(n, k, budget=DEFAULT_SIZE_BUDGET) -> LevelOperator:
    size = check_level(n, k, budget)
    return LevelOperator(n, k, k, sparse.identity(size, format="csr"))


def diagonal_operator(n, k, values) -> LevelOperator:
    matrix = sparse.diags(np.asarray(values, dtype=complex), format="csr")
    return LevelOperator(n, k, k, matrix)


def isometry_operator(n, i, k, budget=DEFAULT_SIZE_BUDGET) -> LevelOperator:
    """V_i as a matrix H_k -> H_{k+1}."""
    _check_branch(n, i)
    size = check_level(n, k, budget)
    check_level(n, k + 1, budget)
    cols = np.arange(size)
    rows = (i - 1) * size + cols
    matrix = sparse.csr_matrix(
        (np.ones(size), (rows, cols)), shape=(size * n, size), dtype=complex
    )
    return LevelOperator(n, k, k + 1, matrix)


def coisometry_operator(n, i, k, budget=DEFAULT_SIZE_BUDGET) -> LevelOperator:
    """V_i* as a matrix H_k -> H_{k-1}."""
    if k < 1:
        raise LevelUnderflow("V_i* as an operator needs a domain level >= 1")
    return isometry_operator(n, i, k - 1, budget).adjoint()


def composition_matrix(n, i, k, budget=DEFAULT_SIZE_BUDGET) -> LevelOperator:
    return math.sqrt(n) * coisometry_operator(n, i, k, budget)


def word_operator(n, alpha, beta, k, budget=DEFAULT_SIZE_BUDGET) -> LevelOperator:
    """S_alpha S_beta* on H_k, built from the V_i matrices."""
    alpha = check_word(n, alpha)
    beta = check_word(n, beta)
    if k < len(beta):
        raise LevelUnderflow(
            f"S_beta* with |beta| = {len(beta)} needs level >= {len(beta)}"
        )
    result = identity_operator(n, k, budget)
    level = k
    for letter in beta:
        result = coisometry_operator(n, letter, level, budget) @ result
        level -= 1
    for letter in reversed(alpha):
        result = isometry_operator(n, letter, level, budget) @ result
        level += 1
    return result


def isometry_defect(n, k, budget=DEFAULT_SIZE_BUDGET):
    """max_i ||V_i* V_i - I|| on H_k."""
    identity = identity_operator(n, k, budget)
    return max(
        (
            coisometry_operator(n, i, k + 1, budget)
            @ isometry_operator(n, i, k, budget)
            - identity
        ).norm()
        for i in range(1, n + 1)
    )


def range_sum_defect(n, k, budget=DEFAULT_SIZE_BUDGET):
    """||sum_j V_j V_j* - I|| on H_k."""
    if k < 1:
        raise LevelUnderflow("sum_j V_j V_j* on H_k needs k >= 1")
    total = -1 * identity_operator(n, k, budget)
    for j in range(1, n + 1):
        total = total + isometry_operator(n, j, k - 1, budget) @ coisometry_operator(
            n, j, k, budget
        )
    return total.norm()


def cuntz_relation_defects(n, k, budget=DEFAULT_SIZE_BUDGET):
    if n < 2:
        raise IfsExperimentError(f"the Cuntz relations need n >= 2, got {n}")
    return isometry_defect(n, k, budget), range_sum_defect(n, k, budget)


def evaluate_function(a, points):
    """Evaluates a on a batch of points as a complex vector, broadcasting constants."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(a(points), dtype=complex)
    return np.broadcast_to(values, (points.shape[0],)).copy()


def hutchinson_sample(ifs: IfsSystem, mc_samples, seed):
    weights = SelfSimilarWeights.hutchinson(ifs.n)
    return chaos_game(ifs, weights, mc_samples, seed=seed).points


def cell_values(
    ifs: IfsSystem,
    a,
    k,
    mode=COLLOCATION,
    x0=None,
    mc_samples=10000,
    seed=0,
    samples=None,
    budget=DEFAULT_SIZE_BUDGET,
):
    """
    Diagonal entries of M_a on H_k: a(gamma_w(x0)) in collocation mode, the
    mu^H average of a over [w] in average mode. Average mode pushes one shared
    mu^H sample through gamma_w, which is the normalised restriction of mu^H
    to [w] under measure separation.
    """
    check_level(ifs.n, k, budget)
    if mode == COLLOCATION:
        if x0 is None:
            x0 = ifs.ambient_box.center
        return evaluate_function(a, word_points(ifs, k, x0))
    if mode == AVERAGE:
        if samples is None:
            samples = hutchinson_sample(ifs, mc_samples, seed)
        return np.array(
            [
                np.mean(evaluate_function(a, word_image(ifs, w, samples)))
                for w in all_words(ifs.n, k)
            ],
            dtype=complex,
        )
    raise IfsExperimentError(f"unknown mode '{mode}', expected one of {MODES}")


def mult_operator(
    ifs: IfsSystem,
    a,
    k,
    mode=COLLOCATION,
    mc_samples=10000,
    x0=None,
    seed=0,
    samples=None,
    budget=DEFAULT_SIZE_BUDGET,
) -> LevelOperator:
    values = cell_values(ifs, a, k, mode, x0, mc_samples, seed, samples, budget)
    return diagonal_operator(ifs.n, k, values)


def covariance_defect(
    ifs: IfsSystem,
    a,
    i,
    k,
    mode=COLLOCATION,
    x0=None,
    mc_samples=10000,
    seed=0,
    budget=DEFAULT_SIZE_BUDGET,
):
    """||M_a V_i - V_i M_{a o gamma_i}|| as operators H_k -> H_{k+1}."""
    _check_branch(ifs.n, i)
    branch = ifs.maps[i - 1]

    def a_after_branch(points):
        return a(branch(points))

    samples = None
    if mode == AVERAGE:
        samples = hutchinson_sample(ifs, mc_samples, seed)
    kwargs = dict(mode=mode, x0=x0, samples=samples, budget=budget)
    v_i = isometry_operator(ifs.n, i, k, budget)
    lhs = mult_operator(ifs, a, k + 1, **kwargs) @ v_i
    rhs = v_i @ mult_operator(ifs, a_after_branch, k, **kwargs)
    return (lhs - rhs).norm()
