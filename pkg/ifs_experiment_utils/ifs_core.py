"""
Affine iterated function systems.

Words are tuples of 1-based letters. The composition convention is
gamma_w = gamma_{w1} o ... o gamma_{wk}: the first letter is applied last.
All words of one length are enumerated in lexicographic order, first letter
as the coarsest digit, and every module indexes level-k data by that rank.
"""
import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from ifs_experiment_utils.errors import (
    Degenerate,
    IfsExperimentError,
    InvalidSystem,
    LetterOutOfRange,
    NoBranch,
    NotContractive,
)

TAU_GEO = 1e-9

Word = Tuple[int, ...]


def _frozen(array):
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.array(self.lo, dtype=float))
        hi = np.atleast_1d(np.array(self.hi, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise InvalidSystem(
                f"box corners must be vectors of equal length, got {lo.shape} and {hi.shape}"
            )
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidSystem("box corners must be finite")
        if np.any(lo > hi):
            raise InvalidSystem(f"box needs lo <= hi, got lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @classmethod
    def unit(cls, dimension):
        return cls(np.zeros(dimension), np.ones(dimension))

    @classmethod
    def bounding(cls, points):
        points = np.asarray(points, dtype=float)
        return cls(points.min(axis=0), points.max(axis=0))

    @property
    def dimension(self):
        return self.lo.shape[0]

    @property
    def center(self):
        return (self.lo + self.hi) / 2

    @property
    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def vertices(self):
        corners = itertools.product(*zip(self.lo, self.hi))
        return np.array(list(corners), dtype=float)

    def contains(self, points, tol=TAU_GEO):
        points = np.asarray(points, dtype=float)
        inside = (points >= self.lo - tol) & (points <= self.hi + tol)
        return np.all(inside, axis=-1)

    def intersect(self, other):
        """Exact intersection, or None when the boxes are disjoint."""
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            return None
        return Box(lo, hi)

    def to_dict(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class AffineMap:
    linear_part: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        linear_part = np.atleast_2d(np.array(self.linear_part, dtype=float))
        offset = np.atleast_1d(np.array(self.offset, dtype=float))
        if linear_part.ndim != 2 or linear_part.shape[0] != linear_part.shape[1]:
            raise InvalidSystem(
                f"linear part must be a square matrix, got shape {linear_part.shape}"
            )
        if offset.shape != (linear_part.shape[0],):
            raise InvalidSystem(
                f"offset must have length {linear_part.shape[0]}, got shape {offset.shape}"
            )
        if not (np.all(np.isfinite(linear_part)) and np.all(np.isfinite(offset))):
            raise InvalidSystem("affine map entries must be finite")
        object.__setattr__(self, "linear_part", _frozen(linear_part))
        object.__setattr__(self, "offset", _frozen(offset))

    @classmethod
    def identity(cls, dimension):
        return cls(np.eye(dimension), np.zeros(dimension))

    @property
    def dimension(self):
        return self.offset.shape[0]

    def __call__(self, points):
        # Column-by-column elementwise sums, so one point and a batch of
        # points give bit-identical results.
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape) + self.offset
        for j in range(self.dimension):
            out = out + points[..., j : j + 1] * self.linear_part[:, j]
        return out

    def compose(self, inner):
        """Returns self o inner."""
        return AffineMap(
            self.linear_part @ inner.linear_part,
            self.linear_part @ inner.offset + self.offset,
        )

    def inverse_apply(self, points):
        points = np.asarray(points, dtype=float)
        shifted = np.atleast_2d(points - self.offset)
        solved = np.linalg.solve(self.linear_part, shifted.T).T
        return solved.reshape(points.shape)

    def image_box(self, box: Box) -> Box:
        return Box.bounding(self(box.vertices()))

    def preimage_box(self, box: Box) -> Box:
        return Box.bounding(self.inverse_apply(box.vertices()))

    def singular_values(self):
        return np.linalg.svd(self.linear_part, compute_uv=False)

    def allclose(self, other, atol=1e-12):
        return np.allclose(
            self.linear_part, other.linear_part, rtol=0, atol=atol
        ) and np.allclose(self.offset, other.offset, rtol=0, atol=atol)

    def to_dict(self):
        return {"A": self.linear_part.tolist(), "b": self.offset.tolist()}


def validate_contraction(affine_map: AffineMap):
    """
    Returns (c1, c2) = (sigma_min, sigma_max) of the linear part, the two-sided
    distortion constants of a proper contraction.
    """
    singular_values = affine_map.singular_values()
    c2 = float(singular_values[0])
    c1 = float(singular_values[-1])
    if c2 >= 1:
        raise NotContractive(f"not contractive: sigma_max = {c2} >= 1")
    if c1 <= 1e-14 * max(c2, 1.0):
        raise Degenerate(f"degenerate: sigma_min = {c1}, map is not injective")
    return c1, c2


@dataclass(frozen=True, eq=False)
class IfsSystem:
    maps: Tuple[AffineMap, ...]
    ambient_box: Box
    name: str = "custom"

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        if len(maps) < 2:
            raise InvalidSystem(f"an IFS needs n >= 2 maps, got {len(maps)}")
        ratios = []
        branch_boxes = []
        for i, affine_map in enumerate(maps, start=1):
            if affine_map.dimension != self.ambient_box.dimension:
                raise InvalidSystem(
                    f"map {i} has dimension {affine_map.dimension}, box has {self.ambient_box.dimension}"
                )
            try:
                ratios.append(validate_contraction(affine_map))
            except (NotContractive, Degenerate) as e:
                raise type(e)(f"map {i} {e}") from e
            image = affine_map.image_box(self.ambient_box)
            if not np.all(self.ambient_box.contains(image.vertices())):
                raise InvalidSystem(
                    f"map {i} does not map the ambient box into itself"
                )
            branch_boxes.append(image)
        object.__setattr__(self, "_ratios", tuple(ratios))
        object.__setattr__(self, "_branch_boxes", tuple(branch_boxes))

    @property
    def n(self):
        return len(self.maps)

    @property
    def dimension(self):
        return self.ambient_box.dimension

    @property
    def diam(self):
        return self.ambient_box.diameter

    @property
    def contraction_ratios(self):
        return self._ratios

    @property
    def c1(self):
        return min(r[0] for r in self._ratios)

    @property
    def c2(self):
        return max(r[1] for r in self._ratios)

    @property
    def branch_boxes(self):
        return self._branch_boxes

    def to_dict(self):
        return {
            "name": self.name,
            "n": self.n,
            "dimension": self.dimension,
            "maps": [m.to_dict() for m in self.maps],
            "box": self.ambient_box.to_dict(),
        }


def check_word(n, w) -> Word:
    word = tuple(int(letter) for letter in w)
    for letter in word:
        if not 1 <= letter <= n:
            raise LetterOutOfRange(f"letter {letter} outside 1..{n} in word {word}")
    return word


def all_words(n, k):
    return list(itertools.product(range(1, n + 1), repeat=k))


def word_rank(w, n):
    rank = 0
    for letter in w:
        rank = rank * n + (letter - 1)
    return rank


def word_from_rank(rank, n, k):
    letters = []
    for _ in range(k):
        rank, digit = divmod(rank, n)
        letters.append(digit + 1)
    return tuple(reversed(letters))


def word_label(w):
    return "-".join(str(letter) for letter in w)


def parse_word_label(label):
    label = str(label).strip()
    if not label:
        return ()
    return tuple(int(part) for part in label.split("-"))


def check_point(ifs: IfsSystem, x0):
    point = np.atleast_1d(np.asarray(x0, dtype=float))
    if point.shape != (ifs.dimension,):
        raise InvalidSystem(
            f"point must have dimension {ifs.dimension}, got shape {point.shape}"
        )
    if not ifs.ambient_box.contains(point):
        raise InvalidSystem(f"point {point.tolist()} lies outside the ambient box")
    return point


def compose_word(ifs: IfsSystem, w) -> AffineMap:
    word = check_word(ifs.n, w)
    result = AffineMap.identity(ifs.dimension)
    for letter in word:
        result = result.compose(ifs.maps[letter - 1])
    return result


def word_image(ifs: IfsSystem, w, points):
    """gamma_w applied to points, innermost (last) letter first."""
    word = check_word(ifs.n, w)
    out = np.asarray(points, dtype=float)
    for letter in reversed(word):
        out = ifs.maps[letter - 1](out)
    return out


def word_point(ifs: IfsSystem, w, x0):
    return word_image(ifs, w, check_point(ifs, x0))


def word_points(ifs: IfsSystem, k, x0):
    """
    Representatives gamma_w(x0) of all level-k words, shape (n^k, d), in
    lexicographic order. Row w equals word_point(ifs, w, x0) bit-for-bit.
    """
    reps = check_point(ifs, x0)[None, :]
    for _ in range(k):
        reps = np.concatenate([affine_map(reps) for affine_map in ifs.maps])
    return reps


def phi_apply(ifs: IfsSystem, y):
    """
    Branch inverse: the smallest i with y in gamma_i(box), and gamma_i^{-1}(y).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    for i, (affine_map, image) in enumerate(
        zip(ifs.maps, ifs.branch_boxes), start=1
    ):
        if image.contains(y):
            return i, affine_map.inverse_apply(y)
    raise NoBranch(f"point {y.tolist()} lies in no branch image")


def cylinder_diameter_bound(ifs: IfsSystem, k):
    if k < 0:
        raise IfsExperimentError(f"level must be >= 0, got {k}")
    return ifs.c2**k * ifs.diam


def cylinder_box(ifs: IfsSystem, w) -> Box:
    return compose_word(ifs, w).image_box(ifs.ambient_box)


def cylinder_boxes(ifs: IfsSystem, k):
    """Lower and upper corners of all level-k cylinder boxes, lexicographic."""
    boxes = [cylinder_box(ifs, w) for w in all_words(ifs.n, k)]
    return np.array([b.lo for b in boxes]), np.array([b.hi for b in boxes])


def affine_system(matrices, offsets, lo, hi, name="custom") -> IfsSystem:
    maps = [AffineMap(a, b) for a, b in zip(matrices, offsets)]
    return IfsSystem(maps, Box(lo, hi), name=name)


def _example8():
    return affine_system([[[0.5]], [[0.5]]], [[0.0], [0.5]], [0.0], [1.0], "example8")


def _example9_tent():
    return affine_system(
        [[[0.5]], [[-0.5]]], [[0.0], [1.0]], [0.0], [1.0], "example9-tent"
    )


def _cantor3():
    return affine_system(
        [[[1 / 3]], [[1 / 3]]], [[0.0], [2 / 3]], [0.0], [1.0], "cantor3"
    )


def _sierpinski():
    half = 0.5 * np.eye(2)
    return affine_system(
        [half, half, half],
        [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]],
        [0.0, 0.0],
        [1.0, 1.0],
        "sierpinski",
    )


def _overlap():
    return affine_system([[[0.5]], [[0.5]]], [[0.0], [0.1]], [0.0], [1.0], "overlap")


BUILTIN_SYSTEMS: Dict[str, Callable[[], IfsSystem]] = {
    "example8": _example8,
    "example9-tent": _example9_tent,
    "cantor3": _cantor3,
    "sierpinski": _sierpinski,
    "overlap": _overlap,
}


def builtin_system(name) -> IfsSystem:
    if name not in BUILTIN_SYSTEMS:
        raise InvalidSystem(
            f"unknown builtin system '{name}', expected one of {sorted(BUILTIN_SYSTEMS)}"
        )
    return BUILTIN_SYSTEMS[name]()
