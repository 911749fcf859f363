import math
import os
import tempfile
import unittest

import numpy as np
from scipy import sparse

from ifs_experiment_utils.errors import LevelOverflow, LevelUnderflow, LetterOutOfRange
from ifs_experiment_utils.ifs_core import all_words, builtin_system
from ifs_experiment_utils.opspace import (
    AVERAGE,
    LeveledVector,
    apply_coisometry,
    apply_isometry,
    check_level,
    composition_matrix,
    composition_operator,
    coisometry_operator,
    covariance_defect,
    cuntz_relation_defects,
    identity_operator,
    inner,
    isometry_operator,
    mult_operator,
    operator_norm,
    range_sum_defect,
    refine,
    word_operator,
)

SQRT_HALF = 2**-0.5


def square(p):
    return p[:, 0] ** 2


def basis(*w, n=2):
    return LeveledVector.basis(n, w)


class TestLeveledVectors(unittest.TestCase):
    def test_refine(self):
        v = refine(LeveledVector.constant(2), 1)
        np.testing.assert_allclose(v.coeffs, [SQRT_HALF, SQRT_HALF])
        e1 = basis(1)
        self.assertIs(refine(e1, 0), e1)
        fine = refine(e1, 1)
        self.assertEqual(fine.level, 2)
        np.testing.assert_allclose(fine.coeffs, [SQRT_HALF, SQRT_HALF, 0, 0])
        self.assertAlmostEqual(fine.norm(), 1.0, places=15)

    def test_refine_keeps_norm(self):
        rng = np.random.default_rng(4)
        v = LeveledVector.random(3, 2, rng)
        self.assertAlmostEqual(refine(v, 3).norm(), v.norm(), places=12)

    def test_inner(self):
        empty = LeveledVector.basis(2, ())
        self.assertAlmostEqual(inner(empty, empty), 1.0)
        self.assertEqual(inner(basis(1), basis(2)), 0)
        self.assertAlmostEqual(inner(empty, basis(1)), SQRT_HALF, places=15)

    def test_refine_overflow(self):
        with self.assertRaises(LevelOverflow):
            refine(basis(1), 3, budget=8)
        with self.assertRaises(LevelOverflow):
            check_level(2, 25)
        with self.assertRaises(LevelUnderflow):
            check_level(2, -1)

    def test_csv_export(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "v.csv")
            basis(1, 2).to_csv(path)
            with open(path) as f:
                header = f.readline().strip()
                self.assertEqual(header, "word,coefficient_re,coefficient_im")
                self.assertEqual(f.readline().strip(), "1-1,0.0,0.0")

    def test_refine_commutes_with_isometries(self):
        rng = np.random.default_rng(5)
        for n in (2, 3):
            v = LeveledVector.random(n, 2, rng)
            for i in range(1, n + 1):
                lhs = refine(apply_isometry(i, v), 1)
                rhs = apply_isometry(i, refine(v, 1))
                self.assertEqual(lhs.level, rhs.level)
                np.testing.assert_array_equal(lhs.coeffs, rhs.coeffs)


class TestIsometries(unittest.TestCase):
    def test_isometry(self):
        empty = LeveledVector.basis(2, ())
        self.assertTrue(apply_isometry(1, empty).allclose(basis(1)))
        self.assertTrue(apply_isometry(1, basis(2)).allclose(basis(1, 2)))
        with self.assertRaises(LetterOutOfRange):
            apply_isometry(3, basis(2))

    def test_coisometry(self):
        self.assertTrue(apply_coisometry(1, basis(1, 2)).allclose(basis(2)))
        self.assertEqual(apply_coisometry(1, basis(2)).norm(), 0.0)
        v = apply_coisometry(1, LeveledVector.basis(2, ()))
        np.testing.assert_allclose(v.coeffs, [SQRT_HALF])
        with self.assertRaises(LevelUnderflow):
            apply_coisometry(1, LeveledVector.basis(2, ()), refine_if_needed=False)

    def test_composition_operator(self):
        v = composition_operator(1, basis(1))
        np.testing.assert_allclose(v.coeffs, [math.sqrt(2)])
        norm = composition_matrix(2, 1, 3).norm()
        self.assertAlmostEqual(norm, math.sqrt(2), places=12)

    def test_adjointness(self):
        rng = np.random.default_rng(0)
        for n in (2, 3):
            for i in range(1, n + 1):
                for _ in range(5):
                    u = LeveledVector.random(n, 2, rng)
                    w = LeveledVector.random(n, 3, rng)
                    lhs = inner(apply_isometry(i, u), w)
                    rhs = inner(u, apply_coisometry(i, w))
                    self.assertAlmostEqual(abs(lhs - rhs), 0.0, places=12)

    def test_range_is_the_ith_block(self):
        rng = np.random.default_rng(1)
        n, k = 3, 2
        size = n**k
        for i in range(1, n + 1):
            image = apply_isometry(i, LeveledVector.random(n, k, rng)).coeffs
            outside = np.delete(image, np.arange((i - 1) * size, i * size))
            self.assertTrue(np.all(outside == 0))
            matrix = isometry_operator(n, i, k).to_dense()
            self.assertEqual(np.linalg.matrix_rank(matrix), size)

    def test_ranges_are_orthogonal(self):
        rng = np.random.default_rng(3)
        for n in (2, 3, 4):
            k = 2
            for i in range(1, n + 1):
                for j in range(1, n + 1):
                    if i == j:
                        continue
                    u = apply_isometry(i, LeveledVector.random(n, k, rng))
                    w = apply_isometry(j, LeveledVector.random(n, k, rng))
                    self.assertEqual(inner(u, w), 0)
                    v_i = isometry_operator(n, i, k)
                    v_j = isometry_operator(n, j, k)
                    self.assertEqual((v_i.adjoint() @ v_j).norm(), 0.0)

    def test_operator_csv_layout(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "v2.csv")
            isometry_operator(2, 2, 1).to_csv(path)
            with open(path) as f:
                lines = [line.strip() for line in f]
        # rows are codomain word ranks, columns domain word ranks
        self.assertEqual(lines, ["0,1", "0.0,0.0", "0.0,0.0", "1.0,0.0", "0.0,1.0"])

    def test_operator_matches_vector_action(self):
        rng = np.random.default_rng(2)
        v = LeveledVector.random(2, 3, rng)
        v_2 = isometry_operator(2, 2, 3)
        self.assertTrue(v_2.apply(v).allclose(apply_isometry(2, v)))
        v_1_star = coisometry_operator(2, 1, 3)
        self.assertTrue(v_1_star.apply(v).allclose(apply_coisometry(1, v)))
        with self.assertRaises(LevelUnderflow):
            coisometry_operator(2, 1, 0)


class TestRelations(unittest.TestCase):
    def test_cuntz_relations_hold_exactly(self):
        for n in (2, 3, 4):
            for k in range(1, 9):
                with self.subTest(n=n, k=k):
                    defect1, defect2 = cuntz_relation_defects(n, k)
                    self.assertLessEqual(defect1, 1e-13)
                    self.assertLessEqual(defect2, 1e-13)

    def test_range_sum_needs_level_one(self):
        with self.assertRaises(LevelUnderflow):
            range_sum_defect(2, 0)

    def test_word_projections(self):
        for w in all_words(2, 2):
            p = word_operator(2, w, w, 3)
            self.assertAlmostEqual((p @ p - p).norm(), 0.0, places=13)
            self.assertAlmostEqual((p.adjoint() - p).norm(), 0.0, places=13)
            self.assertTrue(p.is_diagonal)
        total = word_operator(2, (1,), (1,), 2) + word_operator(2, (2,), (2,), 2)
        self.assertEqual((total - identity_operator(2, 2)).norm(), 0.0)

    def test_operator_norm(self):
        self.assertEqual(operator_norm(np.zeros((4, 4))), 0.0)
        self.assertEqual(operator_norm(np.diag([1.0, -3.0, 2.0])), 3.0)
        shear = np.array([[1.0, 1.0], [0.0, 1.0]])
        self.assertAlmostEqual(operator_norm(shear), (1 + math.sqrt(5)) / 2)

    def test_operator_norm_of_wide_matrices(self):
        row = sparse.csr_matrix(([3.0, 4.0], ([0, 0], [10, 5000])), shape=(1, 8192))
        self.assertAlmostEqual(operator_norm(row), 5.0, places=12)
        # one entry per row, so the singular values are 1..64
        ranks = np.arange(64)
        wide = sparse.csr_matrix((ranks + 1.0, (ranks, 100 * ranks)), shape=(64, 8192))
        self.assertAlmostEqual(operator_norm(wide), 64.0, places=8)
        self.assertAlmostEqual(composition_matrix(2, 1, 13).norm(), math.sqrt(2))


class TestMultiplicationOperators(unittest.TestCase):
    def test_collocation(self):
        ifs = builtin_system("example8")
        op = mult_operator(ifs, lambda p: p[:, 0], 1, x0=[0.0])
        np.testing.assert_array_equal(op.diagonal(), [0.0, 0.5])
        self.assertTrue(op.is_diagonal)

    def test_constant_is_identity(self):
        ifs = builtin_system("cantor3")
        for mode in ("collocation", "average"):
            op = mult_operator(ifs, lambda p: 1.0, 2, mode=mode, mc_samples=100)
            self.assertEqual((op - identity_operator(2, 2)).norm(), 0.0)

    def test_average(self):
        ifs = builtin_system("example8")
        op = mult_operator(ifs, lambda p: p[:, 0], 1, mode=AVERAGE, mc_samples=100000)
        np.testing.assert_allclose(op.diagonal().real, [0.25, 0.75], atol=0.01)

    def test_covariance(self):
        ifs = builtin_system("example8")
        for i in (1, 2):
            self.assertLessEqual(covariance_defect(ifs, square, i, 3, x0=[0.3]), 1e-13)
            self.assertLessEqual(
                covariance_defect(ifs, square, i, 3, mode=AVERAGE, mc_samples=2000),
                1e-12,
            )
        tent = builtin_system("example9-tent")
        defect = covariance_defect(tent, lambda p: np.cos(p[:, 0]), 2, 4)
        self.assertLessEqual(defect, 1e-13)

    def test_covariance_for_random_cubics(self):
        rng = np.random.default_rng(6)
        systems = [builtin_system("example8"), builtin_system("example9-tent")]
        for _ in range(10):
            coefficients = rng.normal(size=4)

            def cubic(p, c=coefficients):
                return np.polyval(c, p[:, 0])

            for ifs in systems:
                for k in range(7):
                    for i in (1, 2):
                        with self.subTest(ifs=ifs.name, k=k, i=i):
                            defect = covariance_defect(ifs, cubic, i, k)
                            self.assertLessEqual(defect, 1e-13)


if __name__ == "__main__":
    unittest.main()
