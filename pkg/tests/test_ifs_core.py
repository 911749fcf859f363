import unittest

import numpy as np

from ifs_experiment_utils.errors import (
    Degenerate,
    InvalidSystem,
    LetterOutOfRange,
    NoBranch,
    NotContractive,
)
from ifs_experiment_utils.ifs_core import (
    AffineMap,
    Box,
    IfsSystem,
    all_words,
    builtin_system,
    compose_word,
    cylinder_box,
    cylinder_diameter_bound,
    parse_word_label,
    phi_apply,
    validate_contraction,
    word_from_rank,
    word_image,
    word_label,
    word_point,
    word_points,
    word_rank,
)


class TestAffineMaps(unittest.TestCase):
    def test_validate_contraction(self):
        self.assertEqual(validate_contraction(AffineMap([[0.5]], [0.0])), (0.5, 0.5))
        self.assertEqual(validate_contraction(AffineMap([[-0.5]], [1.0])), (0.5, 0.5))
        with self.assertRaises(NotContractive):
            validate_contraction(AffineMap([[1.0]], [0.0]))
        with self.assertRaises(Degenerate):
            validate_contraction(AffineMap([[0.5, 0.0], [0.0, 0.0]], [0.0, 0.0]))

    def test_single_point_and_batch_agree_bitwise(self):
        m = AffineMap([[0.3, 0.1], [-0.2, 0.4]], [0.25, 0.5])
        rng = np.random.default_rng(3)
        points = rng.uniform(size=(50, 2))
        batch = m(points)
        for point, row in zip(points, batch):
            self.assertTrue(np.array_equal(m(point), row))

    def test_inverse_apply(self):
        m = AffineMap([[0.3, 0.1], [-0.2, 0.4]], [0.25, 0.5])
        points = np.random.default_rng(1).uniform(size=(20, 2))
        np.testing.assert_allclose(m.inverse_apply(m(points)), points, atol=1e-12)

    def test_invalid_shapes(self):
        with self.assertRaises(InvalidSystem):
            AffineMap([[0.5, 0.0]], [0.0])
        with self.assertRaises(InvalidSystem):
            AffineMap([[0.5]], [0.0, 1.0])


class TestIfsSystem(unittest.TestCase):
    def test_builtins(self):
        ifs = builtin_system("example8")
        self.assertEqual(ifs.n, 2)
        self.assertEqual(ifs.dimension, 1)
        self.assertEqual(ifs.c2, 0.5)
        self.assertEqual(ifs.diam, 1.0)
        sierpinski = builtin_system("sierpinski")
        self.assertEqual((sierpinski.n, sierpinski.dimension), (3, 2))
        with self.assertRaises(InvalidSystem):
            builtin_system("koch")

    def test_rejects_bad_systems(self):
        box = Box([0.0], [1.0])
        with self.assertRaises(InvalidSystem):
            IfsSystem([AffineMap([[0.5]], [0.0])], box)
        with self.assertRaises(NotContractive) as ctx:
            IfsSystem([AffineMap([[0.5]], [0.0]), AffineMap([[1.5]], [0.0])], box)
        self.assertIn("map 2 not contractive", str(ctx.exception))
        with self.assertRaises(InvalidSystem):
            IfsSystem([AffineMap([[0.5]], [0.0]), AffineMap([[0.5]], [0.8])], box)


class TestWords(unittest.TestCase):
    def test_enumeration(self):
        self.assertEqual(all_words(2, 2), [(1, 1), (1, 2), (2, 1), (2, 2)])
        self.assertEqual(all_words(3, 0), [()])
        for rank, w in enumerate(all_words(3, 3)):
            self.assertEqual(word_rank(w, 3), rank)
            self.assertEqual(word_from_rank(rank, 3, 3), w)
        self.assertEqual(word_label((1, 2, 1)), "1-2-1")
        self.assertEqual(parse_word_label("1-2-1"), (1, 2, 1))
        self.assertEqual(parse_word_label(""), ())

    def test_compose_word(self):
        ifs = builtin_system("example8")
        self.assertTrue(compose_word(ifs, (1, 2)).allclose(AffineMap([[0.25]], [0.25])))
        self.assertTrue(compose_word(ifs, (2, 2)).allclose(AffineMap([[0.25]], [0.75])))
        self.assertTrue(compose_word(ifs, ()).allclose(AffineMap.identity(1)))
        with self.assertRaises(LetterOutOfRange):
            compose_word(ifs, (1, 3))

    def test_composition_is_associative(self):
        ifs = builtin_system("sierpinski")
        rng = np.random.default_rng(0)
        for _ in range(20):
            u = tuple(rng.integers(1, 4, size=rng.integers(0, 4)))
            v = tuple(rng.integers(1, 4, size=rng.integers(0, 4)))
            lhs = compose_word(ifs, u + v)
            rhs = compose_word(ifs, u).compose(compose_word(ifs, v))
            self.assertTrue(lhs.allclose(rhs))

    def test_word_point(self):
        ifs = builtin_system("example8")
        self.assertEqual(word_point(ifs, (2,), [0.0])[0], 0.5)
        self.assertEqual(word_point(ifs, (), [0.0])[0], 0.0)
        self.assertEqual(word_point(ifs, (1, 2), [0.0])[0], 0.25)
        cantor = builtin_system("cantor3")
        self.assertAlmostEqual(word_point(cantor, (2, 1), [0.0])[0], 2 / 3, places=15)
        with self.assertRaises(InvalidSystem):
            word_point(ifs, (1,), [1.5])

    def test_word_points_match_word_point(self):
        for name in ("example9-tent", "sierpinski"):
            ifs = builtin_system(name)
            x0 = ifs.ambient_box.center
            reps = word_points(ifs, 3, x0)
            for w, row in zip(all_words(ifs.n, 3), reps):
                self.assertTrue(np.array_equal(word_point(ifs, w, x0), row))
            for i, affine_map in enumerate(ifs.maps, start=1):
                for w in all_words(ifs.n, 2):
                    self.assertTrue(
                        np.array_equal(
                            word_point(ifs, (i,) + w, x0),
                            affine_map(word_point(ifs, w, x0)),
                        )
                    )

    def test_cylinder_diameter_bound(self):
        ifs = builtin_system("example8")
        self.assertEqual(cylinder_diameter_bound(ifs, 3), 0.125)
        self.assertEqual(cylinder_diameter_bound(ifs, 0), ifs.diam)
        self.assertAlmostEqual(
            cylinder_diameter_bound(builtin_system("cantor3"), 2), 1 / 9, places=15
        )
        sierpinski = builtin_system("sierpinski")
        vertices = sierpinski.ambient_box.vertices()
        bound = cylinder_diameter_bound(sierpinski, 3)
        for w in all_words(3, 3):
            images = word_image(sierpinski, w, vertices)
            spread = np.max(np.linalg.norm(images[:, None] - images[None, :], axis=2))
            self.assertLessEqual(spread, bound + 1e-12)

    def test_cylinder_box(self):
        box = cylinder_box(builtin_system("example8"), (2, 1))
        np.testing.assert_array_equal(box.lo, [0.5])
        np.testing.assert_array_equal(box.hi, [0.75])


class TestBranchInverse(unittest.TestCase):
    def test_examples(self):
        i, x = phi_apply(builtin_system("example8"), 0.25)
        self.assertEqual((i, x[0]), (1, 0.5))
        i, x = phi_apply(builtin_system("example9-tent"), 0.75)
        self.assertEqual((i, x[0]), (2, 0.5))
        i, x = phi_apply(builtin_system("example8"), 0.5)
        self.assertEqual((i, x[0]), (1, 1.0))
        i, x = phi_apply(builtin_system("example8"), 0.75)
        self.assertEqual((i, x[0]), (2, 0.5))

    def test_no_branch(self):
        with self.assertRaises(NoBranch):
            phi_apply(builtin_system("cantor3"), 0.5)

    def test_inverts_every_branch(self):
        ifs = builtin_system("cantor3")
        points = np.random.default_rng(5).uniform(size=(1000, 1))
        for i, affine_map in enumerate(ifs.maps, start=1):
            for x in points:
                branch, back = phi_apply(ifs, affine_map(x))
                self.assertEqual(branch, i)
                np.testing.assert_allclose(back, x, atol=1e-10)


if __name__ == "__main__":
    unittest.main()
