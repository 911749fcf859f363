import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

from ifs_experiment_utils.config import load_config, merge_layers
from ifs_experiment_utils.errors import ConfigParseError, ConfigValidationError

CONF_DIR = Path(__file__).resolve().parent.parent / "conf"


def write_file(directory, name, text):
    path = os.path.join(directory, name)
    with open(path, "w") as f:
        f.write(text)
    return path


class TestLoadConfig(unittest.TestCase):
    def test_builtin_defaults(self):
        config = load_config(overrides={"builtin": "example8"})
        self.assertEqual(config.ifs.name, "example8")
        self.assertTrue(config.weights.is_hutchinson)
        self.assertEqual(config.function.lipschitz, 1.0)
        self.assertEqual(
            (config.seed, config.samples, config.burn_in), (0, 100000, 100)
        )
        self.assertEqual(config.levels, (1, 8))
        np.testing.assert_array_equal(config.x0, [0.5])
        self.assertEqual(config.echo["builtin"], "example8")

    def test_overrides_win(self):
        config = load_config(
            overrides={
                "builtin": "sierpinski",
                "seed": 7,
                "levels": "2..4",
                "function": "x0*x1",
                "mode": "average",
                "out": "results",
                "samples": None,
            }
        )
        self.assertEqual(config.ifs.n, 3)
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.levels, (2, 4))
        self.assertEqual(config.mode, "average")
        self.assertEqual(config.out, Path("results"))
        self.assertEqual(config.samples, 100000)

    def test_config_files_in_repo(self):
        for name, n_levels in (("example8.json", (1, 8)), ("cantor3.json", (1, 6))):
            config = load_config(CONF_DIR / name)
            self.assertEqual(config.levels, n_levels)
            np.testing.assert_array_equal(config.x0, [0.0])
        tent = load_config(CONF_DIR / "example9_tent.json")
        self.assertEqual(tent.ifs.maps[1].offset.tolist(), [1.0])

    def test_yaml_file_with_builtin(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_file(
                tmp, "run.yaml", "builtin: cantor3\nlevel: 2\nweights: [0.25, 0.75]\n"
            )
            config = load_config(path, {"level": 4})
        self.assertEqual(config.ifs.name, "cantor3")
        self.assertEqual(config.level, 4)
        self.assertFalse(config.weights.is_hutchinson)

    def test_custom_maps(self):
        conf = merge_layers(
            {
                "maps": [{"A": [[0.5]], "b": [0.0]}, {"A": [[0.25]], "b": [0.75]}],
                "box": {"lo": [0.0], "hi": [1.0]},
            }
        )
        self.assertEqual(len(conf.maps), 2)
        config = load_config(
            overrides={
                "maps": [{"A": [[0.5]], "b": [0.0]}, {"A": [[0.25]], "b": [0.75]}],
                "box": {"lo": [0.0], "hi": [1.0]},
            }
        )
        self.assertEqual(config.ifs.name, "custom")
        self.assertEqual(config.ifs.c2, 0.5)


class TestConfigErrors(unittest.TestCase):
    def assert_invalid(self, overrides, key_path):
        with self.assertRaises(ConfigValidationError) as ctx:
            load_config(overrides=overrides)
        self.assertEqual(ctx.exception.key_path, key_path)
        return ctx.exception

    def test_bad_weights(self):
        self.assert_invalid({"builtin": "example8", "weights": [0.5, 0.6]}, "weights")
        self.assert_invalid({"builtin": "example8", "weights": [1.0]}, "weights")

    def test_unknown_key(self):
        self.assert_invalid({"builtin": "example8", "colour": "red"}, "colour")

    def test_wrong_type(self):
        self.assert_invalid({"builtin": "example8", "seed": "seven"}, "seed")

    def test_not_contractive(self):
        error = self.assert_invalid(
            {
                "maps": [{"A": [[0.5]], "b": [0.0]}, {"A": [[1.5]], "b": [0.0]}],
                "box": {"lo": [0.0], "hi": [1.0]},
            },
            "maps",
        )
        self.assertIn("map 2 not contractive", str(error))

    def test_missing_system(self):
        self.assert_invalid({"seed": 1}, "maps")

    def test_parameters(self):
        self.assert_invalid({"builtin": "example8", "levels": "5..2"}, "levels")
        self.assert_invalid({"builtin": "example8", "levels": "1..30"}, "levels")
        self.assert_invalid({"builtin": "example8", "mode": "exact"}, "mode")
        self.assert_invalid({"builtin": "example8", "samples": 0}, "samples")
        self.assert_invalid({"builtin": "example8", "x0": [2.0]}, "x0")
        self.assert_invalid({"builtin": "example8", "function": "y**2"}, "function")
        self.assert_invalid({"builtin": "example8", "function": "x.real"}, "function")
        self.assert_invalid({"builtin": "koch"}, "builtin")

    def test_unreadable_files(self):
        with self.assertRaises(ConfigParseError):
            load_config("does/not/exist.json")
        with tempfile.TemporaryDirectory() as tmp:
            path = write_file(tmp, "broken.yaml", "builtin: [example8\n")
            with self.assertRaises(ConfigParseError):
                load_config(path)


if __name__ == "__main__":
    unittest.main()
