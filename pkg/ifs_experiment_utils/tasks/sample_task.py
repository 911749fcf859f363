import pandas as pd

from ifs_experiment_utils.config import RunConfig
from ifs_experiment_utils.ifs_core import word_label
from ifs_experiment_utils.measure import (
    CellPartition,
    chaos_game,
    cylinder_mass_deviation,
    image_measure_residual,
    rn_derivative_estimate,
    self_similarity_residual,
)
from ifs_experiment_utils.reporting import CheckResult, RunReport, write_csv
from ifs_experiment_utils.tasks.base_task import BaseTask

RESIDUAL_TOLERANCE = 0.02
CYLINDER_MASS_TOLERANCE = 0.01


class SampleTask(BaseTask):
    """Chaos-game sample of the self-similar measure and its fixed-point diagnostics."""

    def execute(self, config: RunConfig, report: RunReport):
        ifs = config.ifs
        m = chaos_game(
            ifs, config.weights, config.samples, config.burn_in, config.seed
        )
        out = config.out
        m.to_csv(out / "samples.csv")
        report.add_file(out / "samples.csv")

        level = max(config.level, 1)
        part = CellPartition.build(ifs, level)
        params = {"system": ifs.name, "N": m.size, "level": level, "seed": m.seed}
        masses = part.cell_masses(m)
        write_csv(
            pd.DataFrame(
                {"word": [word_label(w) for w in part.words], "mass": masses}
            ),
            out / "cell_masses.csv",
            report,
        )
        report.results["measure"] = m.meta()

        report.add_check(
            CheckResult(
                "self_similarity_residual",
                self_similarity_residual(m, ifs, config.weights, part),
                RESIDUAL_TOLERANCE,
                params,
            )
        )
        if not config.weights.is_hutchinson:
            return

        report.add_check(
            CheckResult(
                "cylinder_mass_deviation",
                cylinder_mass_deviation(m, ifs, part),
                CYLINDER_MASS_TOLERANCE,
                params,
            )
        )
        rn_frames = []
        for i in range(1, ifs.n + 1):
            report.add_check(
                CheckResult(
                    "image_measure_residual",
                    image_measure_residual(m, ifs, i, part),
                    RESIDUAL_TOLERANCE,
                    {**params, "branch": i},
                )
            )
            estimate = rn_derivative_estimate(m, ifs, i, part)
            rn_frames.append(estimate.to_frame().assign(branch=i))
        rn = pd.concat(rn_frames, ignore_index=True)
        write_csv(
            rn[["branch", "word", "estimate", "flagged"]],
            out / "rn_estimates.csv",
            report,
        )


BaseTask.register_subclass("sample", SampleTask)
