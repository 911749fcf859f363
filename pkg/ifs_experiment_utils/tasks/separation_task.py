import pandas as pd

from ifs_experiment_utils.config import RunConfig
from ifs_experiment_utils.measure import (
    SelfSimilarWeights,
    chaos_game,
    pairwise_overlaps,
    separation_tolerance,
)
from ifs_experiment_utils.reporting import CheckResult, RunReport, write_csv
from ifs_experiment_utils.tasks.base_task import BaseTask


class SeparationTask(BaseTask):
    """Measure separation diagnostic, always on the Hutchinson measure."""

    def execute(self, config: RunConfig, report: RunReport):
        ifs = config.ifs
        m = chaos_game(
            ifs,
            SelfSimilarWeights.hutchinson(ifs.n),
            config.samples,
            config.burn_in,
            config.seed,
        )
        overlaps = pairwise_overlaps(ifs, m)
        write_csv(pd.DataFrame(overlaps), config.out / "separation.csv", report)
        overlap = max(entry["overlap"] for entry in overlaps)
        report.results["separation_overlap"] = overlap
        report.add_check(
            CheckResult(
                "separation_overlap",
                overlap,
                separation_tolerance(m.size),
                {"system": ifs.name, "N": m.size, "seed": config.seed},
            )
        )


BaseTask.register_subclass("separation", SeparationTask)
