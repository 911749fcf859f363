import pandas as pd

from ifs_experiment_utils.config import RunConfig
from ifs_experiment_utils.opspace import (
    COLLOCATION,
    covariance_defect,
    isometry_defect,
    range_sum_defect,
)
from ifs_experiment_utils.reporting import CheckResult, RunReport, write_csv
from ifs_experiment_utils.tasks.base_task import BaseTask

RELATION_TOLERANCE = 1e-13


class RelationsTask(BaseTask):
    """Cuntz relations of the V_i and the covariance M_a V_i = V_i M_{a o gamma_i}."""

    def execute(self, config: RunConfig, report: RunReport):
        ifs, k, budget = config.ifs, config.level, config.size_budget
        rows = [
            {
                "relation": "isometry",
                "branch": 0,
                "level": k,
                "defect": isometry_defect(ifs.n, k, budget),
            }
        ]
        if k >= 1:
            rows.append(
                {
                    "relation": "range_sum",
                    "branch": 0,
                    "level": k,
                    "defect": range_sum_defect(ifs.n, k, budget),
                }
            )
        for i in range(1, ifs.n + 1):
            defect = covariance_defect(
                ifs, config.function, i, k, COLLOCATION, x0=config.x0, budget=budget
            )
            rows.append(
                {"relation": "covariance", "branch": i, "level": k, "defect": defect}
            )
        write_csv(pd.DataFrame(rows), config.out / "relations.csv", report)

        for row in rows:
            params = {"n": ifs.n, "level": k, "function": config.function.name}
            if row["branch"]:
                params["branch"] = row["branch"]
            report.add_check(
                CheckResult(
                    f"{row['relation']}_defect",
                    row["defect"],
                    RELATION_TOLERANCE,
                    params,
                )
            )


BaseTask.register_subclass("relations", RelationsTask)
