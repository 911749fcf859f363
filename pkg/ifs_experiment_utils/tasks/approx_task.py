import numpy as np

from ifs_experiment_utils.approx import (
    build_approximant,
    convergence_report,
    has_continuity_data,
    matrix_level,
    sampling_tolerance,
    write_convergence_csv,
)
from ifs_experiment_utils.config import RunConfig
from ifs_experiment_utils.reporting import CheckResult, RunReport, write_csv
from ifs_experiment_utils.tasks.base_task import BaseTask

ROUNDOFF = 1e-12


class ApproxTask(BaseTask):
    """Convergence of the Cuntz-word approximants of M_a over a range of levels."""

    def execute(self, config: RunConfig, report: RunReport):
        ifs, a = config.ifs, config.function
        k_min, k_max = config.levels
        table = convergence_report(
            ifs,
            a,
            k_min,
            k_max,
            x0=config.x0,
            samples_per_cell=config.samples_per_cell,
            seed=config.seed,
            mode=config.mode,
            level_offset=config.level_offset,
            budget=config.size_budget,
        )
        path = config.out / "convergence.csv"
        write_convergence_csv(table, path)
        report.add_file(path)
        appr = build_approximant(ifs, a, k_max, config.x0, config.size_budget)
        write_csv(appr.to_frame(), config.out / "approximant.csv", report)

        report.results["approx"] = {
            "function": a.name,
            "lipschitz": a.lipschitz,
            "x0": config.x0,
            "matrix_levels": [
                matrix_level(ifs.n, k, config.level_offset, config.size_budget)
                for k in table["k"]
            ],
        }
        if not has_continuity_data(a):
            print(f"No continuity data for '{a.name}', skipping the bound checks")
            return

        bounds = table["certified_bound"].to_numpy()
        increase = float(np.max(np.diff(bounds), initial=0.0))
        report.add_check(
            CheckResult(
                "certified_bound_monotone",
                increase,
                0.0,
                {"levels": f"{k_min}..{k_max}"},
            )
        )
        for row in table.itertuples(index=False):
            params = {"k": row.k, "function": a.name}
            resolution = sampling_tolerance(a, ifs, row.k, config.samples_per_cell)
            report.add_check(
                CheckResult(
                    "matrix_error_below_error_sup",
                    row.matrix_error - row.error_sup,
                    resolution + ROUNDOFF,
                    params,
                )
            )
            report.add_check(
                CheckResult(
                    "error_sup_below_certified_bound",
                    row.error_sup - row.certified_bound,
                    ROUNDOFF,
                    params,
                )
            )


BaseTask.register_subclass("approx", ApproxTask)
