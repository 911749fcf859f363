from ifs_experiment_utils.config import RunConfig
from ifs_experiment_utils.reporting import RunReport
from ifs_experiment_utils.tasks.base_task import BaseTask

REPORT_TASKS = ["sample", "separation", "relations", "approx"]


class ReportTask(BaseTask):
    """Every task in one output directory and one report."""

    def execute(self, config: RunConfig, report: RunReport):
        for task_name in REPORT_TASKS:
            print(f"Going to run {task_name}")
            sub_report = RunReport(task_name=task_name, config={})
            BaseTask.get_instance(task_name).execute(config, sub_report)
            report.merge(sub_report)


BaseTask.register_subclass("report", ReportTask)
