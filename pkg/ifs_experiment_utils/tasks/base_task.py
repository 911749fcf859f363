import os
from abc import ABCMeta

from ifs_experiment_utils.config import RunConfig
from ifs_experiment_utils.errors import IfsExperimentError, TaskError
from ifs_experiment_utils.reporting import RunReport, write_run_report
from ifs_experiment_utils.utils import Stopwatch


class BaseTask(object, metaclass=ABCMeta):
    _subclasses = {}

    @classmethod
    def register_subclass(cls, subclass_name, subclass):
        cls._subclasses[subclass_name] = subclass

    @staticmethod
    def task_names():
        return sorted(BaseTask._subclasses)

    @staticmethod
    def get_instance(task_name) -> "BaseTask":
        if task_name not in BaseTask._subclasses:
            raise IfsExperimentError(
                f"unknown task '{task_name}', expected one of {BaseTask.task_names()}"
            )
        return BaseTask._subclasses[task_name]()

    def execute(self, config: RunConfig, report: RunReport):
        """
        Runs the pipeline, writes its artifacts under config.out and records
        files, results and acceptance checks on the report.
        """
        raise NotImplementedError()


def run_task(config: RunConfig, task_name) -> RunReport:
    task = BaseTask.get_instance(task_name)
    print(f"Going to run task {task_name} on system {config.ifs.name}")
    report = RunReport(task_name=task_name, config=config.echo)
    os.makedirs(config.out, exist_ok=True)
    stopwatch = Stopwatch()
    try:
        task.execute(config, report)
    except IfsExperimentError as e:
        raise TaskError(task_name, e) from e
    report.total_time = stopwatch.elapsed()
    write_run_report(report, config.out)
    print(f"Task {task_name} {'passed' if report.passed else 'failed'}")
    return report
