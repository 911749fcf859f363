from ifs_experiment_utils.tasks.base_task import BaseTask, run_task
from ifs_experiment_utils.tasks.sample_task import SampleTask
from ifs_experiment_utils.tasks.separation_task import SeparationTask
from ifs_experiment_utils.tasks.relations_task import RelationsTask
from ifs_experiment_utils.tasks.approx_task import ApproxTask
from ifs_experiment_utils.tasks.report_task import ReportTask
