# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from .result import REPORT_COLUMNS, LossReport, ProbeReport, reports_to_rows
from .experiment import CollectConfig, ExperimentConfig, ProbeSpec, Seeds
