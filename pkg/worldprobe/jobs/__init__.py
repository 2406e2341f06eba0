# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from .pipeline import ExperimentJob, ordering_summary, read_report, write_report
