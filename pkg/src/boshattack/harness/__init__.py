from .metrics import MetricsSummary, compute_metrics
from .outputs import emit_outputs, trace_svg, write_trace_csv
from .runs import ExperimentSpec, attack_multi_init, boundary_slice, run_experiment
