from .io import emit_outputs, ingest_samples, read_rows, read_summary, write_samples
from .sweep import ExperimentConfig, ResultRow, SummaryRow, estimate_std, run_sweep
