"""A seeded experiment, its report file, and replaying one trial from its sub-seed.

Run: python3 demos/04_experiment_report.py
"""

import tempfile
from pathlib import Path

from localcorrect.harness import ExperimentConfig, emit_report, load_report, run_experiment, run_trial

cfg = ExperimentConfig(family="psf", k=2, n=40, epsilon=0.001, trials=4, profile="scaled:20", seed=42)
report = run_experiment(cfg)
print("summary:", report.summary)

out = Path(tempfile.mkdtemp()) / "psf.csv"
emit_report(report, out, "csv")
print(out.read_text())
assert load_report(out).rows == report.rows

row = report.rows[1]
print("replaying trial 1 from sub-seed", row.sub_seed, "->", run_trial(cfg, row.sub_seed, 1) == row)
