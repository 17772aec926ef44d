"""
Running an experiment from a config file
========================================

Everything the command line does is available from Python. This loads the
stability config, runs it and writes the report next to the CSV series.
The equivalent shell call is::

    gchlab experiment --config demos/configs/stability.cfg --out out/stability
"""

# %%
from pathlib import Path

from gchlab.harness.cli import save_report
from gchlab.harness.config import load_config
from gchlab.harness.experiments import EXPERIMENTS

here = Path(__file__).resolve().parent
cfg = load_config(here / "configs" / "stability.cfg")
report = EXPERIMENTS[cfg.name](cfg)
for line in report.summary_lines():
    print(line)

# %%
written = save_report(report, here.parent / cfg.output_dir)
print("wrote", ", ".join(p.name for p in written))
