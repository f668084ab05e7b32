"""
Iteration counts across lambda1
===============================

A reduced run of the Gaussian-noise cells of the parameter-variation
preset: mean relative error and mean iteration count (outer steps plus
Newton steps or ADMM sweeps) for each solver.
"""

import json
from pathlib import Path

from gelnet import RunConfig
from gelnet import bench

PRESET = Path(__file__).resolve().parent.parent / "configs" / "table1.json"
preset = json.loads(PRESET.read_text())
preset["bench"]["trials"] = 3
cfg = RunConfig.from_dict(preset)

cells, jobs = bench.build_jobs(cfg)
# keep the preset's cell numbering so trial seeds match a full run
jobs = [j for j in jobs if j.cell["noise_kind"] == "GN"]
results = bench.run_jobs(jobs)

print(f"{'cell':<12} {'solver':<8} {'RE':>9} {'iters':>8} {'outer':>6}")
for ci in sorted({j.cell_index for j in jobs}):
    for solver in cfg.bench.solvers:
        group = [r for r in results if r["cell_index"] == ci and r["solver"] == solver]
        row = bench.summarize(cfg, ci, cells[ci], solver, group)
        print(f"{row['cell_id']:<12} {solver:<8} {row['re']:9.2e} {row['iter_mean']:8.1f} "
              f"{row['outer_mean']:6.1f}")
