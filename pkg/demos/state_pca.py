"""
Where did the agent go?
=======================

Train briefly on the point mass, then project the visited states onto their
principal axes and bin them into a heatmap.
"""
import tempfile
from pathlib import Path

import numpy as np

from ader import AgentConfig, RunConfig, run_training
from ader.analysis import analyze_states, histogram2d, pca_fit, pca_project

out = Path(tempfile.mkdtemp())
cfg = RunConfig(agent=AgentConfig(obs_dim=1, hidden=(32, 32), batch_size=64), env="pointmass",
                total_env_steps=3_000, eval_every=1_000, eval_episodes=3, state_stride=1, out_dir=str(out))
run_training(cfg)

# point-mass states are 1-d; stack position with its successor to get a 2-d cloud
x = np.fromfile(out / "states.f64", dtype="<f8")
pairs = np.column_stack([x[:-1], x[1:]])

model = pca_fit(pairs, k=2)
print("axes\n", model.axes)
print("variances", model.variances)

counts, xe, ye = histogram2d(pca_project(model, pairs), bins=8)
print(counts.astype(int))

# the same pipeline from a states file, as the CLI's analyze command does
grid_run = Path(tempfile.mkdtemp())
run_training(RunConfig(agent=AgentConfig(hidden=(16, 16), batch_size=32), total_env_steps=2_000,
                       eval_every=1_000, eval_episodes=2, state_stride=1, out_dir=str(grid_run)))
m = analyze_states(grid_run / "states.f64", grid_run, dim=2, bins=5)
print((grid_run / "heatmap.csv").read_text())
