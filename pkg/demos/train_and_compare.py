"""
Storm visits under three target rules
=====================================

Short runs of the mean target (ddpg), the clipped minimum (td3) and the
scheduled multiplier (basic). Longer runs and more seeds via the CLI:

    ader ablate --seeds 8 --variants ddpg,td3,basic --target-noise 0 --out runs/
"""
from ader import AgentConfig, RunConfig
from ader.harness import run_ablation, summarize_ablation

base = RunConfig(
    agent=AgentConfig(hidden=(32, 32), batch_size=64, target_noise_std=0.0),
    total_env_steps=6_000, eval_every=2_000, eval_episodes=5,
)
rows = run_ablation(base, variants=("ddpg", "td3", "basic"), seeds=range(2))

for r in rows:
    print(f"{r.variant:<6} seed {r.seed}  return {r.final_return:8.2f}  storm visits {r.storm_visits}")

for variant, s in summarize_ablation(rows).items():
    print(variant, "median return", s["median_return"], "median storm visits", s["median_storm_visits"])
