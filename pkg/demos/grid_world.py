"""
The penguin grid world
======================

A fish behind a wall of fire, with one gap: the storm cell, where the chosen
move is replaced by a random one three times out of four.
"""
import numpy as np

from ader.environments import GridLayout, GridWorld, map_action

layout = GridLayout.default()
print(layout.to_text())

# actions in [-1, 1] fall into four bins: up, right, down, left
for a in (-0.9, -0.3, 0.2, 0.8):
    print(a, "->", ["up", "right", "down", "left"][map_action(a)])

env = GridWorld(rng=np.random.default_rng(0))
env.reset()

# walk straight up through the storm until the episode ends
total, steps = 0.0, 0
while True:
    res = env.step(-0.75)
    total, steps = total + res.reward, steps + 1
    if res.info["overridden"]:
        print("storm pushed us", ["up", "right", "down", "left"][res.info["direction"]])
    if res.done or res.timeout:
        break
print(f"reached fish={res.done} after {steps} steps, return {total}")
