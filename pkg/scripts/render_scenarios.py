#!/usr/bin/env python3
"""Render SVG snapshots of both bundled scenarios: lane geometry, corridor
bounds, stop marker, obstacle and the nominal stop pose."""

import os
import sys

from teleassist.svgdump import render_scene
from teleassist.world import Perception, load_scenario

OUT = sys.argv[1] if len(sys.argv) > 1 else "docs"

for name in ("A", "B"):
    scenario = load_scenario(name)
    perception = Perception(scenario)
    env = perception.perceive(scenario.initial_world())
    doc = render_scene(perception.path, env.corridor,
                       obstacles=[fp for _, fp in env.obstacle_footprints],
                       ego=scenario.initial_world().ego)
    os.makedirs(OUT, exist_ok=True)
    path = os.path.join(OUT, f"scenario_{name.lower()}.svg")
    with open(path, "w") as fh:
        fh.write(doc)
    print("wrote", path)
