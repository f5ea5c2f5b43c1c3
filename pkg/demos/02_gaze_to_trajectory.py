#!/usr/bin/env python3
"""
From pixel fixations to token trajectories, with uncertainty augmentation
=========================================================================

Tokens live in axis-aligned glyph boxes on a monospace grid. This demo
maps a noisy fixation stream onto token indices, merges dwells, and then
expands the result into weighted jittered copies that model calibration
error in the original recording.
"""

import numpy as np

from codegaze.gaze import (Fixation, LayoutSpec, augment, build_trajectory,
                           token_box)
from codegaze.lexer import tokenize

snippet = tokenize("for i = 0 ; i < n\n  acc = acc + i ;", {"for"}, snippet_id="demo")
layout = LayoutSpec(origin_x_px=20, origin_y_px=20, char_width_px=9, line_height_px=18)

# Simulate a reader: dwell near token centers 0, 1, 5, 5, 12 with pixel
# noise and one blink-length fixation that should be filtered out.
rng = np.random.default_rng(0)
visit = [0, 1, 5, 5, 12]
fixations = []
for t, idx in enumerate(visit):
    x0, y0, x1, y1 = token_box(layout, snippet.tokens[idx])
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    fixations.append(Fixation(t * 200.0, cx + rng.normal(0, 2), cy + rng.normal(0, 2), 180.0))
fixations.insert(2, Fixation(250.0, 400.0, 400.0, 20.0))  # too short, dropped

traj = build_trajectory(fixations, layout, snippet, min_dur_ms=50, radius_px=30)
print("fixated token indices:", visit)
print("recovered trajectory:  ", traj.steps, "(repeat dwell on 5 merged)")
print("visited tokens:", [snippet.tokens[s].text for s in traj.steps])

# Augmentation: the original keeps half the weight, m jittered copies
# split the rest in proportion to how likely each jitter was. Steps only
# move to same-line neighbors within two kernel widths.
out = augment(traj, snippet, sigma_tokens=1.0, m=4, seed=7)
print(f"\naugmented into {len(out)} weighted trajectories "
      f"(weights sum to {sum(t.weight for t in out):.12f})")
for i, copy in enumerate(out):
    tag = "original" if i == 0 else f"copy {i}"
    print(f"  {tag:<9} w={copy.weight:.4f}  steps={copy.steps}")
