"""
A synthetic coastal stack
=========================

Generate a small stack of classified frames and look at how the water
fraction moves with the seasonal level.
"""

from coastfill import SynthConfig, class_fractions, generate_landscape

stack = generate_landscape(SynthConfig(seed=7, frames=24, rows=32, cols=32))
print(stack.header)

fractions = class_fractions(stack)
for t in range(0, stack.frames, 4):
    water, wetland, land, _ = fractions[t]
    print(f"frame {t:2d}  water {water:.2f}  wetland {wetland:.2f}  land {land:.2f}")

# A coarse picture of the first frame: ~ water, : wetland, # land
glyphs = {1: "~", 2: ":", 3: "#"}
for row in stack.frame(0)[::2]:
    print("".join(glyphs[int(v)] for v in row))
