"""
Growing cloud masks
===================

Clouds are grown as connected blobs until the requested share of the frame
is covered. The same seed always gives the same mask.
"""

from coastfill import synthesize_cloud

for rate in (0.05, 0.2, 0.5):
    cloud = synthesize_cloud((24, 48), rate, seed=3)
    print(f"\nrate {rate:.2f} -> achieved {cloud.mean():.3f}")
    for row in cloud[::2]:
        print("".join("@" if v else "." for v in row))

a = synthesize_cloud((64, 64), 0.3, seed=11)
b = synthesize_cloud((64, 64), 0.3, seed=11)
print("\nsame seed, same mask:", bool((a == b).all()))
