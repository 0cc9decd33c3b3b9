"""k-Same substitution against a small synthetic gallery.

Each variant replaces the probe with material from its k nearest gallery faces
(pixel L2). The larger k is, the further the output drifts from the probe.
"""

import argparse

import numpy as np

from deidbench.ksame import Gallery, KSameParams, k_same, knn_pixel
from deidbench.synthetic import synthetic_face


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gallery-size", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    gallery = Gallery(np.stack([synthetic_face(64, 3, rng) for _ in range(args.gallery_size)]))
    probe = synthetic_face(64, 3, rng)
    print("nearest gallery indices:", list(knn_pixel(probe, gallery, 5)))

    print(f"{'variant':<22} {'k':>3}  L2 to probe")
    for k in (1, 5, 10):
        for variant, mode in (("average", "closest"), ("select", "closest"), ("select", "random"), ("furthest", "closest")):
            out = k_same(probe, gallery, KSameParams(k=k, variant=variant, selection_mode=mode, rng_seed=args.seed))
            label = variant if variant != "select" else f"select/{mode}"
            print(f"{label:<22} {k:>3}  {np.linalg.norm(out - probe):8.3f}")


if __name__ == "__main__":
    main()
