"""Run every adversarial de-identifier against the analytic toy embedder.

Attacks push the embedding of the face away from the original while staying
inside an L-infinity budget; the table reports the remaining cosine
similarity, the pixel budget actually used and the SSIM to the input.
"""

import argparse

import numpy as np

from deidbench.adversarial import ATTACKS, attack_params
from deidbench.metrics import ssim
from deidbench.surrogate import toy_embedder
from deidbench.synthetic import synthetic_face


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--faces", type=int, default=5)
    ap.add_argument("--size", type=int, default=64)
    args = ap.parse_args()

    emb = toy_embedder(0)
    rng = np.random.default_rng(0)
    faces = [synthetic_face(args.size, 3, rng) for _ in range(args.faces)]
    print(f"{'attack':<10} {'eps*255':>7} {'cos':>6} {'Linf*255':>8} {'SSIM':>6}")
    for name, fn in ATTACKS.items():
        p = attack_params(name)
        sims, used, fid = [], [], []
        for i, x in enumerate(faces):
            out = fn(x, emb, attack_params(name, rng_seed=i))
            sims.append(emb.embed(out) @ emb.embed(x))
            used.append(np.abs(out - x).max())
            fid.append(ssim(out, x))
        print(f"{name:<10} {p.epsilon * 255:7.1f} {np.mean(sims):6.3f} {np.max(used) * 255:8.2f} {np.mean(fid):6.3f}")


if __name__ == "__main__":
    main()
