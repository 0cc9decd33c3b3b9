"""Blur, pixelate and mask a synthetic face inside its scene.

The face is aligned from its five landmarks, de-identified in crop space and
blended back; everything outside the face square stays untouched.
"""

import argparse
import os

import numpy as np

from deidbench.geometry import BlendSpec, align_face, reinsert
from deidbench.imgcore import save_image
from deidbench.metrics import psnr, ssim
from deidbench.naive import BlurParams, MaskParams, PixelateParams, blur, mask, pixelate
from deidbench.synthetic import synthetic_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_out/naive")
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    scene, landmarks, _ = synthetic_scene(rng=args.seed)
    aligned = align_face(scene, landmarks)
    save_image(scene, os.path.join(args.out, "original.png"))
    save_image(aligned.face, os.path.join(args.out, "aligned.png"))

    variants = {
        "blur_k51": lambda f: blur(f, BlurParams()),
        "blur_sigma10": lambda f: blur(f, BlurParams(sigma=10.0)),
        "pixelate_16": lambda f: pixelate(f, PixelateParams(16)),
        "pixelate_8_linear": lambda f: pixelate(f, PixelateParams(8, "linear")),
        "mask_random": lambda f: mask(f, MaskParams(mask_type="random_color"), rng_seed=args.seed),
    }
    print(f"{'variant':<20} {'PSNR':>7} {'SSIM':>6}  changed px")
    for name, fn in variants.items():
        out = reinsert(scene, fn(aligned.face), aligned.transform, BlendSpec(8.0))
        changed = np.any(out != scene, axis=2).mean()
        print(f"{name:<20} {psnr(scene, out):7.2f} {ssim(scene, out):6.3f}  {100 * changed:5.1f}%")
        save_image(out, os.path.join(args.out, f"{name}.png"))
    print(f"images written to {args.out}")


if __name__ == "__main__":
    main()
