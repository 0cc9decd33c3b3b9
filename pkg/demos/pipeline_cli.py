"""End-to-end run through the command line.

Builds a small synthetic dataset (scenes, manifest, detection sidecar), writes
an experiment YAML, then calls ``deidbench validate``, ``deid`` and ``video``
exactly as a shell script would.
"""

import argparse
import os

import numpy as np

from deidbench.cli import main as cli
from deidbench.geometry import BlendSpec, SimilarityTransform, face_quad, reinsert, template_for
from deidbench.imgcore import PixelRect, save_image
from deidbench.pipeline import DetectionRecord, write_detections
from deidbench.synthetic import smooth_noise, synthetic_face, synthetic_scene


def bbox_of(t, width, height):
    q = face_quad(t, 112)
    x0, y0 = np.maximum(np.floor(q.min(axis=0)).astype(int), 0)
    x1, y1 = np.ceil(q.max(axis=0)).astype(int)
    return PixelRect(int(x0), int(y0), int(min(x1, width - 1) - x0 + 1), int(min(y1, height - 1) - y0 + 1))


def build_images(root, n):
    os.makedirs(os.path.join(root, "imgs"), exist_ok=True)
    lines, recs = [], []
    for i in range(n):
        img, lm, bb = synthetic_scene(rng=i)
        save_image(img, os.path.join(root, "imgs", f"{i:03d}.png"))
        lines.append(f"img{i:03d}\timgs/{i:03d}.png\tperson{i % 4}\n")
        recs.append(DetectionRecord(f"img{i:03d}", bb, lm, 0.99))
    with open(os.path.join(root, "manifest.tsv"), "w") as fh:
        fh.writelines(lines)
    write_detections(os.path.join(root, "dets.jsonl"), recs)


def build_video(root, n):
    rng = np.random.default_rng(1)
    bg = smooth_noise(150, 200, 3, rng)
    face = synthetic_face(112, 3, rng)
    os.makedirs(os.path.join(root, "frames"), exist_ok=True)
    recs = []
    for i in range(n):
        to_src = SimilarityTransform.from_params(0.8, 0.0, (20.0 + 2 * i, 20.0))
        save_image(reinsert(bg, face, to_src.inverse(), BlendSpec(0.0)), os.path.join(root, "frames", f"f{i}.png"))
        if i % 4 == 0:  # detections only on stride frames
            recs.append(DetectionRecord(i, bbox_of(to_src.inverse(), 200, 150), to_src.apply(template_for(112)), 0.9))
    write_detections(os.path.join(root, "frame_dets.jsonl"), recs)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default="demo_out/pipeline")
    args = ap.parse_args()
    root = os.path.abspath(args.root)
    build_images(root, 8)
    build_video(root, 12)
    with open(os.path.join(root, "experiment.yaml"), "w") as fh:
        fh.write("dataset: {manifest: manifest.tsv, detections: dets.jsonl}\n"
                 "method: {name: pixelate, params: {block_size: 12}}\n"
                 "output_dir: out_images\nlabel: pixelate_12\nseed: 0\n")
    with open(os.path.join(root, "video.yaml"), "w") as fh:
        fh.write("video: {frames: frames, detections: frame_dets.jsonl, detect_every: 4}\n"
                 "method: {name: blur, params: {sigma: 6.0}}\noutput_dir: out_video\n")

    cfg = os.path.join(root, "experiment.yaml")
    for argv in (["validate", "-c", cfg],
                 ["deid", "-c", cfg],
                 ["deid", "-c", cfg, "--set", "method.params.block_size=24", "--set", "output_dir=out_coarse"],
                 ["video", "-c", os.path.join(root, "video.yaml")],
                 ["ensemble-config", "--preserve", "age", "--reference-dataset", "gallery.txt"]):
        print("$ deidbench", " ".join(argv))
        print(f"exit code {cli(argv)}\n")


if __name__ == "__main__":
    main()
