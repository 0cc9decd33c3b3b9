"""Privacy, quality and utility arithmetic on stand-in embeddings.

Real recognizer embeddings are ingested from files in practice; here a weak
and a strong "de-identification" are simulated by mixing each original
embedding with noise, which shows how VA, TAR@FAR and PSR move.
"""

import argparse

import numpy as np

from deidbench.metrics import calibrate_threshold, deid_pairs, fid, identity_pairs, privacy_report
from deidbench.metrics.utility import accuracy, mae, nme


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--identities", type=int, default=40)
    ap.add_argument("--per-identity", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    centres = rng.normal(size=(args.identities, 64))
    labels = np.repeat(np.arange(args.identities), args.per_identity)
    orig = centres[labels] + 0.4 * rng.normal(size=(len(labels), 64))

    clean = identity_pairs(orig, labels)
    t = calibrate_threshold(clean.genuine_scores, clean.impostor_scores, "accuracy")
    t_far = calibrate_threshold(clean.genuine_scores, clean.impostor_scores, "far", 0.001)
    print(f"threshold {t.value:.3f} ({t.provenance}), FAR threshold {t_far.value:.3f}")

    for strength in (0.5, 2.0, 8.0):
        deid = orig + strength * rng.normal(size=orig.shape)
        rep = privacy_report(deid_pairs(orig, deid), t, far_threshold=t_far)
        print(f"noise {strength:>4}: VA {rep['VA']:5.1f}  TAR@FAR {rep['TAR_at_FAR']:5.1f}  PSR {rep['PSR']:5.1f}")

    real = rng.normal(size=(500, 16))
    for shift in (0.0, 0.5, 1.0):
        print(f"FID for a mean shift of {shift} per dimension: {fid(real, rng.normal(shift, 1.0, size=(500, 16))):.2f}")

    ages = rng.uniform(18, 70, 50)
    genders = rng.choice(["f", "m"], 50)
    marks = [rng.uniform(20, 90, (5, 2)) for _ in range(50)]
    print(f"age MAE {mae(ages + rng.normal(0, 4, 50), ages):.2f}, "
          f"gender Acc {accuracy(np.where(rng.random(50) < 0.9, genders, 'x'), genders):.1f}%, "
          f"landmark NME {nme([m + rng.normal(0, 1, m.shape) for m in marks], marks):.3f}")


if __name__ == "__main__":
    main()
