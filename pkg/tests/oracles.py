"""Slow scalar reference implementations used as independent test oracles.

Everything here is written with explicit Python loops (or a different library
routine) so it shares no code path with the vectorised package code.
"""

import math

import numpy as np
import scipy.linalg


def psnr_oracle(a, b, cap=99.0):
    total, n = 0.0, 0
    for x, y in zip(np.ravel(a), np.ravel(b)):
        total += (float(x) - float(y)) ** 2
        n += 1
    mse = total / n
    if mse == 0:
        return cap
    return min(10 * math.log10(1 / mse), cap)


def _gray(img):
    img = np.asarray(img, float)
    if img.shape[2] == 1:
        return [[float(img[y, x, 0]) for x in range(img.shape[1])] for y in range(img.shape[0])]
    return [[0.299 * img[y, x, 0] + 0.587 * img[y, x, 1] + 0.114 * img[y, x, 2]
             for x in range(img.shape[1])] for y in range(img.shape[0])]


def ssim_oracle(a, b, win=11, sigma=1.5):
    ga, gb = _gray(a), _gray(b)
    h, w = len(ga), len(ga[0])
    r = win // 2
    ker = [[math.exp(-((i - r) ** 2 + (j - r) ** 2) / (2 * sigma ** 2)) for j in range(win)] for i in range(win)]
    tot = sum(map(sum, ker))
    ker = [[v / tot for v in row] for row in ker]
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    vals = []
    for y in range(r, h - r):
        for x in range(r, w - r):
            mx = my = sxx = syy = sxy = 0.0
            for i in range(win):
                for j in range(win):
                    k = ker[i][j]
                    p, q = ga[y + i - r][x + j - r], gb[y + i - r][x + j - r]
                    mx += k * p
                    my += k * q
                    sxx += k * p * p
                    syy += k * q * q
                    sxy += k * p * q
            vx, vy, cxy = sxx - mx * mx, syy - my * my, sxy - mx * my
            vals.append((2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return sum(vals) / len(vals)


def fid_oracle(real, gen):
    """Uses scipy's general matrix square root instead of an eigen-decomposition."""
    real, gen = np.asarray(real, float), np.asarray(gen, float)
    mu1, mu2 = real.mean(axis=0), gen.mean(axis=0)
    s1, s2 = np.cov(real, rowvar=False), np.cov(gen, rowvar=False)
    s1, s2 = np.atleast_2d(s1), np.atleast_2d(s2)
    cross = scipy.linalg.sqrtm(s1 @ s2)
    cross = np.real(cross)
    return float(np.sum((mu1 - mu2) ** 2) + np.trace(s1) + np.trace(s2) - 2 * np.trace(cross))


def cosine(u, v):
    dot = sum(float(a) * float(b) for a, b in zip(u, v))
    nu = math.sqrt(sum(float(a) ** 2 for a in u))
    nv = math.sqrt(sum(float(b) ** 2 for b in v))
    return dot / (nu * nv)


def privacy_oracle(genuine, impostor, t, t_far):
    """Counting definitions of VA, PSR and TAR, in percent."""
    gs = [cosine(a, b) for a, b in genuine]
    im = [cosine(a, b) for a, b in impostor]
    correct = sum(1 for s in gs if s >= t) + sum(1 for s in im if s < t)
    return {
        "VA": 100.0 * correct / (len(gs) + len(im)),
        "PSR": 100.0 * sum(1 for s in gs if s < t) / len(gs),
        "TAR_at_FAR": 100.0 * sum(1 for s in gs if s >= t_far) / len(gs),
    }


def accuracy_at(genuine_scores, impostor_scores, t):
    ok = sum(1 for s in genuine_scores if s >= t) + sum(1 for s in impostor_scores if s < t)
    return ok / (len(genuine_scores) + len(impostor_scores))


def best_accuracy(genuine_scores, impostor_scores):
    """Maximum accuracy over every distinct operating point (each score, plus accept-nothing)."""
    points = sorted(set(genuine_scores) | set(impostor_scores))
    cands = points + [math.inf]
    return max(accuracy_at(genuine_scores, impostor_scores, t) for t in cands)


def far_at(impostor_scores, t):
    return sum(1 for s in impostor_scores if s >= t) / len(impostor_scores)


def mae_oracle(pred, gt):
    return sum(abs(float(p) - float(g)) for p, g in zip(pred, gt)) / len(gt)


def acc_oracle(pred, gt):
    return 100.0 * sum(1 for p, g in zip(pred, gt) if p == g) / len(gt)


def nme_oracle(pred, gt, eyes):
    per = []
    for p, g in zip(pred, gt):
        iod = math.dist(g[eyes[0]], g[eyes[1]])
        per.append(sum(math.dist(a, b) for a, b in zip(p, g)) / len(g) / iod)
    return sum(per) / len(per)
