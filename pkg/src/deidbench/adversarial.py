"""Adversarial de-identifiers driven by a :class:`~deidbench.surrogate.GradientOracle`.

All attacks work on the aligned face crop and, by default, push the cosine
similarity between the perturbed and the original embedding down. Each one
returns the iterate with the lowest identity similarity along its trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ConfigError, OracleFailure
from .imgcore import interp_matrix
from .metrics.quality import ssim_and_grad
from .naive import gaussian_kernel

NORMS = ("Linf", "L2", "L1")


@dataclass(frozen=True)
class AttackParams:
    epsilon: float = 8 / 255
    alpha: float = 2 / 255
    num_iter: int = 20
    norm: str = "Linf"
    decay_factor: float = 1.0
    kernel_size: int = 15
    prob: float = 0.7
    gamma: float = 10.0
    lambda_dsim: float = 1.0
    random_start: bool = True
    targeted: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0", "epsilon")
        if self.alpha <= 0:
            raise ConfigError("alpha must be > 0", "alpha")
        if self.num_iter < 0:
            raise ConfigError("num_iter must be >= 0", "num_iter")
        if self.norm not in NORMS:
            raise ConfigError(f"norm must be one of {NORMS}", "norm")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError("kernel_size must be a positive odd integer", "kernel_size")
        if not 0.0 <= self.prob <= 1.0:
            raise ConfigError("prob must lie in [0, 1]", "prob")


# per-method defaults layered over AttackParams
ATTACK_DEFAULTS = {
    "pgd": {},
    "mifgsm": {"random_start": False},
    "tidim": {"random_start": False},
    "tipim": {"epsilon": 16 / 255, "num_iter": 100, "random_start": False},
    "chameleon": {"epsilon": 16 / 255, "alpha": 0.001, "num_iter": 20},
}


def attack_params(method: str, **overrides) -> AttackParams:
    return AttackParams(**{**ATTACK_DEFAULTS[method], **overrides})


class _Objective:
    """Signed similarity: minimised for untargeted, maximised for targeted attacks."""

    def __init__(self, oracle, target, targeted):
        self.oracle = oracle
        self.target = np.asarray(target, dtype=np.float64)
        self.sign = -1.0 if targeted else 1.0

    def value_grad(self, x):
        try:
            if hasattr(self.oracle, "sim_and_grad"):
                sim, g = self.oracle.sim_and_grad(x, self.target)
            else:
                e = self.oracle.embed(x)
                sim = float(e @ self.target)
                g = self.oracle.grad_sim(x, self.target)
        except OracleFailure:
            raise
        except Exception as exc:  # oracle implementations are third-party code
            raise OracleFailure(f"gradient oracle failed: {exc}") from exc
        g = np.asarray(g, dtype=np.float64)
        if g.shape != x.shape or not np.all(np.isfinite(g)) or not math.isfinite(sim):
            raise OracleFailure("gradient oracle returned a malformed or non-finite result")
        return self.sign * sim, self.sign * g

    def value(self, x):
        try:
            e = self.oracle.embed(x)
        except Exception as exc:
            raise OracleFailure(f"gradient oracle failed: {exc}") from exc
        sim = float(np.asarray(e, dtype=np.float64) @ self.target)
        if not math.isfinite(sim):
            raise OracleFailure("oracle embedding is not finite")
        return self.sign * sim


def _objective(face, oracle, p: AttackParams, target):
    if p.targeted:
        if target is None:
            raise ConfigError("targeted attack needs a target embedding", "targeted")
    else:
        try:
            target = oracle.embed(face)
        except Exception as exc:
            raise OracleFailure(f"gradient oracle failed: {exc}") from exc
    return _Objective(oracle, target, p.targeted)


def project(x, face, epsilon, norm):
    """Project ``x`` onto the ``norm`` ball of radius ``epsilon`` around ``face``, then clamp to [0, 1]."""
    delta = x - face
    if norm == "Linf":
        delta = np.clip(delta, -epsilon, epsilon)
    elif norm == "L2":
        n = np.linalg.norm(delta)
        if n > epsilon:
            delta = delta * (epsilon / n)
    elif norm == "L1":
        delta = _project_l1(delta, epsilon)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return _exact_ball(face, delta, epsilon, norm)


def _norm(delta, norm):
    if norm == "Linf":
        return np.abs(delta).max(initial=0.0)
    if norm == "L2":
        return float(np.linalg.norm(delta))
    return float(np.abs(delta).sum())


def _exact_ball(face, delta, epsilon, norm):
    # face + delta - face can round past epsilon by an ulp; pull such pixels back
    x = np.clip(face + delta, 0.0, 1.0)
    if norm == "Linf":
        for _ in range(4):
            bad = np.abs(x - face) > epsilon
            if not bad.any():
                break
            x[bad] = np.nextafter(x[bad], face[bad])
        return x
    shrink = 1e-15
    while _norm(x - face, norm) > epsilon:
        x = np.clip(face + delta * (1.0 - shrink), 0.0, 1.0)
        shrink *= 4
    return x


def _project_l1(delta, radius):
    flat = delta.ravel()
    a = np.abs(flat)
    if a.sum() <= radius:
        return delta
    if radius <= 0:
        return np.zeros_like(delta)
    # sort-based Euclidean projection onto the L1 ball
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(u) + 1)
    hits = np.nonzero(u * k > css - radius)[0]
    rho = hits[-1] if len(hits) else 0
    theta = (css[rho] - radius) / (rho + 1.0)
    out = np.sign(flat) * np.maximum(a - theta, 0.0)
    # clip rounding so the L1 norm never exceeds the radius
    s = np.abs(out).sum()
    if s > radius:
        out *= radius / s
    return out.reshape(delta.shape)


def step_direction(g, norm):
    if norm == "Linf":
        return np.sign(g)
    if norm == "L2":
        n = np.linalg.norm(g)
        return g / n if n > 0 else np.zeros_like(g)
    n = np.abs(g).sum()
    return g / n if n > 0 else np.zeros_like(g)


def random_start(face, epsilon, norm, rng):
    """Uniform draw from the ``norm`` ball (Linf) or a radially uniform draw (L2, L1)."""
    if epsilon == 0:
        return face.copy()
    if norm == "Linf":
        delta = rng.uniform(-epsilon, epsilon, size=face.shape)
    else:
        n = face.size
        direction = rng.standard_normal(face.shape) if norm == "L2" else rng.laplace(size=face.shape)
        ord_ = 2 if norm == "L2" else 1
        direction /= np.linalg.norm(direction.ravel(), ord=ord_)
        delta = direction * epsilon * rng.uniform() ** (1.0 / n)
    return project(face + delta, face, epsilon, norm)


def _start(face, p: AttackParams, rng):
    face = np.asarray(face, dtype=np.float64)
    if p.random_start:
        return random_start(face, p.epsilon, p.norm, rng)
    return face.copy()


def pgd(face, oracle, p: AttackParams = AttackParams(), target=None) -> np.ndarray:
    """Projected gradient descent on cosine similarity."""
    face = np.asarray(face, dtype=np.float64)
    obj = _objective(face, oracle, p, target)
    rng = np.random.default_rng(p.rng_seed)
    x = _start(face, p, rng)
    best, best_loss = x, math.inf
    for _ in range(p.num_iter):
        loss, g = obj.value_grad(x)
        if loss < best_loss:
            best, best_loss = x, loss
        x = project(x - p.alpha * step_direction(g, p.norm), face, p.epsilon, p.norm)
    if obj.value(x) < best_loss:
        best = x
    return best


def diverse_input(x, rng):
    """Random shrink to ``[0.9 S, S]`` then zero-pad back at a random offset.

    Returns the transformed image and a function mapping a gradient on it
    back to ``x`` (the transform is linear).
    """
    h, w, c = x.shape
    new_h = int(rng.integers(math.ceil(0.9 * h), h + 1))
    new_w = max(1, min(w, int(round(w * new_h / h))))
    top = int(rng.integers(0, h - new_h + 1))
    left = int(rng.integers(0, w - new_w + 1))
    ay = interp_matrix(new_h, h, "bilinear")
    ax = interp_matrix(new_w, w, "bilinear")
    out = np.zeros_like(x)
    out[top:top + new_h, left:left + new_w] = np.einsum("yi,ijc,xj->yxc", ay, x, ax, optimize=True)

    def backward(g):
        inner = g[top:top + new_h, left:left + new_w]
        return np.einsum("yi,yxc,xj->ijc", ay, inner, ax, optimize=True)

    return out, backward


def smooth_gradient(g, kernel_size):
    """Gaussian smoothing (sigma = (k-1)/6) with wrap-around borders, so the sum is preserved."""
    if kernel_size == 1:
        return g
    taps = gaussian_kernel(kernel_size, (kernel_size - 1) / 6.0)
    out = correlate1d(g, taps, axis=0, mode="wrap")
    return correlate1d(out, taps, axis=1, mode="wrap")


def _momentum_attack(face, oracle, p: AttackParams, target, prob, kernel_size, gamma):
    if p.norm != "Linf":
        raise ConfigError("momentum attacks use sign steps and support only the Linf norm", "norm")
    face = np.asarray(face, dtype=np.float64)
    obj = _objective(face, oracle, p, target)
    rng = np.random.default_rng(p.rng_seed)
    x = _start(face, p, rng)
    momentum = np.zeros_like(face)

    def perceptual(xc):
        if gamma == 0:
            return 0.0, None
        s, sg = ssim_and_grad(xc, face)
        return gamma * (1.0 - s), -gamma * sg

    best, best_sim = x, math.inf
    for _ in range(p.num_iter):
        use_di = prob > 0 and rng.random() < prob
        if use_di:
            xt, back = diverse_input(x, rng)
            _, gt = obj.value_grad(xt)
            g = back(gt)
            sim = obj.value(x)
        else:
            sim, g = obj.value_grad(x)
        _, pg = perceptual(x)
        if pg is not None:
            g = g + pg
        if sim < best_sim:
            best, best_sim = x, sim
        g = smooth_gradient(g, kernel_size)
        l1 = np.abs(g).sum()
        momentum = p.decay_factor * momentum + (g / l1 if l1 > 0 else g)
        x = project(x - p.alpha * np.sign(momentum), face, p.epsilon, "Linf")
    if obj.value(x) < best_sim:
        best = x
    return best


def mi_fgsm(face, oracle, p: AttackParams = attack_params("mifgsm"), target=None) -> np.ndarray:
    """Momentum iterative FGSM (L1-normalised gradient accumulation, sign steps)."""
    return _momentum_attack(face, oracle, p, target, prob=0.0, kernel_size=1, gamma=0.0)


def ti_dim(face, oracle, p: AttackParams = attack_params("tidim"), target=None) -> np.ndarray:
    """MI-FGSM plus diverse inputs and translation-invariant gradient smoothing."""
    return _momentum_attack(face, oracle, p, target, prob=p.prob, kernel_size=p.kernel_size, gamma=0.0)


def tip_im(face, oracle, p: AttackParams = attack_params("tipim"), target=None,
           use_diverse_input: bool = True) -> np.ndarray:
    """TI-DIM on ``cos + gamma * (1 - SSIM(x, face))``; the SSIM gradient is analytic."""
    prob = p.prob if use_diverse_input else 0.0
    return _momentum_attack(face, oracle, p, target, prob=prob, kernel_size=p.kernel_size, gamma=p.gamma)


def chameleon(face, oracle, p: AttackParams = attack_params("chameleon"), target=None) -> np.ndarray:
    """Plain gradient descent on ``cos + lambda_t * mean(delta^2)``.

    ``lambda_t`` decays linearly from ``lambda_dsim`` to 0 over the run; as
    for every attack, the iterate with the lowest similarity is returned.
    """
    face = np.asarray(face, dtype=np.float64)
    obj = _objective(face, oracle, p, target)
    rng = np.random.default_rng(p.rng_seed)
    x = _start(face, p, rng)
    n_iter = p.num_iter
    best, best_sim = x, math.inf
    for t in range(n_iter):
        lam = p.lambda_dsim * (1.0 - t / n_iter)
        delta = x - face
        sim, g = obj.value_grad(x)
        if sim < best_sim:
            best, best_sim = x, sim
        g = g + lam * 2.0 * delta / delta.size
        x = project(x - p.alpha * g, face, p.epsilon, p.norm)
    if obj.value(x) < best_sim:
        best = x
    return best


ATTACKS = {
    "pgd": pgd,
    "mifgsm": mi_fgsm,
    "tidim": ti_dim,
    "tipim": tip_im,
    "chameleon": chameleon,
}

