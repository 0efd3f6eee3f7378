"""Per-input smoothing-parameter search: isotropic baseline and anisotropic volume maximization."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import dump_flat, load_flat, parse_flat
from .errors import ConfigError, DomainError, SpecKindError
from .nn_core import Classifier, forward_batch, weighted_input_gradient
from .smoothing import SmoothingSpec, draw_noise
from .stats import RngStream, std_normal_icdf, std_normal_pdf, stream_id

PHASE_ISO = 1
PHASE_ANCER = 2
PHASE_ISO_EVAL = 11
PHASE_ANCER_EVAL = 12

CLAMP = 1e-4
ISO_LEARNING_RATE = 0.04
ANCER_LEARNING_RATE = 0.01


@dataclass(frozen=True)
class OptimizerConfig:
    iterations: int = 100
    samples_per_iter: int = 100
    kappa: float = 2.0
    learning_rate: float | None = None  # None: 0.04 isotropic, 0.01 anisotropic
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    eval_samples: int = 10_000

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.samples_per_iter < 1:
            raise ConfigError("samples_per_iter must be >= 1")
        if not self.kappa > 0:
            raise ConfigError("kappa must be > 0")
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.eval_samples < 2:
            raise ConfigError("eval_samples must be >= 2")

    def lr_for(self, mode: str) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return ISO_LEARNING_RATE if mode == "isotropic" else ANCER_LEARNING_RATE


def parse_config_text(text: str, source: str = "<config>") -> OptimizerConfig:
    """Flat ``key = value`` lines; keys are OptimizerConfig field names, '#' starts a comment."""
    return parse_flat(text, OptimizerConfig, source)


def load_config(path) -> OptimizerConfig:
    return load_flat(path, OptimizerConfig)


def dump_config(cfg: OptimizerConfig) -> str:
    return dump_flat(cfg)


# -- gap surrogate -------------------------------------------------------------

@dataclass(frozen=True)
class SoftGapEstimate:
    value: float
    grad_theta: np.ndarray
    top_class: int
    runner_up: int
    scores: np.ndarray


def soft_gap(model: Classifier, x, spec: SmoothingSpec, m: int, rng: RngStream,
             eps: np.ndarray | None = None) -> SoftGapEstimate:
    """Differentiable Monte Carlo surrogate of the certification gap and its theta-gradient.

    Mean softmax scores over x + theta * eps_j pick the top two classes A, B.
    Gaussian: (Phi^-1(s_A) - Phi^-1(s_B)) / 2 with scores clamped to
    [1e-4, 1 - 1e-4]; uniform: s_A - s_B. The gradient goes through the
    reparameterization, d/dtheta_i = mean_j eps_ji * d/dx_i.
    Pass ``eps`` to reuse a fixed noise draw (common random numbers).
    """
    if spec.kind not in ("gaussian", "uniform"):
        raise SpecKindError(f"soft_gap supports gaussian or uniform smoothing, not {spec.kind}")
    if eps is None:
        if m < 2:
            raise DomainError("soft_gap needs m >= 2 samples")
        eps = draw_noise(spec, rng, m)
    m = eps.shape[0]
    if m < 2:
        raise DomainError("soft_gap needs m >= 2 samples")
    x = np.asarray(x, dtype=np.float64)
    xp = x + spec.theta * eps
    probs = forward_batch(model, xp)
    scores = probs.mean(axis=0)
    order = np.argsort(-scores, kind="stable")
    a, b = int(order[0]), int(order[1])
    weights = np.zeros(model.num_classes)
    if spec.kind == "gaussian":
        sa = min(max(scores[a], CLAMP), 1.0 - CLAMP)
        sb = min(max(scores[b], CLAMP), 1.0 - CLAMP)
        za, zb = std_normal_icdf(sa), std_normal_icdf(sb)
        value = 0.5 * (za - zb)
        if sa == scores[a]:
            weights[a] = 0.5 / std_normal_pdf(za)
        if sb == scores[b]:
            weights[b] = -0.5 / std_normal_pdf(zb)
    else:
        value = float(scores[a] - scores[b])
        weights[a], weights[b] = 1.0, -1.0
    if np.any(weights):
        _, gx = weighted_input_gradient(model, xp, weights / m)
        grad = np.sum(gx * eps, axis=0)
    else:
        grad = np.zeros(spec.dim)
    return SoftGapEstimate(float(value), grad, a, b, scores)


# -- Adam ----------------------------------------------------------------------

@dataclass(frozen=True)
class AdamState:
    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        p = np.array(params, dtype=np.float64)
        return cls(p, np.zeros_like(p), np.zeros_like(p), 0, beta1, beta2, eps)


def adam_step(state: AdamState, grad, lr: float) -> AdamState:
    """One bias-corrected Adam update in the ascent direction of ``grad``."""
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != state.params.shape:
        raise DomainError(f"gradient shape {g.shape} != parameter shape {state.params.shape}")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    params = state.params + lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, params=params, m=m, v=v, t=t)


# -- objectives ------------------------------------------------------------------

def objective_and_grad(gap: float, grad_gap: np.ndarray, theta: np.ndarray,
                       volume_weight: float, kappa: float) -> tuple[float, np.ndarray]:
    """Relaxed objective  w * r * geomean(theta) + kappa * min(theta) * r  and its
    gradient with respect to log(theta). The min is exact; its subgradient goes to
    the first argmin axis."""
    n = theta.shape[0]
    geo = math.exp(float(np.mean(np.log(theta))))
    imin = int(np.argmin(theta))
    tmin = float(theta[imin])
    value = volume_weight * gap * geo + kappa * tmin * gap
    chain = theta * grad_gap  # d r / d log theta
    grad = volume_weight * (gap * geo / n + geo * chain) + kappa * tmin * chain
    grad[imin] += kappa * gap * tmin
    return value, grad


def _ascend(model, x, kind, theta0, cfg: OptimizerConfig, rng: RngStream, lr: float,
            volume_weight: float, kappa: float, tied: bool, floor: float | None,
            history: list | None) -> np.ndarray:
    n = np.asarray(x).shape[0]
    theta0 = np.asarray(theta0, dtype=np.float64)
    if np.any(theta0 <= 0.0):
        raise DomainError("initial theta must be positive")
    u0 = np.log(theta0[:1]) if tied else np.log(np.broadcast_to(theta0, (n,)))
    state = AdamState.init(u0, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    for _ in range(cfg.iterations):
        theta = np.exp(np.broadcast_to(state.params, (n,)))
        est = soft_gap(model, x, SmoothingSpec(kind, theta), cfg.samples_per_iter, rng)
        _, grad = objective_and_grad(est.value, est.grad_theta, theta, volume_weight, kappa)
        if tied:
            grad = np.array([grad.sum()])
        state = adam_step(state, grad, lr)
        if floor is not None:
            projected = np.maximum(np.exp(state.params), floor)
            state = replace(state, params=np.log(projected))
        if history is not None:
            history.append(np.exp(np.broadcast_to(state.params, (n,))).copy())
    return np.exp(np.broadcast_to(state.params, (n,))).copy()


def _fresh_gap(model, x, spec, cfg, index, phase) -> float:
    rng = RngStream(cfg.seed, stream_id(index, phase))
    return soft_gap(model, x, spec, cfg.eval_samples, rng).value


def optimize_isotropic(model: Classifier, x, init_sigma: float, cfg: OptimizerConfig = OptimizerConfig(),
                       kind: str = "gaussian", index: int = 0,
                       history: list | None = None) -> tuple[float, float]:
    """Scalar theta maximizing theta * r(x, theta); returns (theta*, r_iso*).

    Ascent runs on log(theta). r_iso* is theta* times the gap surrogate
    re-estimated on a fresh stream with ``cfg.eval_samples`` draws.
    """
    if not init_sigma > 0:
        raise DomainError("init_sigma must be positive")
    rng = RngStream(cfg.seed, stream_id(index, PHASE_ISO))
    theta = _ascend(model, x, kind, np.array([init_sigma]), cfg, rng, cfg.lr_for("isotropic"),
                    volume_weight=0.0, kappa=1.0, tied=True, floor=None, history=history)
    sigma = float(theta[0])
    gap = _fresh_gap(model, x, SmoothingSpec(kind, theta), cfg, index, PHASE_ISO_EVAL)
    return sigma, sigma * gap


def optimize_ancer(model: Classifier, x, init_sigma: float, cfg: OptimizerConfig = OptimizerConfig(),
                   kind: str = "gaussian", index: int = 0, history: list | None = None, *,
                   volume_weight: float = 1.0, kappa: float | None = None, tied: bool = False,
                   project: bool = True, learning_rate: float | None = None,
                   rng: RngStream | None = None) -> SmoothingSpec:
    """Anisotropic theta maximizing r * geomean(theta) + kappa * min_i theta_i * r.

    Starts from the isotropic solution ``init_sigma`` on every axis and, after
    each Adam step, clips every theta_i to at least ``init_sigma``. The keyword
    switches exist to recover the isotropic routine as a special case.
    """
    if not init_sigma > 0:
        raise DomainError("isotropic initialization must be positive")
    if rng is None:
        rng = RngStream(cfg.seed, stream_id(index, PHASE_ANCER))
    n = np.asarray(x).shape[0]
    theta = _ascend(model, x, kind, np.full(n, float(init_sigma)), cfg, rng,
                    learning_rate if learning_rate is not None else cfg.lr_for("ancer"),
                    volume_weight=volume_weight,
                    kappa=cfg.kappa if kappa is None else kappa,
                    tied=tied, floor=float(init_sigma) if project else None, history=history)
    return SmoothingSpec(kind, theta)


def ancer_gap_estimate(model, x, spec: SmoothingSpec, cfg: OptimizerConfig, index: int = 0) -> float:
    """Gap surrogate of an optimized spec on a fresh stream (reporting only)."""
    return _fresh_gap(model, x, spec, cfg, index, PHASE_ANCER_EVAL)
