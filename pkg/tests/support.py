"""Shared helpers for the test-suite: a lean batched RK4 driver.

The library's rhs functions broadcast over leading axes, so Monte Carlo
experiments (noise ensembles, many starting points) integrate a whole
(runs, products) matrix in one loop.  Mirrors the scenario engine's
stepping (stage clipping, post-step renormalisation) without the logging.
"""

import numpy as np

from choicedyn import NoiseSpec, perturb


def rk4_step(rhs, s, market, h):
    def f(x):
        return rhs(np.clip(x, 0.0, None), market)

    k1 = f(s)
    k2 = f(s + 0.5 * h * k1)
    k3 = f(s + 0.5 * h * k2)
    k4 = f(s + h * k3)
    s = np.clip(s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0, None)
    return s / s.sum(axis=-1, keepdims=True)


def relax(rhs, s0, market, t_end, dt):
    """Integrate a (batch of) share state(s) under a fixed market."""
    s = np.asarray(s0, dtype=float).copy()
    for _ in range(round(t_end / dt)):
        s = rk4_step(rhs, s, market, dt)
    return s


def noisy_relax(rhs, s0, segments, eps_s, rng, dt):
    """Integrate through (duration, market) segments with share noise.

    Noise is a zero-sum Gaussian kick of scale eps_s*sqrt(dt) before every
    step, matching the scenario engine's treatment.
    """
    s = np.asarray(s0, dtype=float).copy()
    spec = NoiseSpec(amplitude_s=eps_s * np.sqrt(dt), amplitude_u=0.0)
    for duration, market in segments:
        for _ in range(round(duration / dt)):
            s, _ = perturb(s, market.baseline_utilities, spec, rng)
            s = rk4_step(rhs, s, market, dt)
    return s
