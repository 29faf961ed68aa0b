"""Ball-queue model of re-optimization convergence.

N unmarked balls sit in a queue.  Each step takes the head ball; if it is
marked the process stops, otherwise it is marked and reinserted at a
uniformly random position.  S_N is the expected number of marking steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SnResult:
    n: int
    closed_form: float
    monte_carlo_mean: float
    monte_carlo_stderr: float
    trials: int

    @property
    def z(self) -> float:
        if self.monte_carlo_stderr == 0:
            return 0.0 if self.monte_carlo_mean == self.closed_form else math.inf
        return (self.monte_carlo_mean - self.closed_form) / self.monte_carlo_stderr


def sn_closed_form(n: int) -> float:
    """S_n = sum_k k * (1 - 1/n)...(1 - (k-1)/n) * k/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = 0.0
    survive = 1.0  # P(no marked head during the first k-1 steps)
    for k in range(1, n + 1):
        total += k * survive * (k / n)
        survive *= 1.0 - k / n
        if survive == 0.0:
            break
    return total


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def sn_monte_carlo(n: int, trials: int, seed: int = 0) -> SnResult:
    """Simulate the queue directly, all trials in lockstep.

    Only marked balls are tracked (their queue positions, 0 = head); the
    unmarked ones are interchangeable.  A trial ends when a marked ball
    reaches the head.
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    rng = np.random.default_rng(seed)
    steps = np.zeros(trials, dtype=np.int64)
    ids = np.arange(trials)
    pos = np.empty((trials, 0), dtype=np.int64)
    k = 0
    while ids.size:
        if k:
            done = (pos == 0).any(axis=1)
            steps[ids[done]] = k
            ids, pos = ids[~done], pos[~done]
            if not ids.size:
                break
        # pop the head, then reinsert it marked at a uniform slot among n
        p = rng.integers(0, n, size=ids.size)[:, None]
        pos = pos - 1
        pos = np.concatenate([pos + (pos >= p), p], axis=1)
        k += 1
    mean = float(steps.mean())
    se = float(steps.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SnResult(n, sn_closed_form(n), mean, se, trials)


def sn_sqrt_profile(n_values) -> list[tuple[int, float, float]]:
    out = []
    for n in n_values:
        s = sn_closed_form(n)
        out.append((int(n), s, s / math.sqrt(n)))
    return out


def sn_underestimate_bound(n: int, m_edges: int) -> float:
    """S_{N/M}: the expected-step bound when every error is an underestimate."""
    if not 1 <= m_edges <= n:
        raise ValueError("need n >= m_edges >= 1")
    return sn_closed_form(max(1, n // m_edges))
