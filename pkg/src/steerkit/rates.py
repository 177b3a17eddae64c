"""Monte-Carlo statistics for single-shot filter conversions.

Each of ``N`` independent copies is filtered and succeeds with probability
``p``; the batch average ``k / N`` is the empirical rate.  Batches draw from
independent Philox streams spawned from one seed, so any subset of batches
can be regenerated or run in parallel and aggregated afterwards.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class RateEstimate:
    p_succ: float
    N: int
    batches: int
    mean: float
    variance: float  # sample variance of the batch averages (0 for a single batch)
    seed: int
    expected_variance: float
    successes: tuple[int, ...]

    @property
    def sigma(self) -> float:
        """Standard deviation of a single batch average under the binomial law."""
        return float(np.sqrt(self.expected_variance))

    def z_score(self) -> float:
        """Deviation of the pooled mean in units of its binomial standard error."""
        se = np.sqrt(self.expected_variance / self.batches)
        return 0.0 if se == 0 else float((self.mean - self.p_succ) / se)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["successes"] = list(self.successes)
        return out


def batch_successes(p_succ: float, N: int, seed: int, batch: int) -> int:
    """Success count of one batch; identical whether computed alone or in a sweep."""
    child = np.random.SeedSequence(seed, spawn_key=(batch,))
    return int(np.random.Generator(np.random.Philox(child)).binomial(N, p_succ))


def simulate_rate(p_succ: float, N: int, batches: int = 1, seed: int = 0) -> RateEstimate:
    if not 0.0 <= p_succ <= 1.0:
        raise ValueError(f"p_succ must lie in [0, 1], got {p_succ}")
    if N < 1 or batches < 1:
        raise ValueError("N and batches must be positive")
    counts = tuple(batch_successes(p_succ, N, seed, b) for b in range(batches))
    means = np.array(counts, dtype=float) / N
    var = float(means.var(ddof=1)) if batches > 1 else 0.0
    return RateEstimate(float(p_succ), int(N), int(batches), float(means.mean()), var, int(seed),
                        p_succ * (1.0 - p_succ) / N, counts)
