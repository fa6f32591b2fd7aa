"""Single-spike covariance model Sigma = Gamma + beta beta^T.

Gamma is realised as delta^2 (I - b b^T) with b = beta / |beta|: isotropic
noise projected off the spike. That gives Gamma b = 0 exactly, p - 1
eigenvalues equal to delta^2 and an average eigenvalue delta^2 (p - 1) / p,
without ever storing a p x p matrix. An observation is

    y = beta * psi + eps,    eps = delta (z - <b, z> b),  z ~ N(0, I_p)

where psi is a draw of the limiting score distribution (mean 0, variance 1).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics
from .rng import ALGORITHM, substream

log = logging.getLogger(__name__)

SCORE_DISTS = ("gaussian", "rademacher", "uniform")


@dataclass(frozen=True)
class SpikedModelSpec:
    p: int
    n: int
    mu: float = 1.0
    sigma: float = 1.0
    delta: float = 1.0
    score_dist: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise ValueError(f"p must be an integer >= 2, got {self.p!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not (math.isfinite(self.mu)):
            raise ValueError("mu must be finite")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if self.score_dist not in SCORE_DISTS:
            raise ValueError(f"score_dist must be one of {SCORE_DISTS}, got {self.score_dist!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SpikedModelSpec":
        return cls(**json.loads(text))


@dataclass
class DataMatrix:
    """p x n data; column k is observation k."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("data matrix must be two-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("data matrix has non-finite entries")

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass
class GroundTruth:
    beta: np.ndarray
    b: np.ndarray
    scores: np.ndarray
    chi_n: float
    x_inf: np.ndarray
    theta: np.ndarray
    noise_matrix: np.ndarray = field(repr=False)

    def to_dict(self, spec: SpikedModelSpec | None = None) -> dict:
        out = {
            "beta": self.beta.tolist(),
            "b": self.b.tolist(),
            "scores": self.scores.tolist(),
            "chi_n": self.chi_n,
            "theta": self.theta.tolist(),
            "x_inf": self.x_inf.tolist(),
            "prng": ALGORITHM,
        }
        if spec is not None:
            out["spec"] = asdict(spec)
            out["seed"] = spec.seed
        return out


def build_beta(spec: SpikedModelSpec) -> np.ndarray:
    """beta_i = mu + sigma z_i from a stream indexed by coordinate.

    The stream is consumed in order, so beta for dimension p is a prefix of
    beta for any larger dimension with the same seed (up to the global sign
    flip that enforces ave(beta) >= 0).
    """
    z = substream(spec.seed, "beta").standard_normal(spec.p)
    beta = spec.mu + spec.sigma * z
    if metrics.ave(beta) < 0:
        beta = -beta
    return beta


def _raw_scores(rng, n, dist):
    if dist == "gaussian":
        return rng.standard_normal(n)
    if dist == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=n)
    return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=n)


def scores_summary(scores):
    """Return ``(chi_n, x_inf)`` for a score vector."""
    scores = np.asarray(scores, dtype=float)
    length = metrics.norm(scores)
    if length == 0.0:
        raise ValueError("all-zero score vector")
    return length / math.sqrt(scores.size), scores / length


def draw_scores(spec: SpikedModelSpec, max_attempts: int = 100):
    """n i.i.d. unit-variance scores with their distortion chi_n and unit direction."""
    for attempt in range(max_attempts):
        scores = _raw_scores(substream(spec.seed, "scores", attempt), spec.n, spec.score_dist)
        if np.any(scores != 0.0):
            chi_n, x_inf = scores_summary(scores)
            return scores, chi_n, x_inf
        log.warning("all-zero score draw (seed=%d, attempt=%d); redrawing", spec.seed, attempt)
    raise RuntimeError("could not draw a nonzero score vector")


def build_noise_column(spec: SpikedModelSpec, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """delta (z - <b, z> b): isotropic noise with the spike direction removed."""
    z = rng.standard_normal(spec.p)
    return project_out(spec.delta * z, b)


def project_out(x, b):
    # second pass cleans up the cancellation error of the first
    x = x - metrics.dot(b, x) * b
    return x - metrics.dot(b, x) * b


def generate(spec: SpikedModelSpec):
    """Draw ``(DataMatrix, GroundTruth)``; bit-for-bit deterministic in ``spec``.

    The stored noise matrix is the realised residual Y - beta scores^T, so
    that identity holds exactly in floating point.
    """
    beta = build_beta(spec)
    b = beta / metrics.norm(beta)
    scores, chi_n, x_inf = draw_scores(spec)
    noise = np.empty((spec.p, spec.n))
    for k in range(spec.n):
        noise[:, k] = build_noise_column(spec, b, substream(spec.seed, "noise", k))
    signal = np.outer(beta, scores)
    Y = signal + noise
    truth = GroundTruth(
        beta=beta,
        b=b,
        scores=scores,
        chi_n=chi_n,
        x_inf=x_inf,
        theta=chi_n * beta,
        noise_matrix=Y - signal,
    )
    return DataMatrix(Y), truth
