"""James-Stein correction of the leading sample eigenvector.

Recipe, for a p x n data matrix with q spikes (q < min(n, p)):

1. eta = s_p h, where (s_p^2, h) is the leading eigenpair of S = Y Y^T / n
   and h is signed so that ave(h) >= 0. Estimate the noise as

       nu_hat^2 = (tr(S) - (s_p^2 + ... + s_{p-q+1}^2)) / (min(n, p) - q) / p

   and set c = 1 - nu_hat^2 / var(eta).
2. Shrink eta towards its own mean, eta_js = ave(eta) + c (eta - ave(eta)),
   and return h_js = eta_js / |eta_js|.

Only q = 1 carries the asymptotic guarantees; for q > 1 the same noise
formula is used but the correction is not optimal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import eig, metrics
from .errors import DegenerateInputError, InconsistentSpectrumError

TRACE_SLACK = 1e-9


@dataclass
class ShrinkageEstimate:
    eta: np.ndarray
    h: np.ndarray
    s2: float
    nu_hat_sq: float
    c_raw: float
    c: float
    eta_js: np.ndarray
    h_js: np.ndarray
    q: int
    spectrum: eig.SpectrumSummary

    @property
    def clamped(self) -> bool:
        return self.c != self.c_raw


def noise_estimate(trace_S: float, top_eigenvalues, p: int, n: int, q: int) -> float:
    """Average of the non-spike nonzero eigenvalues of S, divided by p."""
    top = [float(x) for x in top_eigenvalues][:q]
    k = min(n, p)
    if not 1 <= q < k:
        raise ValueError(f"q must satisfy 1 <= q < min(n, p) = {k}, got {q}")
    if len(top) < q:
        raise ValueError(f"need {q} leading eigenvalues, got {len(top)}")
    rest = trace_S - math.fsum(top)
    if rest < 0:
        if rest < -TRACE_SLACK * max(abs(trace_S), 1.0):
            raise InconsistentSpectrumError(
                f"leading eigenvalues sum to more than the trace ({math.fsum(top)!r} > {trace_S!r})"
            )
        rest = 0.0
    return rest / (k - q) / p


def shrinkage_coefficient(nu_hat_sq: float, var_eta: float):
    """Return ``(c_raw, c)``: c_raw = 1 - nu_hat^2 / var(eta), c = c_raw clipped to [0, 1]."""
    if not var_eta > 0:
        raise DegenerateInputError(f"var(eta) must be positive, got {var_eta!r}")
    c_raw = 1.0 - nu_hat_sq / var_eta
    return c_raw, min(1.0, max(0.0, c_raw))


def shrink_vector(eta, c: float) -> np.ndarray:
    """ave(eta) + c (eta - ave(eta)), entrywise."""
    eta = np.asarray(eta, dtype=float)
    m = metrics.ave(eta)
    return m + c * (eta - m)


def normalized_shrunk(h, c: float) -> np.ndarray:
    """Unit-norm shrunk vector from moments of h:

        (ave(h) + c (h - ave(h))) / (sqrt(p) sqrt(ave(h)^2 + c^2 var(h)))

    Identical to ``shrink_vector(h, c)`` normalised to unit length; used as
    an independent cross-check of the vector route.
    """
    h = np.asarray(h, dtype=float)
    m = metrics.ave(h)
    den = math.sqrt(h.size) * math.sqrt(m * m + c * c * metrics.var(h))
    if den == 0.0:
        raise DegenerateInputError("shrunk vector is zero")
    return (m + c * (h - m)) / den


def js_estimate(Y, q: int = 1) -> ShrinkageEstimate:
    """James-Stein corrected leading eigenvector of the p x n data matrix ``Y``."""
    Y = np.asarray(getattr(Y, "values", Y), dtype=float)
    p, n = Y.shape
    spec = eig.top_eigenpairs_hdlss(Y, q)
    s2 = spec.pairs[0].value
    h = spec.pairs[0].vector
    eta = math.sqrt(s2) * h
    nu_hat_sq = noise_estimate(spec.trace, [pr.value for pr in spec.pairs], p, n, q)
    c_raw, c = shrinkage_coefficient(nu_hat_sq, metrics.var(eta))
    eta_js = shrink_vector(eta, c)
    length = metrics.norm(eta_js)
    if length == 0.0:
        raise DegenerateInputError("shrunk vector is zero (c = 0 and ave(eta) = 0)")
    # |eta_js|^2 / p must equal ave(eta)^2 + c^2 var(eta)
    m = metrics.ave(eta)
    moment = m * m + c * c * metrics.var(eta)
    if abs(length * length / p - moment) > 1e-10 * max(moment, 1e-300) + 1e-300:
        raise ArithmeticError("norm identity of the shrunk vector failed")
    h_js = eig.orient(eta_js / length)
    return ShrinkageEstimate(
        eta=eta, h=h, s2=s2, nu_hat_sq=nu_hat_sq, c_raw=c_raw, c=c,
        eta_js=eta_js, h_js=h_js, q=q, spectrum=spec,
    )


def oracle_c_mse(eta, theta) -> float:
    """Minimiser over c of mse(shrink_vector(eta, c), theta): cov(theta, eta) / var(eta)."""
    v = metrics.var(eta)
    if not v > 0:
        raise DegenerateInputError("var(eta) must be positive")
    return metrics.cov(theta, eta) / v


def oracle_c_sph(eta, theta) -> float:
    """Minimiser over c of sph(shrink_vector(eta, c), theta): (ave(eta) / ave(theta)) c_mse.

    Undefined when ave(theta) = 0.
    """
    a_theta = metrics.ave(theta)
    if a_theta == 0.0:
        raise DegenerateInputError("oracle c for the angle loss is undefined when ave(theta) = 0")
    return metrics.ave(eta) / a_theta * oracle_c_mse(eta, theta)
