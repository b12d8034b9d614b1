"""Model parameters, kernels, and the pairwise connection probability.

A kernel-based spatial random graph (KSRG) lives on a vertex set that is
either a unit-intensity Poisson point process on a centered box of volume n
or the lattice Z^d intersected with that box.  Each vertex carries an
i.i.d. Pareto mark, and two vertices connect independently with a
probability that depends on their distance and marks through a kernel and
a profile function.  This module holds the validated parameter tuple and
the pure functions evaluating kernels and connection probabilities; all
randomness lives elsewhere.

Infinite parameter values (``tau = inf`` for constant unit marks,
``alpha = inf`` for the threshold profile) are represented as
``math.inf`` and every formula branches on them explicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

KERNELS = ("interpolation", "sum")
PROFILES = ("polynomial", "threshold")
VERTEX_SETS = ("poisson", "lattice")


@dataclass(frozen=True)
class ModelParams:
    """Full KSRG parameter tuple.

    Attributes:
        d: dimension, positive integer.
        tau: mark power-law exponent in (2, inf]; ``inf`` means all marks
            are identically 1.
        alpha: long-range profile exponent in (1, inf]; ``inf`` means the
            threshold profile.
        sigma: kernel interpolation exponent, >= 0.  Ignored by the sum
            kernel (reported as 0 in exponent formulas).
        kernel: "interpolation" for (w1 v w2)(w1 ^ w2)^sigma, or "sum"
            for (w1^(1/d) + w2^(1/d))^d.
        profile: "polynomial" (requires alpha < inf) or "threshold"
            (requires alpha = inf).
        beta: edge-density parameter, > 0.
        p: Bernoulli edge-percolation parameter in (0, 1].
        vertex_set: "poisson" or "lattice".  The lattice variant requires
            min(p, beta) < 1 so the model is not degenerate.
    """

    d: int = 1
    tau: float = 2.5
    alpha: float = 2.0
    sigma: float = 1.0
    kernel: str = "interpolation"
    profile: str = "polynomial"
    beta: float = 1.0
    p: float = 1.0
    vertex_set: str = "poisson"

    def __post_init__(self) -> None:
        if not isinstance(self.d, (int, np.integer)) or isinstance(self.d, bool):
            raise ValueError(f"d must be an integer, got {self.d!r}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if not (self.tau > 2):
            raise ValueError(f"tau must be > 2 (or inf), got {self.tau}")
        if not (self.alpha > 1):
            raise ValueError(f"alpha must be > 1 (or inf), got {self.alpha}")
        if not (self.sigma >= 0) or math.isinf(self.sigma):
            raise ValueError(f"sigma must be a finite real >= 0, got {self.sigma}")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        if self.profile == "threshold" and not math.isinf(self.alpha):
            raise ValueError("threshold profile requires alpha = inf")
        if self.profile == "polynomial" and math.isinf(self.alpha):
            raise ValueError("polynomial profile requires finite alpha")
        if not (self.beta > 0) or math.isinf(self.beta):
            raise ValueError(f"beta must be a finite real > 0, got {self.beta}")
        if not (0 < self.p <= 1):
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if self.vertex_set not in VERTEX_SETS:
            raise ValueError(
                f"vertex_set must be one of {VERTEX_SETS}, got {self.vertex_set!r}"
            )
        if self.vertex_set == "lattice" and min(self.p, self.beta) >= 1:
            raise ValueError("lattice vertex set requires min(p, beta) < 1")

    @property
    def effective_sigma(self) -> float:
        """Sigma as it enters exponent formulas: 0 under the sum kernel."""
        return 0.0 if self.kernel == "sum" else self.sigma

    @property
    def constant_marks(self) -> bool:
        return math.isinf(self.tau)

    @property
    def threshold_profile(self) -> bool:
        return math.isinf(self.alpha)

    def with_updates(self, **changes) -> "ModelParams":
        """Return a copy with the given fields replaced (re-validated)."""
        return replace(self, **changes)

    def to_dict(self) -> dict:
        def enc(x: float) -> object:
            return "inf" if math.isinf(x) else x

        return {
            "d": self.d,
            "tau": enc(self.tau),
            "alpha": enc(self.alpha),
            "sigma": self.sigma,
            "kernel": self.kernel,
            "profile": self.profile,
            "beta": self.beta,
            "p": self.p,
            "vertex_set": self.vertex_set,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        known = {
            "d", "tau", "alpha", "sigma", "kernel", "profile",
            "beta", "p", "vertex_set",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown ModelParams keys: {sorted(unknown)}")

        def dec(x: object) -> float:
            if isinstance(x, str):
                if x.strip().lower() in ("inf", "infinity", "+inf"):
                    return math.inf
                return float(x)
            return float(x)  # type: ignore[arg-type]

        kwargs: dict = {}
        if "d" in data:
            kwargs["d"] = int(data["d"])
        for key in ("tau", "alpha", "sigma", "beta", "p"):
            if key in data:
                kwargs[key] = dec(data[key])
        for key in ("kernel", "profile", "vertex_set"):
            if key in data:
                kwargs[key] = str(data[key])
        # A threshold profile is implied by alpha = inf and vice versa, so let a
        # config that sets only one of the two round-trip without error.
        if math.isinf(kwargs.get("alpha", cls.alpha)) and "profile" not in data:
            kwargs["profile"] = "threshold"
        if kwargs.get("profile") == "threshold" and "alpha" not in data:
            kwargs["alpha"] = math.inf
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class MarkedVertex:
    """A point of R^d x [1, inf): position plus mark."""

    position: tuple
    mark: float

    def __post_init__(self) -> None:
        pos = tuple(float(c) for c in self.position)
        object.__setattr__(self, "position", pos)
        if not all(math.isfinite(c) for c in pos):
            raise ValueError(f"position must be finite, got {pos}")
        if not (self.mark >= 1):
            raise ValueError(f"mark must be >= 1, got {self.mark}")


def kernel_value(w1: float, w2: float, params: ModelParams) -> float:
    """Evaluate the symmetric kernel at a mark pair.

    Interpolation kernel: (w1 v w2) * (w1 ^ w2)^sigma.
    Sum kernel: (w1^(1/d) + w2^(1/d))^d.
    """
    if params.kernel == "sum":
        inv_d = 1.0 / params.d
        return (w1 ** inv_d + w2 ** inv_d) ** params.d
    lo, hi = (w1, w2) if w1 <= w2 else (w2, w1)
    return hi * lo ** params.sigma


def kernel_value_array(w1, w2, params: ModelParams):
    """Vectorized :func:`kernel_value` over numpy arrays of marks."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if params.kernel == "sum":
        inv_d = 1.0 / params.d
        return (w1 ** inv_d + w2 ** inv_d) ** params.d
    return np.maximum(w1, w2) * np.minimum(w1, w2) ** params.sigma


def connection_prob(u: MarkedVertex, v: MarkedVertex, params: ModelParams) -> float:
    """Connection probability of a distinct vertex pair.

    For finite alpha this is p * min(1, beta*kappa/dist^d)^alpha; for the
    threshold profile it is p times the indicator of beta*kappa >= dist^d
    (equality connects).  Coincident positions, which can arise from Palm
    insertion at an occupied location, give probability p.
    """
    dx = np.asarray(u.position, dtype=np.float64) - np.asarray(
        v.position, dtype=np.float64
    )
    dist_pow_d = float(np.linalg.norm(dx)) ** params.d
    kappa = kernel_value(u.mark, v.mark, params)
    return _prob_from_ratio(params.beta * kappa, dist_pow_d, params)


def _prob_from_ratio(beta_kappa: float, dist_pow_d: float, params: ModelParams) -> float:
    if params.threshold_profile:
        return params.p if beta_kappa >= dist_pow_d else 0.0
    if dist_pow_d <= 0.0:
        return params.p
    ratio = beta_kappa / dist_pow_d
    if ratio >= 1.0:
        return params.p
    return params.p * ratio ** params.alpha


def connection_prob_array(
    dist_pow_d: np.ndarray, kappa: np.ndarray, params: ModelParams
) -> np.ndarray:
    """Vectorized connection probability from precomputed dist^d and kernels."""
    beta_kappa = params.beta * np.asarray(kappa, dtype=np.float64)
    dist_pow_d = np.asarray(dist_pow_d, dtype=np.float64)
    if params.threshold_profile:
        return np.where(beta_kappa >= dist_pow_d, params.p, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.minimum(1.0, beta_kappa / dist_pow_d)
    ratio = np.where(dist_pow_d <= 0.0, 1.0, ratio)
    return params.p * _int_pow(ratio, params.alpha)


def _int_pow(base: np.ndarray, alpha: float) -> np.ndarray:
    # Small integer exponents dominate in practice; repeated multiplication is
    # measurably faster than np.power for the hot sampling path.
    if alpha == 1.0:
        return base
    if alpha == 2.0:
        return base * base
    if alpha == 3.0:
        return base * base * base
    if alpha == 4.0:
        sq = base * base
        return sq * sq
    return base ** alpha


def pareto_quantile(u, tau: float):
    """Inverse CDF of the mark law: P(W >= w) = w^-(tau-1) for w >= 1.

    Maps u in [0, 1) to marks; u = 0 gives mark 1.  For tau = inf all
    marks equal 1.
    """
    u = np.asarray(u, dtype=np.float64)
    if math.isinf(tau):
        return np.ones_like(u)
    return (1.0 - u) ** (-1.0 / (tau - 1.0))


def pareto_median(tau: float) -> float:
    """Median mark m_w: 2^(1/(tau-1)), or 1 for constant marks."""
    if math.isinf(tau):
        return 1.0
    return 2.0 ** (1.0 / (tau - 1.0))


def pareto_mean(tau: float) -> float:
    """Mean mark (tau-1)/(tau-2); infinite only in the excluded tau <= 2."""
    if math.isinf(tau):
        return 1.0
    return (tau - 1.0) / (tau - 2.0)


def box_side(n: float, d: int) -> float:
    """Side length n^(1/d) of the centered sampling box of volume n."""
    return float(n) ** (1.0 / d)


def box_contains(points: np.ndarray, n: float, d: int, tol: float = 0.0) -> np.ndarray:
    """Boolean mask of rows of `points` inside the closed centered box."""
    half = 0.5 * box_side(n, d)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return np.all(np.abs(pts) <= half + tol, axis=1)
