"""Suppressed mark ceilings around a ball boundary.

A suppressed profile caps vertex marks by a radial ceiling that equals
the minimal mark in a thin collar around the sphere of radius r_k and
grows polynomially away from it.  Two quantities drive the isolation
heuristic: how many vertices of an unconstrained sample exceed the
ceiling, and how likely vertex pairs below the ceiling on opposite
sides of the sphere are to connect.  This module classifies vertices
against a ceiling, verifies the deterministic bound on cross-boundary
pairs, and estimates the growth rates of both counts in k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _rng
from .model import (
    ModelParams,
    connection_prob_array,
    kernel_value_array,
    pareto_quantile,
)

__all__ = [
    "SuppressedProfile",
    "suppressed_profile",
    "f_gamma",
    "ProfilePartition",
    "classify_against_profile",
    "cross_boundary_edge_bound_check",
    "ProfileCountRow",
    "profile_count_slopes",
]

_RATIO_TOL = 1e-12


@dataclass(frozen=True)
class SuppressedProfile:
    """Radial mark ceiling around the ball of radius r_k.

    The ceiling is a function of the distance z from the sphere of
    radius r_k: it equals 1 for z <= C_beta, grows like (z/C_beta)^(gamma d)
    up to z = r_k, and steepens to the slope of (z/C_beta)^d beyond.
    r_k >= C_beta is required so the three pieces tile [0, inf) in order.
    """

    gamma: float
    r_k: float
    C_beta: float
    d: int

    def __post_init__(self) -> None:
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.d < 1 or self.d != int(self.d):
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if not self.C_beta > 0.0:
            raise ValueError(f"C_beta must be positive, got {self.C_beta}")
        if not self.r_k >= self.C_beta:
            raise ValueError(
                f"r_k must be at least C_beta, got r_k={self.r_k} < "
                f"C_beta={self.C_beta}"
            )


def suppressed_profile(
    params: ModelParams, k: float, gamma: float, rho: float = 0.1
) -> SuppressedProfile:
    """Build the ceiling for target component size k and density rho.

    r_k = (k/rho)^(1/d) * sqrt(d), so the ball of radius r_k has volume
    d^(d/2) k / rho, and C_beta = (2 beta)^(1/d).
    """
    if not k > 0.0:
        raise ValueError(f"k must be positive, got {k}")
    if not 0.0 < rho:
        raise ValueError(f"rho must be positive, got {rho}")
    d = params.d
    r_k = (k / rho) ** (1.0 / d) * math.sqrt(d)
    c_beta = (2.0 * params.beta) ** (1.0 / d)
    return SuppressedProfile(gamma=gamma, r_k=r_k, C_beta=c_beta, d=d)


def f_gamma(z, profile: SuppressedProfile):
    """Ceiling value at distance z from the sphere.

    Piecewise: 1 for z <= C_beta, (z/C_beta)^(gamma d) for
    z in (C_beta, r_k], and (z/C_beta)^d (r_k/C_beta)^(-d(1-gamma))
    beyond; continuous at both joins and always >= 1.
    """
    arr = np.asarray(z, dtype=np.float64)
    if np.any(arr < 0.0):
        raise ValueError("distance to the sphere must be >= 0")
    cb = profile.C_beta
    rk = profile.r_k
    g = profile.gamma
    d = profile.d
    ratio = np.maximum(arr, cb) / cb
    out = ratio ** (g * d)
    far = arr > rk
    if np.any(far):
        tail = ratio**d * (rk / cb) ** (-d * (1.0 - g))
        out = np.where(far, tail, out)
    if np.ndim(z) == 0:
        return float(out)
    return out


class ProfilePartition(NamedTuple):
    """Index arrays of the four position-by-mark classes."""

    in_below: np.ndarray
    in_above: np.ndarray
    out_below: np.ndarray
    out_above: np.ndarray


def classify_against_profile(vertices, profile: SuppressedProfile) -> ProfilePartition:
    """Split vertices by side of the sphere and side of the ceiling.

    `vertices` needs `positions` (m, d) and `marks` (m,) arrays.  Ties
    go inward and below: radius exactly r_k counts as inside, mark
    exactly at the ceiling counts as below.
    """
    positions = np.asarray(vertices.positions, dtype=np.float64)
    marks = np.asarray(vertices.marks, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != profile.d:
        raise ValueError(
            f"positions must have shape (m, {profile.d}), got {positions.shape}"
        )
    return _classify_arrays(positions, marks, profile)


def _classify_arrays(
    positions: np.ndarray, marks: np.ndarray, profile: SuppressedProfile
) -> ProfilePartition:
    radii = np.linalg.norm(positions, axis=1)
    inside = radii <= profile.r_k
    ceiling = f_gamma(np.abs(radii - profile.r_k), profile)
    below = marks <= ceiling
    return ProfilePartition(
        in_below=np.flatnonzero(inside & below),
        in_above=np.flatnonzero(inside & ~below),
        out_below=np.flatnonzero(~inside & below),
        out_above=np.flatnonzero(~inside & ~below),
    )


def cross_boundary_edge_bound_check(
    profile: SuppressedProfile,
    params: ModelParams,
    trials: int,
    seed: int = 0,
) -> float:
    """Stress the connection bound for below-ceiling cross pairs.

    Samples `trials` admissible pairs: u inside the ball, v outside,
    both at distance >= C_beta from the sphere (the ceiling equals the
    minimal mark closer in, so a below-ceiling sample has no vertices
    there) and with marks at or under the ceiling.  Half the pairs sit
    exactly on the ceiling and half the pairs are radially aligned,
    which realizes the worst case.  Checks the deterministic ratio
    beta * kappa / dist^d <= 1/2 for every pair and returns the largest
    connection probability seen; that maximum is at most p * 2^-alpha,
    and zero under the threshold profile.
    """
    sigma = params.sigma
    if profile.gamma > 1.0 / (sigma + 1.0):
        raise ValueError(
            f"gamma={profile.gamma} exceeds 1/(sigma+1)={1.0 / (sigma + 1.0)}; "
            "the cross-boundary bound is not claimed there"
        )
    if params.kernel != "interpolation":
        raise ValueError(
            "cross-boundary bound requires the interpolation kernel, "
            f"got {params.kernel!r}"
        )
    if params.d != profile.d:
        raise ValueError(f"dimension mismatch: params d={params.d}, profile d={profile.d}")
    c_beta = (2.0 * params.beta) ** (1.0 / params.d)
    if not math.isclose(profile.C_beta, c_beta, rel_tol=1e-9):
        raise ValueError(
            f"profile C_beta={profile.C_beta} does not match (2 beta)^(1/d)={c_beta}"
        )
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    d = params.d
    cb = profile.C_beta
    rk = profile.r_k
    rng = _rng.stream(seed, _rng.TAG_PROFILE, trials)

    # Distances from the sphere, log-uniform over the admissible ranges
    # with a point mass at the collar edge C_beta (the tightest spot).
    hug_u = rng.random(trials) < 0.25
    hug_v = rng.random(trials) < 0.25
    z_u = cb * (rk / cb) ** rng.random(trials)
    z_v = cb * (4.0 * rk / cb) ** rng.random(trials)
    z_u[hug_u] = cb
    z_v[hug_v] = cb

    e_u = rng.normal(size=(trials, d))
    e_u /= np.linalg.norm(e_u, axis=1, keepdims=True)
    e_v = rng.normal(size=(trials, d))
    e_v /= np.linalg.norm(e_v, axis=1, keepdims=True)
    aligned = rng.random(trials) < 0.5
    e_v[aligned] = e_u[aligned]

    x_u = (rk - z_u)[:, None] * e_u
    x_v = (rk + z_v)[:, None] * e_v

    cap_u = f_gamma(z_u, profile)
    cap_v = f_gamma(z_v, profile)
    w_u = np.where(rng.random(trials) < 0.5, cap_u, 1.0 + (cap_u - 1.0) * rng.random(trials))
    w_v = np.where(rng.random(trials) < 0.5, cap_v, 1.0 + (cap_v - 1.0) * rng.random(trials))

    dist = np.linalg.norm(x_u - x_v, axis=1)
    kappa = kernel_value_array(w_u, w_v, params)
    ratio = params.beta * kappa / dist**d
    worst = int(np.argmax(ratio))
    if ratio[worst] > 0.5 + _RATIO_TOL:
        raise RuntimeError(
            f"cross-boundary ratio bound violated: beta*kappa/dist^d = "
            f"{ratio[worst]} > 1/2 for pair z_u={z_u[worst]}, z_v={z_v[worst]}, "
            f"w_u={w_u[worst]}, w_v={w_v[worst]}"
        )
    probs = connection_prob_array(dist**d, kappa, params)
    return float(np.max(probs))


class ProfileCountRow(NamedTuple):
    """One replicate of the two ceiling-driven counts at a given k."""

    k: float
    rep: int
    count_above: int
    edges_below_cross: float


def profile_count_slopes(
    params: ModelParams,
    k_grid: Sequence[float],
    gamma: float,
    reps: int,
    seed: int,
    rho: float = 0.1,
    pair_samples: int = 4000,
) -> list[ProfileCountRow]:
    """Estimate the above-ceiling count and the cross-boundary edge mass.

    For each k, samples a unit-intensity Poisson cloud with i.i.d. marks
    on the box [-2 r_k, 2 r_k]^d, counts vertices above the ceiling, and
    estimates the expected number of edges between below-ceiling
    vertices on opposite sides of the sphere.  The edge estimate sums
    connection probabilities over cross pairs: all of them when there
    are at most `pair_samples`, otherwise `pair_samples` uniformly
    resampled pairs scaled by the pair count.  Slopes of the two counts
    against k approach max(1 - gamma(tau-1), (d-1)/d) and
    max(2 - alpha + gamma xi_star, (d-1)/d).
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    grid = [float(k) for k in k_grid]
    if not grid or any(k <= 0.0 for k in grid):
        raise ValueError("k_grid must be nonempty with positive entries")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("k_grid must be strictly increasing")

    d = params.d
    rows: list[ProfileCountRow] = []
    for ki, k in enumerate(grid):
        prof = suppressed_profile(params, k, gamma, rho)
        half = 2.0 * prof.r_k
        volume = (2.0 * half) ** d
        for rep in range(reps):
            rng = _rng.stream(seed, _rng.TAG_PROFILE, ki, rep)
            count = int(rng.poisson(volume))
            positions = rng.uniform(-half, half, size=(count, d))
            marks = pareto_quantile(rng.random(count), params.tau)
            part = _classify_arrays(positions, marks, prof)
            above = int(part.in_above.size + part.out_above.size)
            edges = _cross_edge_mass(
                positions, marks, part, params, rng, pair_samples
            )
            rows.append(
                ProfileCountRow(
                    k=k, rep=rep, count_above=above, edges_below_cross=edges
                )
            )
    return rows


def _cross_edge_mass(
    positions: np.ndarray,
    marks: np.ndarray,
    part: ProfilePartition,
    params: ModelParams,
    rng: np.random.Generator,
    pair_samples: int,
) -> float:
    """Sum of connection probabilities over below-ceiling cross pairs.

    Exact when the pair count fits in `pair_samples`; otherwise an
    unbiased uniform-pair subsample scaled back up.
    """
    n_in = part.in_below.size
    n_out = part.out_below.size
    total = n_in * n_out
    if total == 0:
        return 0.0
    if total <= pair_samples:
        idx_in = np.repeat(part.in_below, n_out)
        idx_out = np.tile(part.out_below, n_in)
        scale = 1.0
    else:
        idx_in = part.in_below[rng.integers(0, n_in, pair_samples)]
        idx_out = part.out_below[rng.integers(0, n_out, pair_samples)]
        scale = total / pair_samples
    diff = positions[idx_in] - positions[idx_out]
    dist_pow_d = (np.sum(diff * diff, axis=1)) ** (params.d / 2.0)
    kappa = kernel_value_array(marks[idx_in], marks[idx_out], params)
    probs = connection_prob_array(dist_pow_d, kappa, params)
    return float(np.sum(probs) * scale)
