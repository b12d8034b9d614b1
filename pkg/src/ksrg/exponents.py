"""Closed-form cluster-size-decay exponents and their identities.

The subexponential decay of the largest-cluster tail is governed by a
polynomial exponent zeta that depends on which connectivity mechanism
dominates: boundary (surface tension) edges, low-low long edges, high-low
edges, or high-high edges.  Each mechanism has its own zeta; the decay
exponent is the maximum and the multiplicity of the maximizers controls
polylogarithmic corrections.  A parallel family of xi exponents and
gamma mark-scaling exponents arises from optimally suppressed mark
profiles; on the parameter region where long-range mechanisms are
active the two families are linked by exact identities.

Infinite tau (constant marks) and infinite alpha (threshold profile)
are handled by taking the corresponding limits of each formula, with
explicit branches rather than arithmetic on infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .model import ModelParams

# Exponent ties are detected with this tolerance, relative for O(1) values
# and absolute near zero.  Inputs are user-supplied floats, so exact
# rational comparison is out of scope.
TIE_REL_TOL = 1e-12
TIE_ABS_TOL = 1e-12

LONG_TYPES = ("ll", "hl", "hh")
ALL_TYPES = ("short", "ll", "hl", "hh")


def _close(a: float, b: float) -> bool:
    if a == b:
        return True
    if math.isinf(a) or math.isinf(b):
        return False
    return math.isclose(a, b, rel_tol=TIE_REL_TOL, abs_tol=TIE_ABS_TOL)


def multiplicity(values) -> int:
    """Number of entries tied with the maximum, within tie tolerance."""
    vals = list(values)
    best = max(vals)
    return sum(1 for v in vals if _close(v, best))


@dataclass(frozen=True)
class ExponentReport:
    """Every derived exponent for a parameter tuple.

    zeta fields are the per-mechanism decay exponents and their maxima;
    gamma fields are mark-scaling exponents; xi fields are the auxiliary
    exponents of the suppressed-profile optimization (nan when alpha is
    infinite, where that optimization degenerates).  m_star counts how
    many of the four mechanisms attain zeta_star; dominant_types names
    them.
    """

    zeta_short: float
    zeta_ll: float
    zeta_hl: float
    zeta_hh: float
    zeta_long: float
    zeta_star: float
    gamma_hl: float
    gamma_hh: float
    gamma_long: float
    gamma_star: float
    xi_ll: float
    xi_hl: float
    xi_hh: float
    xi_star: float
    m_long: int
    m_star: int
    dominant_types: frozenset

    def zeta_by_type(self) -> dict:
        return {
            "short": self.zeta_short,
            "ll": self.zeta_ll,
            "hl": self.zeta_hl,
            "hh": self.zeta_hh,
        }

    def to_dict(self) -> dict:
        out = {
            "zeta_short": self.zeta_short,
            "zeta_ll": self.zeta_ll,
            "zeta_hl": self.zeta_hl,
            "zeta_hh": self.zeta_hh,
            "zeta_long": self.zeta_long,
            "zeta_star": self.zeta_star,
            "gamma_hl": self.gamma_hl,
            "gamma_hh": self.gamma_hh,
            "gamma_long": self.gamma_long,
            "gamma_star": self.gamma_star,
            "xi_ll": self.xi_ll,
            "xi_hl": self.xi_hl,
            "xi_hh": self.xi_hh,
            "xi_star": self.xi_star,
            "m_long": self.m_long,
            "m_star": self.m_star,
            "dominant_types": sorted(self.dominant_types),
        }
        return out


class XiGamma(NamedTuple):
    xi_ll: float
    xi_hl: float
    xi_hh: float
    xi_star: float
    m_long: int
    gamma_long: float
    gamma_star: float


def zeta_short(d: int) -> float:
    """Surface-tension exponent (d-1)/d of boundary-driven decay."""
    return (d - 1) / d


def zeta_ll(alpha: float) -> float:
    """Low-low long-edge exponent 2 - alpha; -inf for the threshold profile."""
    if math.isinf(alpha):
        return -math.inf
    return 2.0 - alpha


def gamma_hl(alpha: float) -> float:
    """Mark-scaling exponent 1 - 1/alpha of the dominant high-low vertex."""
    if math.isinf(alpha):
        return 1.0
    return 1.0 - 1.0 / alpha


def zeta_hl(tau: float, alpha: float) -> float:
    """High-low exponent 1 - gamma_hl*(tau-1) = (tau-1)/alpha - (tau-2)."""
    if math.isinf(tau):
        return -math.inf
    if math.isinf(alpha):
        return -(tau - 2.0)
    return (tau - 1.0) / alpha - (tau - 2.0)


def gamma_hh(sigma: float, tau: float, alpha: float) -> float:
    """Mark-scaling exponent of the dominant high-high vertices.

    (1 - 1/alpha) / (sigma + 1 - (tau-1)/alpha) when tau <= sigma + 2 and
    alpha is finite, else 1/(sigma+1).  The two branches agree at
    tau = sigma + 2.
    """
    if math.isinf(alpha) or math.isinf(tau) or tau > sigma + 2.0:
        return 1.0 / (sigma + 1.0)
    return (1.0 - 1.0 / alpha) / (sigma + 1.0 - (tau - 1.0) / alpha)


def zeta_hh(sigma: float, tau: float, alpha: float) -> float:
    """High-high exponent 1 - gamma_hh*(tau-1), with both branches explicit."""
    if math.isinf(tau):
        return -math.inf
    if math.isinf(alpha) or tau > sigma + 2.0:
        return (sigma + 2.0 - tau) / (sigma + 1.0)
    return (sigma + 2.0 - tau) / (sigma + 1.0 - (tau - 1.0) / alpha)


def exponent_report(params: ModelParams) -> ExponentReport:
    """Populate every exponent field for a validated parameter tuple."""
    d = params.d
    tau = params.tau
    alpha = params.alpha
    sigma = params.effective_sigma

    z_short = zeta_short(d)
    z_ll = zeta_ll(alpha)
    z_hl = zeta_hl(tau, alpha)
    z_hh = zeta_hh(sigma, tau, alpha)
    z_long = max(z_ll, z_hl, z_hh, 0.0)
    z_star = max(z_long, z_short)

    by_type = {"short": z_short, "ll": z_ll, "hl": z_hl, "hh": z_hh}
    dominant = frozenset(t for t, z in by_type.items() if _close(z, z_star))
    m_star = len(dominant)

    xg = xi_and_gamma(params)

    return ExponentReport(
        zeta_short=z_short,
        zeta_ll=z_ll,
        zeta_hl=z_hl,
        zeta_hh=z_hh,
        zeta_long=z_long,
        zeta_star=z_star,
        gamma_hl=gamma_hl(alpha),
        gamma_hh=gamma_hh(sigma, tau, alpha),
        gamma_long=xg.gamma_long,
        gamma_star=xg.gamma_star,
        xi_ll=xg.xi_ll,
        xi_hl=xg.xi_hl,
        xi_hh=xg.xi_hh,
        xi_star=xg.xi_star,
        m_long=xg.m_long,
        m_star=m_star,
        dominant_types=dominant,
    )


def xi_and_gamma(params: ModelParams) -> XiGamma:
    """Auxiliary xi exponents and the mark-suppression exponents gamma.

    xi_ll = 0, xi_hl = alpha - (tau-1), xi_hh = (sigma+1)*alpha - 2(tau-1);
    gamma_long = (alpha-1)/(xi_star + tau - 1) and
    gamma_star = min(gamma_long, 1/(sigma+1)).

    For alpha = inf the xi optimization degenerates: xi fields and
    gamma_long come back nan, gamma_star = 1/(sigma+1), and m_long is the
    multiplicity of the maximum among the long-edge zeta exponents
    (the high-high mechanism dominates except for the tie with high-low
    at sigma = 0).
    """
    tau = params.tau
    alpha = params.alpha
    sigma = params.effective_sigma

    if math.isinf(alpha):
        zl = (zeta_ll(alpha), zeta_hl(tau, alpha), zeta_hh(sigma, tau, alpha))
        m_long = multiplicity(zl) if not all(math.isinf(z) for z in zl) else 1
        return XiGamma(
            xi_ll=math.nan,
            xi_hl=math.nan,
            xi_hh=math.nan,
            xi_star=math.nan,
            m_long=m_long,
            gamma_long=math.nan,
            gamma_star=1.0 / (sigma + 1.0),
        )

    if math.isinf(tau):
        # Constant marks: the high-mark mechanisms vanish and any profile
        # suppression is vacuous, so gamma_long degenerates to 0.
        return XiGamma(
            xi_ll=0.0,
            xi_hl=-math.inf,
            xi_hh=-math.inf,
            xi_star=0.0,
            m_long=1,
            gamma_long=0.0,
            gamma_star=0.0,
        )

    xi_ll = 0.0
    xi_hl = alpha - (tau - 1.0)
    xi_hh = (sigma + 1.0) * alpha - 2.0 * (tau - 1.0)
    xi_star = max(xi_ll, xi_hl, xi_hh)
    m_long = multiplicity((xi_ll, xi_hl, xi_hh))
    gamma_long = (alpha - 1.0) / (xi_star + tau - 1.0)
    gamma_star = min(gamma_long, 1.0 / (sigma + 1.0))
    return XiGamma(xi_ll, xi_hl, xi_hh, xi_star, m_long, gamma_long, gamma_star)


def zeta_girg(tau: float, alpha: float) -> float:
    """Decay exponent (3-tau)/(2-(tau-1)/alpha) of the scale-free regime.

    Defined for tau in (2,3), alpha > 1; for alpha = inf the limit is
    (3-tau)/2.  Coincides with the high-high exponent at sigma = 1.
    """
    if not (2.0 < tau < 3.0):
        raise ValueError(f"tau must lie in (2, 3), got {tau}")
    if not (alpha > 1):
        raise ValueError(f"alpha must be > 1 (or inf), got {alpha}")
    if math.isinf(alpha):
        return (3.0 - tau) / 2.0
    return (3.0 - tau) / (2.0 - (tau - 1.0) / alpha)
