"""Backbone construction inside a box partitioned into equal subboxes.

The box of volume n is partitioned (up to a boundary remainder) into
subboxes of volume exactly k, ordered along a snake so that consecutive
subboxes share a face.  Restricting the graph to marks in a band
[w_hh, 2 w_hh) tuned to k, a backbone is a connected component of the
band graph that places at least s_k vertices in every subbox.  Vertices
with mark at least 2 w_hh then reach the backbone through a small set
of high-mark representatives in their nearest subbox, each individually
connectable with probability at least r_k = 1 - 2^(-1/s_k).

Low-mark vertices instead reach the backbone by a mark-increasing
ladder: hops through geometrically growing boxes whose volume matches
the kernel at the next mark scale, so that every hop succeeds with the
full edge-retention probability p.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exponents import gamma_hh, zeta_hh
from .components import component_labels
from .model import ModelParams

LAMBDA_STAR_HALF = 2.0 * math.log(2.0)

_GEOM_TOL = 1e-9


@dataclass(frozen=True)
class BackboneParams:
    """Constants tying the subbox volume k to the mark band and quota."""

    k: float
    c1: float
    w_hh: float
    s_k: float
    r_k_conn: float
    k1: float
    lambda_star_half: float = LAMBDA_STAR_HALF
    n_prime: Optional[float] = None

    @property
    def s_k_count(self) -> int:
        """Integer per-box quota (ceiling of s_k)."""
        return int(math.ceil(self.s_k - _GEOM_TOL))

    @property
    def meets_connection_threshold(self) -> bool:
        """Whether k >= k1, equivalently r_k_conn <= p."""
        return self.k >= self.k1


def c1_constant(params: ModelParams) -> float:
    """The band anchor constant: the solution C1 of the mean-degree
    balance equation for the band graph inside one subbox.

    Defined for any tau > 2 and alpha > 1; the backbone regime itself
    additionally needs a positive quota exponent, checked by
    backbone_constants.
    """
    d, sigma, tau, alpha = params.d, params.effective_sigma, params.tau, params.alpha
    if math.isinf(alpha):
        return (params.beta * d ** (-d / 2.0) * 2.0 ** (-d - 2 * sigma)) ** ((tau - 1) / (1 + sigma))
    coef = (params.p / 16.0) * params.beta**alpha * 2.0 ** (-alpha * d) * d ** (-alpha * d / 2.0)
    rhs = max(math.log(2.0), LAMBDA_STAR_HALF)
    return (coef / rhs) ** ((tau - 1) / ((1 + sigma) * alpha - (tau - 1)))


def backbone_constants(params: ModelParams, k: float, n: Optional[float] = None) -> BackboneParams:
    """Constants for subbox volume k: the band anchor C1, the band lower
    edge w_hh, the per-box quota s_k, and the per-edge rate r_k.

    Raises ValueError when the quota exponent is nonpositive, i.e. the
    mark distribution is too light for a band backbone at any k.
    """
    if k <= 0:
        raise ValueError("subbox volume k must be positive")
    sigma, tau, alpha = params.effective_sigma, params.tau, params.alpha
    zeta = zeta_hh(sigma, tau, alpha)
    if zeta <= 0:
        raise ValueError(
            f"per-box quota exponent {zeta:.4g} is nonpositive; "
            "band backbone unavailable for these parameters"
        )
    d = params.d
    c1 = c1_constant(params)
    gamma = gamma_hh(sigma, tau, alpha)
    w_hh = c1 ** (-1.0 / (tau - 1)) * k**gamma
    s_k = (c1 / 16.0) * k**zeta
    r_k = 1.0 - 2.0 ** (-1.0 / s_k)
    if params.p < 1.0:
        s_need = math.log(2.0) / (-math.log1p(-params.p))
        k1 = (16.0 * s_need / c1) ** (1.0 / zeta)
    else:
        k1 = 0.0
    n_prime = None
    if n is not None:
        if n < k:
            raise ValueError("box volume n must be at least the subbox volume k")
        n_prime = k * _side_count(n, k, d) ** d
    return BackboneParams(
        k=float(k), c1=c1, w_hh=w_hh, s_k=s_k, r_k_conn=r_k, k1=k1, n_prime=n_prime
    )


def _side_count(volume_n: float, k: float, dim: int) -> int:
    """Subboxes per axis: floor((n/k)^(1/d)), robust to float dips just
    below an exact integer, and never overshooting the box."""
    m = int(math.floor((volume_n / k) ** (1.0 / dim) + _GEOM_TOL))
    while m > 1 and k * m**dim > volume_n * (1.0 + 1e-12):
        m -= 1
    return m


def _snake_order(m: int, d: int) -> np.ndarray:
    """Multi-indices of an m^d grid ordered so consecutive entries differ
    by one step along a single axis (a boustrophedon walk)."""
    order = np.arange(m, dtype=np.int64).reshape(-1, 1)
    for _ in range(1, d):
        blocks = []
        for v in range(m):
            block = order if v % 2 == 0 else order[::-1]
            col = np.full((len(block), 1), v, dtype=np.int64)
            blocks.append(np.hstack([block, col]))
        order = np.vstack(blocks)
    return order


@dataclass(frozen=True)
class SubboxPartition:
    """Partition of the largest divisible sub-box into volume-k subboxes,
    snake-ordered, with nearest-box assignment for all points."""

    volume_n: float
    k: float
    dim: int
    m_side: int
    n_prime: float
    side: float
    extent: float
    order: np.ndarray = field(repr=False)
    _rank: np.ndarray = field(repr=False)

    @property
    def num_boxes(self) -> int:
        return self.m_side**self.dim

    def box_bounds(self, index: int) -> np.ndarray:
        """(2, d) lower/upper corners of the subbox at snake position index."""
        multi = self.order[index]
        lo = -self.extent / 2.0 + multi * self.side
        return np.stack([lo, lo + self.side])

    def _flat(self, multi: np.ndarray) -> np.ndarray:
        weights = self.m_side ** np.arange(self.dim, dtype=np.int64)
        return multi @ weights

    def assign(self, positions: np.ndarray) -> np.ndarray:
        """Snake index of the subbox containing each point, or the nearest
        subbox for points outside the partitioned region.  Points on a
        shared face go to the box with the smaller snake index."""
        pos = np.asarray(positions, dtype=np.float64).reshape(-1, self.dim)
        t = (pos + self.extent / 2.0) / self.side
        g = np.clip(np.floor(t).astype(np.int64), 0, self.m_side - 1)
        out = self._rank[self._flat(g)]
        # a point exactly on an interior face sits in two closed boxes
        tie = (t == np.floor(t)) & (t > 0) & (t < self.m_side)
        for i in np.flatnonzero(tie.any(axis=1)):
            options = [
                (int(g[i, a]) - 1, int(g[i, a])) if tie[i, a] else (int(g[i, a]),)
                for a in range(self.dim)
            ]
            grid = np.stack(np.meshgrid(*options, indexing="ij"), axis=-1).reshape(-1, self.dim)
            out[i] = self._rank[self._flat(grid)].min()
        return out

    def contains(self, positions: np.ndarray) -> np.ndarray:
        """Whether each point lies in the partitioned region (closed box)."""
        pos = np.asarray(positions, dtype=np.float64).reshape(-1, self.dim)
        return np.all(np.abs(pos) <= self.extent / 2.0, axis=1)


def subbox_partition(volume_n: float, k: float, dim: int) -> SubboxPartition:
    if k <= 0 or volume_n < k:
        raise ValueError("need 0 < k <= n to partition into subboxes")
    m = _side_count(volume_n, k, dim)
    n_prime = k * m**dim
    side = k ** (1.0 / dim)
    order = _snake_order(m, dim)
    weights = m ** np.arange(dim, dtype=np.int64)
    rank = np.empty(m**dim, dtype=np.int64)
    rank[order @ weights] = np.arange(m**dim)
    return SubboxPartition(
        volume_n=float(volume_n),
        k=float(k),
        dim=dim,
        m_side=m,
        n_prime=n_prime,
        side=side,
        extent=side * m,
        order=order,
        _rank=rank,
    )


@dataclass(frozen=True)
class BackboneResult:
    """Outcome of the band-component check over the subbox partition."""

    holds_A_bb: bool
    backbone_component: np.ndarray
    per_box_counts: np.ndarray
    constants: BackboneParams
    partition: SubboxPartition

    def __post_init__(self):
        counts = np.asarray(self.per_box_counts, dtype=np.int64)
        object.__setattr__(self, "per_box_counts", counts)
        quota_met = bool(np.all(counts >= self.constants.s_k - _GEOM_TOL))
        if self.holds_A_bb != quota_met:
            raise ValueError("holds_A_bb must match the per-box quota check")


def construct_backbone(graph, k: float) -> BackboneResult:
    """Restrict the graph to the mark band [w_hh, 2 w_hh), partition the
    box into subboxes of volume k, and look for a band component with at
    least s_k vertices in every subbox.

    The reported component is the largest one meeting the quota; when
    none does, the component seeded by the largest intra-first-subbox
    cluster is reported with its (failing) counts.
    """
    params = graph.params
    consts = backbone_constants(params, k, n=graph.volume_n)
    if not consts.meets_connection_threshold:
        warnings.warn(
            f"subbox volume {k:.6g} is below the connection threshold "
            f"{consts.k1:.6g}; per-edge rate exceeds p",
            stacklevel=2,
        )
    part = subbox_partition(graph.volume_n, k, params.d)
    num_boxes = part.num_boxes

    marks = graph.marks
    band = np.flatnonzero((marks >= consts.w_hh) & (marks < 2.0 * consts.w_hh))
    empty = np.array([], dtype=np.int64)
    if len(band) == 0:
        return BackboneResult(
            holds_A_bb=False,
            backbone_component=empty,
            per_box_counts=np.zeros(num_boxes, dtype=np.int64),
            constants=consts,
            partition=part,
        )

    in_band = np.zeros(graph.num_vertices, dtype=bool)
    in_band[band] = True
    new_id = np.full(graph.num_vertices, -1, dtype=np.int64)
    new_id[band] = np.arange(len(band))
    edges = graph.edges
    if len(edges) > 0:
        keep = in_band[edges[:, 0]] & in_band[edges[:, 1]]
        band_edges = new_id[edges[keep]]
    else:
        band_edges = np.empty((0, 2), dtype=np.int64)

    labels = component_labels(len(band), band_edges)
    num_comps = int(labels.max()) + 1
    pos = graph.positions[band]
    inside = part.contains(pos)
    box_of = part.assign(pos)
    key = labels[inside] * num_boxes + box_of[inside]
    table = np.bincount(key, minlength=num_comps * num_boxes).reshape(num_comps, num_boxes)

    quota_ok = np.all(table >= consts.s_k - _GEOM_TOL, axis=1)
    comp_sizes = np.bincount(labels, minlength=num_comps)
    if quota_ok.any():
        candidates = np.flatnonzero(quota_ok)
        chosen = int(candidates[np.argmax(comp_sizes[candidates])])
        holds = True
    else:
        holds = False
        chosen = _seed_component(labels, band_edges, inside, box_of)
        if chosen is None:
            return BackboneResult(
                holds_A_bb=False,
                backbone_component=empty,
                per_box_counts=np.zeros(num_boxes, dtype=np.int64),
                constants=consts,
                partition=part,
            )
    return BackboneResult(
        holds_A_bb=holds,
        backbone_component=band[labels == chosen],
        per_box_counts=table[chosen],
        constants=consts,
        partition=part,
    )


def _seed_component(labels, band_edges, inside, box_of):
    """Label of the band component containing the largest cluster induced
    inside the first subbox, or None when that subbox has no band vertex."""
    first = inside & (box_of == 0)
    members = np.flatnonzero(first)
    if len(members) == 0:
        return None
    sub_id = np.full(len(labels), -1, dtype=np.int64)
    sub_id[members] = np.arange(len(members))
    if len(band_edges) > 0:
        keep = first[band_edges[:, 0]] & first[band_edges[:, 1]]
        sub_edges = sub_id[band_edges[keep]]
    else:
        sub_edges = np.empty((0, 2), dtype=np.int64)
    sub_labels = component_labels(len(members), sub_edges)
    sizes = np.bincount(sub_labels)
    target = int(np.argmax(sizes))
    seed_vertex = members[sub_labels == target][0]
    return int(labels[seed_vertex])


def nearest_backbone_set(graph, result: BackboneResult, u: int) -> np.ndarray:
    """The ceil(s_k) highest-mark backbone vertices in the subbox
    containing (or nearest to) vertex u, mark ties broken by index.

    Every returned vertex is within distance 2 sqrt(d) k^(1/d) of u;
    violating that bound is an internal error.
    """
    if not result.holds_A_bb:
        raise ValueError("no backbone: the per-box quota event failed")
    part = result.partition
    xu = graph.positions[u]
    box = int(part.assign(xu)[0])
    comp = result.backbone_component
    cpos = graph.positions[comp]
    sel = comp[part.contains(cpos) & (part.assign(cpos) == box)]
    need = result.constants.s_k_count
    order = np.lexsort((sel, -graph.marks[sel]))
    chosen = sel[order[:need]]
    bounds = part.box_bounds(box)
    far = np.maximum(np.abs(xu - bounds[0]), np.abs(xu - bounds[1]))
    limit = 2.0 * math.sqrt(part.dim) * part.k ** (1.0 / part.dim)
    if np.linalg.norm(far) > limit + _GEOM_TOL:
        raise RuntimeError("backbone subbox is farther than the distance bound")
    return chosen


def ladder_box(x: np.ndarray, j: int, m_w: float, params: ModelParams, volume_n: float) -> np.ndarray:
    """(2, d) bounds of the rung-j ladder box around x: the box of volume
    beta 2^(-sigma) d^(-d/2) (2^j m_w)^(sigma+1) clipped to the sample box."""
    d, sigma = params.d, params.effective_sigma
    vol = params.beta * 2.0 ** (-sigma) * d ** (-d / 2.0) * (2.0**j * m_w) ** (sigma + 1)
    half = vol ** (1.0 / d) / 2.0
    outer = volume_n ** (1.0 / d) / 2.0
    x = np.asarray(x, dtype=np.float64).reshape(d)
    lo = np.maximum(x - half, -outer)
    hi = np.minimum(x + half, outer)
    return np.stack([lo, hi])


def _neighbor_lists(num_vertices: int, edges: np.ndarray):
    """CSR-style adjacency: (offsets, targets) over both edge directions."""
    if len(edges) == 0:
        return np.zeros(num_vertices + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.argsort(src, kind="stable")
    offsets = np.zeros(num_vertices + 1, dtype=np.int64)
    np.add.at(offsets, src + 1, 1)
    np.cumsum(offsets, out=offsets)
    return offsets, dst[order]


def mark_ladder_path(graph, result: BackboneResult, u: int, m_w: float):
    """Greedy mark-increasing path from a low-mark vertex u into the
    nearest backbone representatives, or None when a rung is empty.

    Rung j looks for a graph neighbor of the previous vertex inside the
    rung-j ladder box with mark in [2^j m_w, 2^(j+1) m_w); rungs stop
    just below the band, then one final hop targets the representative
    set of u.  When the band starts at or below 2 m_w the ladder is
    empty and only the final hop is attempted.
    """
    if not result.holds_A_bb:
        raise ValueError("no backbone: the per-box quota event failed")
    if m_w <= 0:
        raise ValueError("mark floor m_w must be positive")
    wu = graph.marks[u]
    if not (m_w <= wu < 2.0 * m_w):
        raise ValueError("vertex mark must lie in [m_w, 2 m_w)")
    w_hh = result.constants.w_hh
    offsets, targets = _neighbor_lists(graph.num_vertices, graph.edges)
    xu = graph.positions[u]

    # largest j with 2^(j+1) m_w below the band; 0 also covers the
    # degenerate case w_hh <= 2 m_w where only the final hop remains
    j_star = 0
    while 2.0 ** (j_star + 2) * m_w < w_hh:
        j_star += 1

    path = [int(u)]
    cur = int(u)
    for j in range(1, j_star + 1):
        box = ladder_box(xu, j, m_w, graph.params, graph.volume_n)
        lo_mark, hi_mark = 2.0**j * m_w, 2.0 ** (j + 1) * m_w
        nb = targets[offsets[cur] : offsets[cur + 1]]
        pos = graph.positions[nb]
        ok = (
            np.all((pos >= box[0]) & (pos <= box[1]), axis=1)
            & (graph.marks[nb] >= lo_mark)
            & (graph.marks[nb] < hi_mark)
        )
        hits = nb[ok]
        if len(hits) == 0:
            return None
        cur = int(hits.min())
        path.append(cur)

    reps = set(int(v) for v in nearest_backbone_set(graph, result, u))
    nb = targets[offsets[cur] : offsets[cur + 1]]
    final = sorted(v for v in set(int(x) for x in nb) if v in reps)
    if not final:
        return None
    path.append(final[0])
    return path
