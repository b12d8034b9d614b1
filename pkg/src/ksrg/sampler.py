"""Vertex-set and edge-set sampling inside a finite volume-n box.

Vertices are a unit-intensity Poisson point process on the centered box
(or the integer lattice restricted to it) with i.i.d. Pareto marks.
Edges are conditionally independent given the marked vertex set, so the
whole graph is a deterministic function of one 64-bit seed: vertex
attributes hash (seed, index) and every pair's edge coin hashes
(seed, min id, max id).  The `exact` builder enumerates all pairs.  The
`cell_list` builder buckets vertices into dyadic mark layers and a
hierarchy of dyadic spatial cells and handles each unordered pair in
exactly one distance band:

* the near band (distance up to the layer pair's kernel reach) evaluates
  the pair coin directly, bit-identical to `exact`;
* far bands are thinned first: in pair-keyed mode by comparing the pair
  coin against the band's probability bound (still bit-identical), and
  in streamed mode by a sequential geometric-jump Bernoulli sweep over
  the band's candidate list followed by exact rejection, which is
  distributionally identical and feasible for millions of vertices.

Streamed mode is selected automatically above 5000 vertices for
polynomial profiles; threshold profiles never need it because the kernel
bound gives an absolute cutoff distance.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import _rng
from .model import (
    MarkedVertex,
    ModelParams,
    box_side,
    connection_prob_array,
    kernel_value_array,
    pareto_quantile,
)

# Above this vertex count the all-pairs builder becomes the bottleneck and
# the default switches to the cell list (and the cell list to streamed
# far-field thinning for polynomial profiles).
PAIR_EXACT_THRESHOLD = 5000

# Layer pairs with at most this many candidate pairs skip the spatial
# hierarchy and evaluate the full product directly.
_SMALL_BLOCK = 4096

_CHUNK = 1 << 20


@dataclass(frozen=True)
class VertexSet:
    """Marked vertices with stable identities.

    ids survive mark restriction, so edge coins keyed by id let an
    induced subgraph on a mark range be rebuilt from the restricted set
    alone.
    """

    positions: np.ndarray
    marks: np.ndarray
    volume_n: float
    ids: np.ndarray
    palm_index: Optional[int] = None

    def __len__(self) -> int:
        return len(self.marks)

    def __getitem__(self, i: int) -> MarkedVertex:
        return MarkedVertex(tuple(self.positions[i]), float(self.marks[i]))

    def __iter__(self) -> Iterator[MarkedVertex]:
        for i in range(len(self)):
            yield self[i]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    def as_marked_vertices(self) -> list:
        return list(self)

    def restrict_marks(self, lo: float, hi: float) -> "VertexSet":
        """Vertices with mark in [lo, hi), ids preserved."""
        keep = (self.marks >= lo) & (self.marks < hi)
        palm = None
        if self.palm_index is not None and keep[self.palm_index]:
            palm = int(np.count_nonzero(keep[: self.palm_index]))
        return VertexSet(
            positions=self.positions[keep],
            marks=self.marks[keep],
            volume_n=self.volume_n,
            ids=self.ids[keep],
            palm_index=palm,
        )


def sample_vertices(params: ModelParams, n: float, seed: int) -> VertexSet:
    """Sample the marked vertex set of the volume-n box.

    Poisson: count ~ Poisson(n), positions i.i.d. uniform in the box.
    Lattice: every integer point of the closed box.  Marks are i.i.d.
    Pareto with tail exponent tau - 1, all 1 when tau is infinite.
    """
    if not n > 0:
        raise ValueError(f"volume n must be positive, got {n}")
    d = params.d
    side = box_side(n, d)
    if params.vertex_set == "poisson":
        count = _rng.poisson_count(seed, n)
        idx = np.arange(count, dtype=np.int64)
        positions = np.empty((count, d), dtype=np.float64)
        for axis in range(d):
            u = _rng.uniform_words(seed, _rng.TAG_POSITION, idx, axis)
            positions[:, axis] = (u - 0.5) * side
    else:
        lo = math.ceil(-side / 2.0)
        hi = math.floor(side / 2.0)
        axes = [np.arange(lo, hi + 1, dtype=np.float64)] * d
        grids = np.meshgrid(*axes, indexing="ij")
        positions = np.stack([g.ravel() for g in grids], axis=1)
        idx = np.arange(len(positions), dtype=np.int64)
    marks = pareto_quantile(_rng.uniform_words(seed, _rng.TAG_MARK, idx), params.tau)
    return VertexSet(positions=positions, marks=marks, volume_n=float(n), ids=idx)


def palm_insert(vertices: VertexSet, params: ModelParams, seed: int) -> VertexSet:
    """Append a vertex at the origin with a fresh Pareto mark."""
    d = vertices.positions.shape[1] if len(vertices) else params.d
    mark = float(pareto_quantile(_rng.uniform_words(seed, _rng.TAG_PALM, 0), params.tau)[0])
    new_id = int(vertices.ids.max()) + 1 if len(vertices) else 0
    return VertexSet(
        positions=np.concatenate(
            [vertices.positions.reshape(-1, d), np.zeros((1, d))], axis=0
        ),
        marks=np.concatenate([vertices.marks, [mark]]),
        volume_n=vertices.volume_n,
        ids=np.concatenate([vertices.ids, [new_id]]),
        palm_index=len(vertices),
    )


@dataclass(frozen=True)
class SpatialGraph:
    """A sampled graph: marked vertices plus an edge list of row pairs."""

    volume_n: float
    positions: np.ndarray
    marks: np.ndarray
    edges: np.ndarray
    seed: int
    params: ModelParams
    palm_origin: Optional[int] = None
    vertex_ids: Optional[np.ndarray] = None

    @property
    def num_vertices(self) -> int:
        return len(self.marks)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def ids(self) -> np.ndarray:
        if self.vertex_ids is not None:
            return self.vertex_ids
        return np.arange(self.num_vertices, dtype=np.int64)

    @property
    def vertices(self) -> VertexSet:
        return VertexSet(
            positions=self.positions,
            marks=self.marks,
            volume_n=self.volume_n,
            ids=self.ids,
            palm_index=self.palm_origin,
        )

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_vertices, dtype=np.int64)
        if len(self.edges):
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def dump(self) -> str:
        """Plain-text serialization: header, vertex lines, edge lines."""
        out = io.StringIO()
        out.write("# ksrg-graph 1\n")
        out.write(f"# params {json.dumps(self.params.to_dict(), sort_keys=True)}\n")
        out.write(f"# volume_n {self.volume_n:.17g}\n")
        out.write(f"# seed {self.seed}\n")
        out.write(f"# num_vertices {self.num_vertices}\n")
        out.write(f"# num_edges {self.num_edges}\n")
        if self.palm_origin is not None:
            out.write(f"# palm_origin {int(self.ids[self.palm_origin])}\n")
        ids = self.ids
        for i in range(self.num_vertices):
            coords = " ".join(f"{c:.17g}" for c in self.positions[i])
            out.write(f"{int(ids[i])} {coords} {self.marks[i]:.17g}\n")
        for u, v in self.edges:
            out.write(f"{int(ids[u])} {int(ids[v])}\n")
        return out.getvalue()

    def dump_to(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.dump())

    @classmethod
    def load(cls, text: str) -> "SpatialGraph":
        header: dict = {}
        body: list = []
        saw_magic = False
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split(None, 1)
                if len(parts) == 2 and parts[0] == "ksrg-graph":
                    saw_magic = True
                elif len(parts) == 2:
                    header[parts[0]] = parts[1]
                continue
            body.append(line)
        if not saw_magic:
            raise ValueError("not a ksrg graph dump: missing format line")
        try:
            params = ModelParams.from_json(header["params"])
            n_vertices = int(header["num_vertices"])
            n_edges = int(header["num_edges"])
        except KeyError as exc:
            raise ValueError(f"graph dump is missing header field {exc}") from exc
        if len(body) != n_vertices + n_edges:
            raise ValueError("vertex/edge line count does not match header")
        d = params.d
        ids = np.empty(n_vertices, dtype=np.int64)
        positions = np.empty((n_vertices, d), dtype=np.float64)
        marks = np.empty(n_vertices, dtype=np.float64)
        for i, line in enumerate(body[:n_vertices]):
            fields = line.split()
            if len(fields) != d + 2:
                raise ValueError(f"bad vertex line: {line!r}")
            ids[i] = int(fields[0])
            positions[i] = [float(x) for x in fields[1 : 1 + d]]
            marks[i] = float(fields[-1])
        row_of = {int(v): i for i, v in enumerate(ids)}
        edges = np.empty((n_edges, 2), dtype=np.int64)
        for k, line in enumerate(body[n_vertices:]):
            a, b = (row_of[int(x)] for x in line.split())
            edges[k] = sorted((a, b))
        palm = header.get("palm_origin")
        return cls(
            volume_n=float(header["volume_n"]),
            positions=positions,
            marks=marks,
            edges=_canonical_edges(edges, n_vertices),
            seed=int(header["seed"]),
            params=params,
            palm_origin=row_of[int(palm)] if palm is not None else None,
            vertex_ids=ids,
        )

    @classmethod
    def load_from(cls, path: str) -> "SpatialGraph":
        with open(path) as fh:
            return cls.load(fh.read())


def _canonical_edges(edges: np.ndarray, num_vertices: int) -> np.ndarray:
    """Sorted, deduplicated (u < v) edge rows in a compact dtype."""
    dtype = np.int32 if num_vertices <= np.iinfo(np.int32).max else np.int64
    if len(edges) == 0:
        return np.empty((0, 2), dtype=dtype)
    e = np.asarray(edges, dtype=np.int64)
    lo = np.minimum(e[:, 0], e[:, 1])
    hi = np.maximum(e[:, 0], e[:, 1])
    if num_vertices > np.iinfo(np.int32).max:
        rows = np.unique(np.stack([lo, hi], axis=1), axis=0)
        return rows.astype(dtype)
    # Scalar keys sort an order of magnitude faster than 2-column rows.
    key = np.unique(lo * np.int64(num_vertices) + hi)
    out = np.empty((len(key), 2), dtype=dtype)
    out[:, 0] = key // num_vertices
    out[:, 1] = key % num_vertices
    return out


def build_graph(
    vertices: VertexSet,
    params: ModelParams,
    seed: int,
    method: str = "auto",
    cell_list_mode: str = "auto",
) -> SpatialGraph:
    """Sample the edge set over a vertex set, deterministically in seed.

    method: "exact" (all pairs), "cell_list", or "auto" (exact up to
    5000 vertices).  cell_list_mode: "pair_keyed" forces bit-identical
    agreement with exact at any size, "streamed" forces the sequential
    far-field sweep, "auto" picks pair_keyed for graphs small enough to
    hash all pairs and for threshold profiles.
    """
    if method not in ("auto", "exact", "cell_list"):
        raise ValueError(f"unknown method {method!r}")
    if cell_list_mode not in ("auto", "pair_keyed", "streamed"):
        raise ValueError(f"unknown cell_list_mode {cell_list_mode!r}")
    count = len(vertices)
    if method == "auto":
        method = "exact" if count <= PAIR_EXACT_THRESHOLD else "cell_list"
    if method == "exact":
        edges = _edges_exact(vertices, params, seed)
    else:
        if cell_list_mode == "auto":
            if params.threshold_profile or count <= PAIR_EXACT_THRESHOLD:
                cell_list_mode = "pair_keyed"
            else:
                cell_list_mode = "streamed"
        edges = _edges_cell_list(vertices, params, seed, cell_list_mode)
    return SpatialGraph(
        volume_n=vertices.volume_n,
        positions=vertices.positions,
        marks=vertices.marks,
        edges=_canonical_edges(edges, count),
        seed=seed,
        params=params,
        palm_origin=vertices.palm_index,
        vertex_ids=vertices.ids.copy(),
    )


def sample_graph(
    params: ModelParams,
    n: float,
    seed: int,
    method: str = "auto",
    palm: bool = False,
    cell_list_mode: str = "auto",
) -> SpatialGraph:
    """Convenience: sample vertices (optionally Palm-inserted) and build edges."""
    vs = sample_vertices(params, n, seed)
    if palm:
        vs = palm_insert(vs, params, seed)
    return build_graph(vs, params, seed, method=method, cell_list_mode=cell_list_mode)


def _pair_dists(pos: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    diff = pos[u] - pos[v]
    if pos.shape[1] == 1:
        return np.abs(diff[:, 0])
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _pair_probs(
    pos: np.ndarray, marks: np.ndarray, u: np.ndarray, v: np.ndarray, params: ModelParams
) -> np.ndarray:
    dist = _pair_dists(pos, u, v)
    kappa = kernel_value_array(marks[u], marks[v], params)
    return connection_prob_array(dist**params.d, kappa, params)


def _edges_exact(vertices: VertexSet, params: ModelParams, seed: int) -> np.ndarray:
    pos = vertices.positions
    marks = vertices.marks
    ids = vertices.ids
    count = len(marks)
    if count < 2:
        return np.empty((0, 2), dtype=np.int64)
    rows_per_chunk = max(1, _CHUNK // count)
    found = []
    for r0 in range(0, count - 1, rows_per_chunk):
        r1 = min(r0 + rows_per_chunk, count - 1)
        rows = np.arange(r0, r1, dtype=np.int64)
        cols = np.arange(r0 + 1, count, dtype=np.int64)
        u = np.repeat(rows, len(cols))
        v = np.tile(cols, len(rows))
        keep = v > u
        u, v = u[keep], v[keep]
        coin = _rng.pair_uniform(seed, ids[u], ids[v])
        prob = _pair_probs(pos, marks, u, v, params)
        hit = coin < prob
        if hit.any():
            found.append(np.stack([u[hit], v[hit]], axis=1))
    if not found:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(found, axis=0)


# Cell-list internals ------------------------------------------------------


def _morton_encode(cells: np.ndarray, bits: int) -> np.ndarray:
    d = cells.shape[1]
    if d == 1:
        return cells[:, 0].astype(np.uint64)
    out = np.zeros(len(cells), dtype=np.uint64)
    c = cells.astype(np.uint64)
    one = np.uint64(1)
    for b in range(bits):
        for axis in range(d):
            out |= ((c[:, axis] >> np.uint64(b)) & one) << np.uint64(b * d + axis)
    return out


def _morton_decode(codes: np.ndarray, bits: int, d: int) -> np.ndarray:
    if d == 1:
        return codes.astype(np.int64).reshape(-1, 1)
    out = np.zeros((len(codes), d), dtype=np.uint64)
    one = np.uint64(1)
    for b in range(bits):
        for axis in range(d):
            out[:, axis] |= ((codes >> np.uint64(b * d + axis)) & one) << np.uint64(b)
    return out.astype(np.int64)


class _Layer:
    """Vertices of one dyadic mark layer, sorted by unit-cell Morton code."""

    def __init__(self, rows: np.ndarray, pos: np.ndarray, side: float, bits: int):
        base = np.floor(pos + side / 2.0).astype(np.int64)
        np.clip(base, 0, (1 << bits) - 1, out=base)
        codes = _morton_encode(base, bits)
        order = np.argsort(codes, kind="stable")
        self.rows = rows[order]
        self.pos = pos[order]
        self.codes = codes[order]
        self._runs: dict = {}

    def __len__(self) -> int:
        return len(self.rows)

    def runs_at(self, level: int, d: int):
        """Occupied coarse cells at a dyadic level: (ids, starts, counts)."""
        if level not in self._runs:
            coarse = self.codes >> np.uint64(d * level)
            cell_ids, starts = np.unique(coarse, return_index=True)
            counts = np.diff(np.append(starts, len(coarse)))
            self._runs[level] = (
                cell_ids,
                starts.astype(np.int64),
                counts.astype(np.int64),
            )
        return self._runs[level]


def _kernel_layer_sup(ja: int, jb: int, params: ModelParams) -> float:
    """Kernel supremum over marks in layers [2^ja, 2^(ja+1)) x [2^jb, 2^(jb+1))."""
    if params.kernel == "sum":
        return (2.0 ** ((ja + 1) / params.d) + 2.0 ** ((jb + 1) / params.d)) ** params.d
    lo, hi = min(ja, jb), max(ja, jb)
    return 2.0 ** (hi + 1) * 2.0 ** (params.sigma * (lo + 1))


def _candidate_kernel_bound(ja: int, jb: int, params: ModelParams) -> float:
    # Candidate cutoff for the threshold profile: the dyadic-layer bound
    # 2^(ja+jb+sigma*min+2) kept as a floor under the true supremum, so the
    # scanned region never shrinks below that reference constant.
    lo = min(ja, jb)
    sigma = params.effective_sigma
    floor = 2.0 ** (ja + jb + sigma * lo + 2)
    return max(floor, _kernel_layer_sup(ja, jb, params))


def _offsets_for_band(d: int, g: float, lo: float, hi: float) -> np.ndarray:
    """Integer cell offsets (cell size g) whose pair-distance range
    intersects the band (lo, hi]."""
    reach = int(math.ceil(hi / g)) + 1
    axes = [np.arange(-reach, reach + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    gap = np.maximum(np.abs(grid) - 1, 0)
    min_dist = g * np.sqrt((gap**2).sum(axis=1))
    max_dist = g * np.sqrt(((np.abs(grid) + 1) ** 2).sum(axis=1))
    keep = (min_dist <= hi) & (max_dist > lo)
    return grid[keep]


class _BlockSet:
    """Flat candidate index space over matched cell-pair blocks."""

    def __init__(
        self,
        layer_a: _Layer,
        layer_b: _Layer,
        same_layer: bool,
        level: int,
        offsets: np.ndarray,
        d: int,
        bits: int,
    ):
        ids_a, starts_a, counts_a = layer_a.runs_at(level, d)
        ids_b, starts_b, counts_b = layer_b.runs_at(level, d)
        top = ((1 << bits) - 1) >> level
        coords = _morton_decode(ids_a, bits - level if d > 1 else bits, d)
        n_cells, n_off = len(ids_a), len(offsets)
        shifted = coords[:, None, :] + offsets[None, :, :]
        valid = np.all((shifted >= 0) & (shifted <= top), axis=2).ravel()
        src = np.repeat(np.arange(n_cells), n_off)[valid]
        targets = _morton_encode(
            shifted.reshape(-1, d)[valid], bits - level if d > 1 else bits
        )
        hit = np.zeros(len(targets), dtype=bool)
        if len(ids_b):
            pos_b = np.searchsorted(ids_b, targets)
            np.clip(pos_b, 0, len(ids_b) - 1, out=pos_b)
            hit = ids_b[pos_b] == targets
        else:
            pos_b = np.zeros(0, dtype=np.int64)
        if same_layer:
            # Each unordered cell pair once: keep targets at or above the
            # source cell; within the self block pairs are gated u < v.
            hit &= targets >= ids_a[src]
        src, pos_b = src[hit], pos_b[hit]
        self.a_start = starts_a[src]
        self.a_count = counts_a[src]
        self.b_start = starts_b[pos_b]
        self.b_count = counts_b[pos_b]
        sizes = self.a_count * self.b_count
        self.cum = np.concatenate([[0], np.cumsum(sizes)])
        self.total = int(self.cum[-1])

    def locate(self, flat: np.ndarray):
        """Map flat candidate indices to (a_slot, b_slot) layer slots."""
        block = np.searchsorted(self.cum, flat, side="right") - 1
        local = flat - self.cum[block]
        b_count = self.b_count[block]
        a_slot = self.a_start[block] + local // b_count
        b_slot = self.b_start[block] + local % b_count
        return a_slot, b_slot


def _edges_cell_list(
    vertices: VertexSet, params: ModelParams, seed: int, mode: str
) -> np.ndarray:
    pos = vertices.positions
    marks = vertices.marks
    ids = vertices.ids
    d = params.d
    count = len(marks)
    if count < 2:
        return np.empty((0, 2), dtype=np.int64)
    side = box_side(vertices.volume_n, d)
    diam = side * math.sqrt(d)
    bits = max(1, int(math.ceil(math.log2(max(2.0, math.ceil(side))))))
    if bits * d > 62:
        raise ValueError("volume too large for the cell index")

    layer_of = np.floor(np.log2(marks)).astype(np.int64)
    layer_keys = [int(j) for j in np.unique(layer_of)]
    layers = {}
    for j in layer_keys:
        sel = np.flatnonzero(layer_of == j).astype(np.int64)
        layers[j] = _Layer(sel, pos[sel], side, bits)

    pair_keyed = mode == "pair_keyed"
    found: list = []

    def eval_exact(u_rows, v_rows, prefilter: float = 1.0):
        """Pair-keyed evaluation; prefilter drops coins >= the band bound."""
        for c0 in range(0, len(u_rows), _CHUNK):
            u = u_rows[c0 : c0 + _CHUNK]
            v = v_rows[c0 : c0 + _CHUNK]
            coin = _rng.pair_uniform(seed, ids[u], ids[v])
            if prefilter < 1.0:
                keep = coin < prefilter
                u, v, coin = u[keep], v[keep], coin[keep]
                if not len(u):
                    continue
            prob = _pair_probs(pos, marks, u, v, params)
            hit = coin < prob
            if hit.any():
                found.append(np.stack([u[hit], v[hit]], axis=1))

    for ia, ja in enumerate(layer_keys):
        for jb in layer_keys[ia:]:
            same = ja == jb
            layer_a, layer_b = layers[ja], layers[jb]
            na, nb = len(layer_a), len(layer_b)
            n_pairs = na * (na - 1) // 2 if same else na * nb
            if n_pairs <= 0:
                continue

            if na * nb <= _SMALL_BLOCK or side <= 2.0:
                u, v = _full_product_rows(layer_a, layer_b, same)
                if params.threshold_profile:
                    cutoff = (
                        params.beta * _candidate_kernel_bound(ja, jb, params)
                    ) ** (1.0 / d)
                    keep = _pair_dists(pos, u, v) <= cutoff
                    u, v = u[keep], v[keep]
                eval_exact(u, v)
                continue

            if params.threshold_profile:
                cutoff = (
                    params.beta * _candidate_kernel_bound(ja, jb, params)
                ) ** (1.0 / d)
                _scan_pairs_within(
                    layer_a, layer_b, same, d, bits, min(cutoff, diam), eval_exact
                )
                continue

            # Polynomial profile: partition pair space by distance into a
            # near ball plus dyadic bands, each with a probability bound.
            kappa_sup = _kernel_layer_sup(ja, jb, params)
            near_radius = (params.beta * kappa_sup) ** (1.0 / d)
            level0 = min(
                max(0, int(math.ceil(math.log2(max(near_radius, 1.0))))), bits
            )
            t0 = 2.0**level0
            _scan_pairs_within(
                layer_a, layer_b, same, d, bits, min(max(t0, near_radius), diam),
                eval_exact,
            )
            # If the level cap applied (near_radius past the box scale)
            # the near scan still covered out to near_radius, so the bands
            # start wherever the scan stopped.
            band_lo = max(t0, near_radius)
            level = level0
            stream = None
            while band_lo < diam:
                p_bar = params.p * min(
                    1.0, params.beta * kappa_sup / band_lo**d
                ) ** params.alpha
                if p_bar * n_pairs <= 2.0 and not pair_keyed:
                    break
                band_hi = band_lo * 2.0
                lvl = min(level, bits)
                g_cell = 2.0**lvl
                offsets = _offsets_for_band(d, g_cell, band_lo, band_hi)
                blocks = _BlockSet(layer_a, layer_b, same, lvl, offsets, d, bits)
                if blocks.total:
                    if pair_keyed:
                        _band_pairs_pair_keyed(
                            blocks, layer_a, layer_b, same, band_lo, band_hi,
                            p_bar, pos, eval_exact,
                        )
                    else:
                        if stream is None:
                            stream = _rng.stream(seed, _rng.TAG_FAR, ja, jb)
                        _accept_streamed(
                            stream, blocks.total, p_bar, blocks.locate,
                            layer_a, layer_b, same, band_lo, band_hi,
                            pos, marks, params, found,
                        )
                band_lo = band_hi
                level += 1

            if band_lo < diam and not pair_keyed:
                # Tail: every remaining pair as one thinned product space.
                p_bar = params.p * min(
                    1.0, params.beta * kappa_sup / band_lo**d
                ) ** params.alpha
                if stream is None:
                    stream = _rng.stream(seed, _rng.TAG_FAR, ja, jb)

                def locate_product(flat, nb=nb):
                    return flat // nb, flat % nb

                _accept_streamed(
                    stream, na * nb, p_bar, locate_product,
                    layer_a, layer_b, same, band_lo, math.inf,
                    pos, marks, params, found,
                )

    if not found:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(found, axis=0)


def _full_product_rows(layer_a: _Layer, layer_b: _Layer, same: bool):
    na, nb = len(layer_a), len(layer_b)
    ii = np.repeat(np.arange(na), nb)
    kk = np.tile(np.arange(nb), na)
    if same:
        keep = ii < kk
        ii, kk = ii[keep], kk[keep]
    return layer_a.rows[ii], layer_b.rows[kk]


def _scan_pairs_within(layer_a, layer_b, same, d, bits, radius, eval_exact):
    """Exact evaluation of every pair at distance <= radius."""
    if radius <= 0:
        return
    level = min(max(0, int(math.ceil(math.log2(max(radius, 1.0))))), bits)
    g = 2.0**level
    offsets = _offsets_for_band(d, g, -1.0, radius)
    blocks = _BlockSet(layer_a, layer_b, same, level, offsets, d, bits)
    for f0 in range(0, blocks.total, _CHUNK):
        flat = np.arange(f0, min(f0 + _CHUNK, blocks.total), dtype=np.int64)
        a_slot, b_slot = blocks.locate(flat)
        if same:
            keep = a_slot < b_slot
            a_slot, b_slot = a_slot[keep], b_slot[keep]
        if not len(a_slot):
            continue
        u = layer_a.rows[a_slot]
        v = layer_b.rows[b_slot]
        keep = _pair_dists_from_layers(layer_a, layer_b, a_slot, b_slot) <= radius
        if keep.any():
            eval_exact(u[keep], v[keep])


def _pair_dists_from_layers(layer_a, layer_b, a_slot, b_slot):
    diff = layer_a.pos[a_slot] - layer_b.pos[b_slot]
    if diff.shape[1] == 1:
        return np.abs(diff[:, 0])
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _band_pairs_pair_keyed(
    blocks, layer_a, layer_b, same, lo, hi, p_bar, pos, eval_exact
):
    for f0 in range(0, blocks.total, _CHUNK):
        flat = np.arange(f0, min(f0 + _CHUNK, blocks.total), dtype=np.int64)
        a_slot, b_slot = blocks.locate(flat)
        if same:
            keep = a_slot < b_slot
            a_slot, b_slot = a_slot[keep], b_slot[keep]
        if not len(a_slot):
            continue
        dist = _pair_dists_from_layers(layer_a, layer_b, a_slot, b_slot)
        keep = (dist > lo) & (dist <= hi)
        if keep.any():
            eval_exact(
                layer_a.rows[a_slot[keep]], layer_b.rows[b_slot[keep]],
                prefilter=p_bar,
            )


def _accept_streamed(
    stream, total, p_bar, locate, layer_a, layer_b, same,
    lo, hi, pos, marks, params, found,
):
    """Bernoulli(p_bar) sweep over a candidate space, then exact rejection.

    Accepts a candidate pair iff its distance lies in (lo, hi] and a fresh
    uniform falls below prob/p_bar, which yields each in-band pair with
    exactly its connection probability.
    """
    chosen = _rng.bernoulli_indices(stream, total, p_bar)
    if not len(chosen):
        return
    a_slot, b_slot = locate(chosen)
    accept_u = stream.random(len(chosen))
    if same:
        keep = a_slot < b_slot
    else:
        keep = np.ones(len(a_slot), dtype=bool)
    dist = _pair_dists_from_layers(layer_a, layer_b, a_slot, b_slot)
    keep &= dist > lo
    if hi != math.inf:
        keep &= dist <= hi
    if not keep.any():
        return
    a_slot, b_slot = a_slot[keep], b_slot[keep]
    dist, accept_u = dist[keep], accept_u[keep]
    u = layer_a.rows[a_slot]
    v = layer_b.rows[b_slot]
    kappa = kernel_value_array(marks[u], marks[v], params)
    prob = connection_prob_array(dist**params.d, kappa, params)
    hit = accept_u * p_bar < prob
    if hit.any():
        found.append(np.stack([u[hit], v[hit]], axis=1))
