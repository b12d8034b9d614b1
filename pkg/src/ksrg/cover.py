"""Spatial covers of dense point sets, with machine-checkable certificates.

Given point locations in the volume-n box, the goal is a region of
volume proportional to the number of points such that a high-mark vertex
placed anywhere in the region connects to the point set with probability
at least p/2.  Two constructions are used.  When the points occupy many
unit-lattice cells, the union of occupied cells (a "proper" cover)
already works.  When the points concentrate in few cells, a
deterministic expansion grows a box around each heavy cell and resolves
overlaps by merging, producing pairwise disjoint boxes whose volume
accounts for the allocated points at a fixed density.

Every result carries the data needed to re-verify its guarantees
numerically: disjointness, the volume formula, center proximity of
allocated cells, and the covered-volume lower bound.  A Monte Carlo
check of the connection guarantee is included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _rng
from .model import ModelParams, box_side, connection_prob_array, kernel_value_array

# Absolute tolerance for geometric certificate checks.
GEOM_TOL = 1e-9
# Relative tolerance when comparing box volumes for tie-breaking.
_TIE_REL = 1e-12


def expansion_density(d: int) -> float:
    """Points backing one unit of expanded-box volume in dimension d.

    Also the minimum number of points a cell must hold to participate in
    the expansion.
    """
    return math.e * d ** (d / 2.0) * 2.0 ** (3 * d)


def expandability_scale(w_bar: float, params: ModelParams) -> float:
    """Smallest window volume whose density constraint supports marks w_bar.

    Equals (2^d beta w_bar)^(1/(1-1/alpha)); the exponent degenerates to
    1 for the threshold profile.
    """
    if not w_bar > 0:
        raise ValueError(f"w_bar must be positive, got {w_bar}")
    base = 2.0**params.d * params.beta * w_bar
    if math.isinf(params.alpha):
        return base
    return base ** (1.0 / (1.0 - 1.0 / params.alpha))


def min_cover_mark(params: ModelParams) -> float:
    """Strict lower bound on admissible w_bar for cover()."""
    d = params.d
    return max(2.0**d * d ** (d / 2.0) / params.beta, 1.0)


# ---------------------------------------------------------------------------
# expandability


def is_expandable(points: np.ndarray, s: float, n: float) -> bool:
    """Whether no lattice-centered window is overfilled at any scale >= s.

    A point set is s-expandable when every cube of volume s' >= s
    centered at an integer point contains at most e*s' of the points.
    Only integer volumes s' in [ceil(s), n*2^d] need checking: windows
    larger than n*2^d contain at most as many points as the largest
    checked window, and non-integer scales are controlled by adjacent
    integers.  Only window centers near the point cloud are enumerated;
    all other windows are empty.
    """
    if not s > 0:
        raise ValueError(f"scale s must be positive, got {s}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return True
    pts = pts.reshape(len(pts), -1)
    d = pts.shape[1]
    count = len(pts)
    s_lo = int(math.ceil(s))
    # Windows with e*s' >= count can never be overfilled.
    s_hi = int(min(math.floor(n) * 2**d, math.floor(count / math.e)))
    if s_hi < s_lo:
        return True
    if d == 1:
        return _expandable_1d(np.sort(pts[:, 0]), s_lo, s_hi)
    return _expandable_nd(pts, s_lo, s_hi)


def _expandable_1d(x: np.ndarray, s_lo: int, s_hi: int) -> bool:
    for sp in range(s_lo, s_hi + 1):
        half = sp / 2.0
        centers = np.arange(math.floor(x[0] - half), math.ceil(x[-1] + half) + 1.0)
        counts = np.searchsorted(x, centers + half, side="right") - np.searchsorted(
            x, centers - half, side="left"
        )
        if counts.max() > math.e * sp:
            return False
    return True


def _expandable_nd(pts: np.ndarray, s_lo: int, s_hi: int) -> bool:
    d = pts.shape[1]
    axes = [np.unique(pts[:, i]) for i in range(d)]
    shape = tuple(len(a) + 1 for a in axes)
    hist = np.zeros(shape, dtype=np.int64)
    idx = tuple(
        np.searchsorted(axes[i], pts[:, i]) + 1 for i in range(d)
    )
    np.add.at(hist, idx, 1)
    prefix = hist
    for axis in range(d):
        prefix = np.cumsum(prefix, axis=axis)
    lo_pt = pts.min(axis=0)
    hi_pt = pts.max(axis=0)
    for sp in range(s_lo, s_hi + 1):
        half = sp ** (1.0 / d) / 2.0
        grids = np.meshgrid(
            *[
                np.arange(math.floor(lo_pt[i] - half), math.ceil(hi_pt[i] + half) + 1.0)
                for i in range(d)
            ],
            indexing="ij",
        )
        centers = np.stack([g.ravel() for g in grids], axis=1)
        hi_rank = [
            np.searchsorted(axes[i], centers[:, i] + half, side="right")
            for i in range(d)
        ]
        lo_rank = [
            np.searchsorted(axes[i], centers[:, i] - half, side="left")
            for i in range(d)
        ]
        counts = np.zeros(len(centers), dtype=np.int64)
        for corner in range(2**d):
            ranks = tuple(
                hi_rank[i] if corner & (1 << i) else lo_rank[i] for i in range(d)
            )
            sign = (-1) ** (d - bin(corner).count("1"))
            counts += sign * prefix[ranks]
        if counts.max() > math.e * sp:
            return False
    return True


# ---------------------------------------------------------------------------
# cell decomposition


def _center_bounds(n: float, d: int):
    side = box_side(n, d)
    return side, math.ceil(-side / 2.0), math.floor(side / 2.0)


def assign_cells(points: np.ndarray, n: float) -> np.ndarray:
    """Integer cell center for each point of the volume-n box.

    A point first lands in the unit box of ceil(x - 1/2), the
    lexicographically smallest center whose closed unit box contains x;
    centers falling outside the box are pulled to the nearest in-box
    integer point (coordinate clamp, which is the unique minimizer).
    """
    pts = np.asarray(points, dtype=np.float64)
    d = pts.shape[1]
    side, lo, hi = _center_bounds(n, d)
    if np.any(np.abs(pts) > side / 2.0 + GEOM_TOL):
        raise ValueError("points must lie inside the volume-n box")
    raw = np.ceil(pts - 0.5).astype(np.int64)
    return np.clip(raw, lo, hi)


@dataclass(frozen=True)
class CellDecomposition:
    """Partition of the volume-n box into near-unit cells with point counts.

    centers/counts list the occupied cells in lexicographic center
    order; point_cell maps each point to its cell's position in that
    order.  Cell regions (unions of up to 2^d rectangles after boundary
    merging) are reconstructed on demand.
    """

    volume_n: float
    dim: int
    points: np.ndarray
    assignment: np.ndarray
    centers: np.ndarray
    counts: np.ndarray
    point_cell: np.ndarray

    @property
    def num_cells(self) -> int:
        return len(self.centers)

    def cell_pieces(self, center) -> np.ndarray:
        """Rectangles (k, 2, d) whose union is the cell of `center`."""
        return cell_pieces(np.asarray(center, dtype=np.int64), self.volume_n)

    def cell_volume(self, center) -> float:
        pieces = self.cell_pieces(center)
        return float(np.prod(pieces[:, 1] - pieces[:, 0], axis=1).sum())


def cell_pieces(center: np.ndarray, n: float) -> np.ndarray:
    """Rectangles forming one cell: the clipped unit box of the center
    plus any boundary-overhang boxes whose own center falls outside."""
    d = len(center)
    side, lo, hi = _center_bounds(n, d)
    half = side / 2.0
    axis_opts = []
    for i in range(d):
        z = float(center[i])
        opts = [(max(z - 0.5, -half), min(z + 0.5, half))]
        if center[i] == lo:
            a, b = max(z - 1.5, -half), z - 0.5
            if b - a > 0:
                opts.append((a, b))
        if center[i] == hi:
            a, b = z + 0.5, min(z + 1.5, half)
            if b - a > 0:
                opts.append((a, b))
        axis_opts.append(opts)
    pieces = []
    counts = [len(o) for o in axis_opts]
    total = int(np.prod(counts))
    for code in range(total):
        rect = np.empty((2, d))
        c = code
        for i in range(d):
            opt = axis_opts[i][c % counts[i]]
            c //= counts[i]
            rect[0, i], rect[1, i] = opt
        pieces.append(rect)
    return np.stack(pieces, axis=0)


def all_cell_centers(n: float, d: int) -> np.ndarray:
    """Every integer cell center of the volume-n box (small n only)."""
    _, lo, hi = _center_bounds(n, d)
    axes = [np.arange(lo, hi + 1, dtype=np.int64)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def cell_decomposition(points: np.ndarray, n: float) -> CellDecomposition:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array of positions")
    d = pts.shape[1]
    assignment = assign_cells(pts, n)
    if len(pts) == 0:
        return CellDecomposition(
            volume_n=float(n),
            dim=d,
            points=pts,
            assignment=assignment,
            centers=np.empty((0, d), dtype=np.int64),
            counts=np.empty(0, dtype=np.int64),
            point_cell=np.empty(0, dtype=np.int64),
        )
    centers, inverse, counts = np.unique(
        assignment, axis=0, return_inverse=True, return_counts=True
    )
    return CellDecomposition(
        volume_n=float(n),
        dim=d,
        points=pts,
        assignment=assignment,
        centers=centers,
        counts=counts.astype(np.int64),
        point_cell=inverse.reshape(-1).astype(np.int64),
    )


# ---------------------------------------------------------------------------
# pigeonhole


def pigeonhole_split(
    cell_counts, nu: float, delta: float
) -> Optional[np.ndarray]:
    """Indices of heavy cells carrying a delta fraction of all points.

    If the number of cells is below L*(1-delta)/nu, the cells with at
    least nu points must jointly hold at least delta*L points; returns
    their indices.  Otherwise returns None (hypothesis not met).
    """
    counts = np.asarray(cell_counts)
    if len(counts) and (np.any(counts < 1) or np.any(counts != np.floor(counts))):
        raise ValueError("cell counts must be positive integers")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0,1), got {delta}")
    if not nu >= 1:
        raise ValueError(f"nu must be >= 1, got {nu}")
    total = counts.sum()
    if len(counts) >= total * (1.0 - delta) / nu:
        return None
    heavy = np.flatnonzero(counts >= nu)
    if counts[heavy].sum() < delta * total:
        raise RuntimeError("pigeonhole guarantee violated; unreachable")
    return heavy


# ---------------------------------------------------------------------------
# cover results


@dataclass(frozen=True)
class CoverResult:
    """A proper or expanded cover together with its certificate data.

    boxes[j] rows are (lo, hi) corners of box j (unclipped); pieces are
    the disjoint rectangles, clipped to the volume-n box, whose union is
    the covered region.  allocation maps each participating cell (rows
    of cell_centers/cell_counts) to its box index.
    """

    kind: str
    dim: int
    volume_n: Optional[float]
    centers: np.ndarray
    volumes: np.ndarray
    boxes: np.ndarray
    pieces: np.ndarray
    piece_owner: np.ndarray
    allocation: np.ndarray
    cell_centers: np.ndarray
    cell_counts: np.ndarray
    covered_region_volume: float
    rounds: int
    input_size: int
    scale: Optional[float] = None

    @property
    def num_boxes(self) -> int:
        return len(self.centers)

    def covered_volume_floor(self) -> float:
        """The guaranteed lower bound on covered_region_volume."""
        d = self.dim
        return self.input_size / (2.0 ** (4 * d + 1) * math.e * d ** (d / 2.0))


def _cube(center: np.ndarray, volume: float) -> np.ndarray:
    half = volume ** (1.0 / len(center)) / 2.0
    return np.stack([center - half, center + half], axis=0)


def _clip_box(box: np.ndarray, n: Optional[float]) -> Optional[np.ndarray]:
    if n is None:
        return box.copy()
    half = box_side(n, box.shape[1]) / 2.0
    lo = np.maximum(box[0], -half)
    hi = np.minimum(box[1], half)
    if np.any(hi <= lo):
        return None
    return np.stack([lo, hi], axis=0)


def _boxes_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    # Closed boxes; a shared face (zero-measure intersection) is not an
    # overlap.
    return bool(np.all(np.minimum(a[1], b[1]) - np.maximum(a[0], b[0]) > 0))


def cover_expansion(
    cell_centers,
    cell_counts,
    d: int,
    volume_n: Optional[float] = None,
    scale: Optional[float] = None,
    input_size: Optional[int] = None,
) -> CoverResult:
    """Deterministically merge overlapping per-cell boxes until disjoint.

    Every input cell must hold at least expansion_density(d) points.
    Each cell starts as its own box of volume counts/density centered at
    the cell center.  While two boxes overlap: take the largest box with
    an overlap (ties to the lowest index), the largest box overlapping
    it, and move the cells of the second box that lie within sqrt(d)
    times the first box's side length of its center into the first box;
    the remaining cells revert to singleton boxes.  The merged box grows
    by at least unit volume per round, which bounds the round count by
    the total allocated volume.
    """
    centers = np.asarray(cell_centers, dtype=np.float64).reshape(-1, d)
    counts = np.asarray(cell_counts, dtype=np.float64).reshape(-1)
    if len(centers) != len(counts):
        raise ValueError("cell_centers and cell_counts must have equal length")
    nu = expansion_density(d)
    if np.any(counts < nu):
        raise ValueError(
            f"every cell must hold at least {nu:.6g} points for expansion"
        )
    m = len(counts)
    total_volume = counts.sum() / nu
    alloc = np.arange(m, dtype=np.int64)
    rounds = 0
    while True:
        active = np.unique(alloc)
        vols = np.array(
            [counts[alloc == j].sum() / nu for j in active], dtype=np.float64
        )
        boxes = [_cube(centers[j], v) for j, v in zip(active, vols)]
        overlaps = np.zeros((len(active), len(active)), dtype=bool)
        for a in range(len(active)):
            for b in range(a + 1, len(active)):
                if _boxes_overlap(boxes[a], boxes[b]):
                    overlaps[a, b] = overlaps[b, a] = True
        has_overlap = overlaps.any(axis=1)
        if not has_overlap.any():
            break
        vmax = vols[has_overlap].max()
        j1_pos = int(
            np.flatnonzero(has_overlap & (vols >= vmax * (1.0 - _TIE_REL)))[0]
        )
        against = overlaps[j1_pos]
        vmax2 = vols[against].max()
        j2_pos = int(np.flatnonzero(against & (vols >= vmax2 * (1.0 - _TIE_REL)))[0])
        j1, j2 = int(active[j1_pos]), int(active[j2_pos])
        reach = math.sqrt(d) * vols[j1_pos] ** (1.0 / d)
        members = np.flatnonzero(alloc == j2)
        dist = np.linalg.norm(centers[members] - centers[j1], axis=1)
        near = dist <= reach + _TIE_REL * max(1.0, reach)
        if j2 not in members[near]:
            raise RuntimeError("overlapping box center outside merge reach")
        alloc[members[near]] = j1
        alloc[members[~near]] = members[~near]
        rounds += 1
        if rounds > total_volume:
            raise RuntimeError("expansion exceeded its round budget")
    order = np.argsort(active, kind="stable")
    active = active[order]
    vols = vols[order]
    box_arr = (
        np.stack([_cube(centers[j], v) for j, v in zip(active, vols)], axis=0)
        if len(active)
        else np.empty((0, 2, d))
    )
    box_of = {int(j): pos for pos, j in enumerate(active)}
    allocation = np.array([box_of[int(a)] for a in alloc], dtype=np.int64)
    pieces = []
    owners = []
    for pos in range(len(active)):
        clipped = _clip_box(box_arr[pos], volume_n)
        if clipped is not None:
            pieces.append(clipped)
            owners.append(pos)
    pieces_arr = np.stack(pieces, axis=0) if pieces else np.empty((0, 2, d))
    covered = float(np.prod(pieces_arr[:, 1] - pieces_arr[:, 0], axis=1).sum())
    return CoverResult(
        kind="expanded",
        dim=d,
        volume_n=None if volume_n is None else float(volume_n),
        centers=centers[active],
        volumes=vols,
        boxes=box_arr,
        pieces=pieces_arr,
        piece_owner=np.asarray(owners, dtype=np.int64),
        allocation=allocation,
        cell_centers=centers,
        cell_counts=counts.astype(np.int64),
        covered_region_volume=covered,
        rounds=rounds,
        input_size=int(counts.sum()) if input_size is None else int(input_size),
        scale=scale,
    )


def cover(points, n: float, w_bar: float, params: ModelParams) -> CoverResult:
    """Proper cover or cover expansion of a point set, with preconditions.

    Requires w_bar above min_cover_mark(params), the induced scale
    s = expandability_scale(w_bar, params) at most n, and the points
    s-expandable; violations raise ValueError.  If the points occupy at
    least |points|/(2*expansion_density(d)) cells the union of occupied
    cells is returned; otherwise the expansion runs on the heavy cells.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != params.d:
        raise ValueError(f"points must have shape (N, {params.d})")
    w_min = min_cover_mark(params)
    if not w_bar > w_min:
        raise ValueError(f"w_bar must exceed {w_min:.6g}, got {w_bar}")
    s = expandability_scale(w_bar, params)
    if s > n:
        raise ValueError(
            f"expandability scale {s:.6g} exceeds box volume {n:.6g}"
        )
    if not is_expandable(pts, s, n):
        raise ValueError(f"points are not {s:.6g}-expandable in the volume-{n} box")
    d = params.d
    dec = cell_decomposition(pts, n)
    size = len(pts)
    nu = expansion_density(d)
    if dec.num_cells >= size / (2.0 * nu):
        return _proper_cover(dec, s)
    heavy = pigeonhole_split(dec.counts, nu, 0.5)
    if heavy is None:
        raise RuntimeError("pigeonhole hypothesis unmet; unreachable")
    result = cover_expansion(
        dec.centers[heavy].astype(np.float64),
        dec.counts[heavy],
        d,
        volume_n=n,
        scale=s,
        input_size=size,
    )
    return result


def _proper_cover(dec: CellDecomposition, scale: Optional[float]) -> CoverResult:
    d = dec.dim
    pieces = []
    owners = []
    volumes = np.empty(dec.num_cells)
    bounds = np.empty((dec.num_cells, 2, d))
    for i in range(dec.num_cells):
        cell = cell_pieces(dec.centers[i], dec.volume_n)
        volumes[i] = float(np.prod(cell[:, 1] - cell[:, 0], axis=1).sum())
        bounds[i, 0] = cell[:, 0].min(axis=0)
        bounds[i, 1] = cell[:, 1].max(axis=0)
        pieces.append(cell)
        owners.extend([i] * len(cell))
    pieces_arr = (
        np.concatenate(pieces, axis=0) if pieces else np.empty((0, 2, d))
    )
    return CoverResult(
        kind="proper",
        dim=d,
        volume_n=dec.volume_n,
        centers=dec.centers.astype(np.float64),
        volumes=volumes,
        boxes=bounds,
        pieces=pieces_arr,
        piece_owner=np.asarray(owners, dtype=np.int64),
        allocation=np.arange(dec.num_cells, dtype=np.int64),
        cell_centers=dec.centers.astype(np.float64),
        cell_counts=dec.counts.copy(),
        covered_region_volume=float(
            np.prod(pieces_arr[:, 1] - pieces_arr[:, 0], axis=1).sum()
        ),
        rounds=0,
        input_size=int(dec.counts.sum()),
        scale=scale,
    )


# ---------------------------------------------------------------------------
# certificates


def check_certificates(result: CoverResult, points=None) -> dict:
    """Re-derive every cover guarantee numerically; returns name -> bool.

    Point-dependent checks (allocated points near their box, enlarged
    boxes holding enough points) run only when the original points and
    box volume are available.
    """
    d = result.dim
    tol = GEOM_TOL
    checks = {}
    boxes = result.boxes
    checks["pairwise_disjoint"] = _pieces_disjoint(result.pieces, tol)
    checks["covered_volume_lower_bound"] = (
        result.covered_region_volume >= result.covered_volume_floor() - tol
    )
    checks["covered_volume_consistent"] = (
        abs(
            float(np.prod(result.pieces[:, 1] - result.pieces[:, 0], axis=1).sum())
            - result.covered_region_volume
        )
        <= tol
    )
    if result.kind == "proper":
        checks["cell_volume_bounds"] = bool(
            np.all(result.volumes >= 2.0**-d - tol)
            and np.all(result.volumes <= 2.0**d + tol)
        )
        diam = np.linalg.norm(boxes[:, 1] - boxes[:, 0], axis=1) if len(boxes) else []
        checks["cell_diameter_bound"] = bool(
            np.all(np.asarray(diam) <= 2.0 * math.sqrt(d) + tol)
        )
        return checks
    nu = expansion_density(d)
    alloc_mass = np.zeros(result.num_boxes)
    np.add.at(alloc_mass, result.allocation, result.cell_counts.astype(float))
    checks["volume_formula"] = bool(
        np.all(np.abs(result.volumes - alloc_mass / nu) <= tol)
    )
    dist = np.linalg.norm(
        result.cell_centers - result.centers[result.allocation], axis=1
    )
    checks["centers_near"] = bool(
        np.all(dist**d <= d ** (d / 2.0) * result.volumes[result.allocation] + tol)
    )
    checks["box_volume_at_least_one"] = bool(np.all(result.volumes >= 1.0 - tol))
    if result.scale is not None:
        checks["box_volume_scale_bound"] = bool(
            np.all(
                result.volumes <= d ** (-d / 2.0) * 2.0 ** (-3 * d) * result.scale + tol
            )
        )
    if points is not None and result.volume_n is not None:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, d)
        dec = cell_decomposition(pts, result.volume_n)
        checks["allocated_points_near_box"] = _points_near_boxes(result, dec, tol)
        checks["enlarged_box_mass"] = _enlarged_box_mass(result, pts, tol)
    return checks


def _pieces_disjoint(pieces: np.ndarray, tol: float) -> bool:
    for a in range(len(pieces)):
        depth = np.minimum(pieces[a, 1], pieces[a + 1 :, 1]) - np.maximum(
            pieces[a, 0], pieces[a + 1 :, 0]
        )
        if len(depth) and np.any(np.min(depth, axis=1) > tol):
            return False
    return True


def _points_near_boxes(result: CoverResult, dec: CellDecomposition, tol: float) -> bool:
    # Sup distance from the points of each allocated cell to the far
    # corner of their box, against 4*sqrt(d)*Vol^(1/d).
    d = result.dim
    key = {tuple(c): i for i, c in enumerate(np.asarray(result.cell_centers, int))}
    for cell_idx, center in enumerate(np.asarray(dec.centers)):
        pos = key.get(tuple(center))
        if pos is None:
            continue
        box = result.boxes[result.allocation[pos]]
        vol = result.volumes[result.allocation[pos]]
        cell_points = dec.points[dec.point_cell == cell_idx]
        far = np.maximum(
            np.abs(cell_points - box[0]), np.abs(cell_points - box[1])
        )
        sup = np.sqrt((far**2).sum(axis=1)).max() if len(cell_points) else 0.0
        if sup > 4.0 * math.sqrt(d) * vol ** (1.0 / d) + tol:
            return False
    return True


def _enlarged_box_mass(result: CoverResult, pts: np.ndarray, tol: float) -> bool:
    # The concentric box of volume d^(d/2)*2^(3d)*Vol must hold at least
    # as many points as were allocated to the box (= e times its own
    # volume).
    d = result.dim
    factor = d ** (d / 2.0) * 2.0 ** (3 * d)
    alloc_mass = np.zeros(result.num_boxes)
    np.add.at(alloc_mass, result.allocation, result.cell_counts.astype(float))
    for pos in range(result.num_boxes):
        enlarged = _cube(result.centers[pos], factor * result.volumes[pos])
        inside = np.all(
            (pts >= enlarged[0] - tol) & (pts <= enlarged[1] + tol), axis=1
        )
        if inside.sum() < alloc_mass[pos]:
            return False
    return True


# ---------------------------------------------------------------------------
# connection guarantee


@dataclass(frozen=True)
class ConnectionCheck:
    """Empirical connection frequency of planted high-mark test vertices."""

    frequency: float
    standard_error: float
    trials: int
    required: float


def connection_guarantee_check(
    result: CoverResult,
    vertices,
    w_bar: float,
    params: ModelParams,
    trials: int = 10_000,
    seed: int = 0,
) -> ConnectionCheck:
    """Monte Carlo estimate of the covered region's connection guarantee.

    Plants `trials` test vertices uniformly in the covered region, all
    carrying the minimum admissible mark w_bar (the worst case, since
    connection probabilities increase with the mark), and counts how
    often at least one edge to the given vertex set forms.  The
    guarantee is frequency >= p/2 up to Monte Carlo error.
    """
    pieces = result.pieces
    if len(pieces) == 0:
        raise ValueError("cover has empty covered region")
    positions = np.asarray(vertices.positions, dtype=np.float64)
    marks = np.asarray(vertices.marks, dtype=np.float64)
    d = result.dim
    vols = np.prod(pieces[:, 1] - pieces[:, 0], axis=1)
    rng = _rng.stream(seed, _rng.TAG_COVER, trials)
    which = rng.choice(len(pieces), size=trials, p=vols / vols.sum())
    u = rng.random((trials, d))
    x = pieces[which, 0] + u * (pieces[which, 1] - pieces[which, 0])
    kappa = kernel_value_array(w_bar, marks, params)
    hits = 0
    chunk = max(1, 2_000_000 // max(len(marks), 1))
    coin = rng.random(trials)
    for start in range(0, trials, chunk):
        block = x[start : start + chunk]
        diff = block[:, None, :] - positions[None, :, :]
        dist_pow = np.sqrt((diff**2).sum(axis=2)) ** d
        probs = connection_prob_array(dist_pow, kappa[None, :], params)
        miss = np.prod(1.0 - probs, axis=1)
        hits += int(np.sum(coin[start : start + chunk] < 1.0 - miss))
    freq = hits / trials
    stderr = math.sqrt(max(freq * (1.0 - freq), 1e-12) / trials)
    return ConnectionCheck(
        frequency=freq,
        standard_error=stderr,
        trials=trials,
        required=params.p / 2.0,
    )
