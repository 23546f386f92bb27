"""Regular hash grid for nearest-neighbor lookups within a fixed radius.

Cell size equals the query radius, so the nearest point within the radius is
guaranteed to sit in the query's own cell or one of its 26 neighbors. Cell
coordinates are hashed to uint64 codes; hash collisions merely add candidate
points that the exact distance filter rejects, so lookups stay exact.
"""

import numpy as np

from .errors import InvalidArgument

_P1 = np.uint64(0x9E3779B185EBCA87)
_P2 = np.uint64(0xC2B2AE3D27D4EB4F)
_P3 = np.uint64(0x165667B19E3779F9)
_BIAS = np.int64(1 << 31)  # keeps cell indices non-negative before the cast

_CHUNK = 4096

_OFFSETS = np.array(
    [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)],
    dtype=np.int64,
)


def _cell_codes(cells):
    c = (cells + _BIAS).astype(np.uint64)
    return c[:, 0] * _P1 ^ c[:, 1] * _P2 ^ c[:, 2] * _P3


class HashGrid:
    """Immutable spatial index over a fixed point set."""

    def __init__(self, points, cell):
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3:
            raise InvalidArgument(f"points must be (n, 3), got {points.shape}")
        if not (cell > 0) or not np.isfinite(cell):
            raise InvalidArgument(f"cell size must be positive, got {cell}")
        self.cell = float(cell)
        self.points = points
        codes = _cell_codes(np.floor(points / self.cell).astype(np.int64))
        self._order = np.argsort(codes, kind="stable")
        self._codes = codes[self._order]
        self._sorted_points = points[self._order]

    def __len__(self):
        return len(self.points)

    def nearest_within(self, queries, radius=None):
        """Nearest indexed point within ``radius`` of each query.

        Returns ``(indices, distances)``; misses are index -1 with distance
        inf. ``radius`` defaults to the cell size and may not exceed it.
        """
        if radius is None:
            radius = self.cell
        if radius <= 0 or radius > self.cell * (1 + 1e-12):
            raise InvalidArgument(
                f"radius must lie in (0, cell={self.cell}], got {radius}")
        queries = np.asarray(queries, dtype=np.float64)
        single = queries.ndim == 1
        if single:
            queries = queries[None, :]
        n = len(queries)
        best_idx = np.full(n, -1, dtype=np.int64)
        best_d2 = np.full(n, np.inf)
        for start in range(0, n, _CHUNK):
            sl = slice(start, min(start + _CHUNK, n))
            self._chunk_query(queries[sl], best_idx[sl], best_d2[sl])
        r2 = radius * radius
        miss = best_d2 > r2
        best_idx[miss] = -1
        best_d2[miss] = np.inf
        dist = np.sqrt(best_d2)
        if single:
            return int(best_idx[0]), float(dist[0])
        return best_idx, dist

    def _chunk_query(self, q, best_idx, best_d2):
        cells = np.floor(q / self.cell).astype(np.int64)
        for off in _OFFSETS:
            codes = _cell_codes(cells + off)
            lo = np.searchsorted(self._codes, codes, side="left")
            hi = np.searchsorted(self._codes, codes, side="right")
            counts = hi - lo
            k = int(counts.max()) if len(counts) else 0
            if k == 0:
                continue
            slot = np.arange(k)
            take = lo[:, None] + slot[None, :]
            valid = slot[None, :] < counts[:, None]
            take = np.where(valid, take, 0)
            diff = self._sorted_points[take] - q[:, None, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            d2[~valid] = np.inf
            j = np.argmin(d2, axis=1)
            rows = np.arange(len(q))
            dj = d2[rows, j]
            better = dj < best_d2
            best_d2[better] = dj[better]
            best_idx[better] = self._order[take[rows[better], j[better]]]
