/**
 * Screen-space point snapping.
 *
 * Clicks on sparse level-of-detail clouds rarely hit a point exactly, so a
 * click selects the nearest projected point within a pixel radius. The math
 * here is plain arrays (column-major 4x4, the three.js element order) so it
 * stays unit-testable without a renderer.
 */

export interface SnapHit {
  index: number;
  distancePx: number;
  depth: number;
}

/** Apply a column-major 4x4 to (x, y, z, 1); returns clip coordinates. */
export function applyMat4(
  m: ArrayLike<number>,
  x: number,
  y: number,
  z: number,
): [number, number, number, number] {
  return [
    m[0] * x + m[4] * y + m[8] * z + m[12],
    m[1] * x + m[5] * y + m[9] * z + m[13],
    m[2] * x + m[6] * y + m[10] * z + m[14],
    m[3] * x + m[7] * y + m[11] * z + m[15],
  ];
}

/**
 * Nearest point (by screen distance) within `radiusPx` of the click.
 *
 * `mvp` maps world to clip space; points behind the camera are skipped.
 * Ties by screen distance fall to the nearer (smaller depth) point.
 */
export function nearestScreenPoint(
  positions: Float32Array,
  mvp: ArrayLike<number>,
  width: number,
  height: number,
  clickX: number,
  clickY: number,
  radiusPx = 8,
): SnapHit | null {
  let best: SnapHit | null = null;
  const n = Math.floor(positions.length / 3);
  for (let i = 0; i < n; i++) {
    const [cx, cy, cz, cw] = applyMat4(
      mvp,
      positions[3 * i],
      positions[3 * i + 1],
      positions[3 * i + 2],
    );
    if (cw <= 0) continue; // behind the camera
    const ndcX = cx / cw;
    const ndcY = cy / cw;
    const depth = cz / cw;
    if (depth < -1 || depth > 1) continue;
    const sx = (ndcX * 0.5 + 0.5) * width;
    const sy = (1 - (ndcY * 0.5 + 0.5)) * height;
    const d = Math.hypot(sx - clickX, sy - clickY);
    if (d > radiusPx) continue;
    if (
      best === null ||
      d < best.distancePx ||
      (d === best.distancePx && depth < best.depth)
    ) {
      best = { index: i, distancePx: d, depth };
    }
  }
  return best;
}
