/**
 * Compact binary cloud frame: little-endian uint32 point count, count*3
 * float32 coordinates, one uint8 color flag, then count*3 uint8 RGB when
 * the flag is 1.
 */

export interface CloudData {
  count: number;
  points: Float32Array;
  colors: Uint8Array | null;
}

export function parseCloudFrame(buffer: ArrayBuffer): CloudData {
  const view = new DataView(buffer);
  if (buffer.byteLength < 5) {
    throw new Error(`cloud frame too short: ${buffer.byteLength} bytes`);
  }
  const count = view.getUint32(0, true);
  const pointBytes = count * 3 * 4;
  if (buffer.byteLength < 4 + pointBytes + 1) {
    throw new Error(
      `cloud frame truncated: ${count} points need ${4 + pointBytes + 1} bytes`,
    );
  }
  const points = new Float32Array(buffer.slice(4, 4 + pointBytes));
  const flag = view.getUint8(4 + pointBytes);
  let colors: Uint8Array | null = null;
  if (flag === 1) {
    const start = 4 + pointBytes + 1;
    if (buffer.byteLength < start + count * 3) {
      throw new Error("cloud frame truncated in color block");
    }
    colors = new Uint8Array(buffer.slice(start, start + count * 3));
  }
  return { count, points, colors };
}
