/** View-direction math shared by the 3D view and the sketch canvas.
 *
 * The engine's view direction points from the model toward the viewer,
 * so for an orbit camera looking at `target` the direction is
 * normalize(position - target).
 */

export type Vec3 = [number, number, number];

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function norm(v: Vec3): number {
  return Math.hypot(v[0], v[1], v[2]);
}

export function normalize(v: Vec3): Vec3 {
  const n = norm(v);
  if (n === 0) throw new Error("zero-length direction");
  return [v[0] / n, v[1] / n, v[2] / n];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/** Direction to report to the service for a camera at `position`. */
export function viewDirection(position: Vec3, target: Vec3): Vec3 {
  return normalize(sub(position, target));
}

/** Angle between two directions in radians. */
export function angleBetween(a: Vec3, b: Vec3): number {
  const c = Math.min(1, Math.max(-1, dot(normalize(a), normalize(b))));
  return Math.acos(c);
}

/** Camera position for a requested view direction at a given radius. */
export function cameraPosition(direction: Vec3, target: Vec3, radius: number): Vec3 {
  const d = normalize(direction);
  return [target[0] + d[0] * radius, target[1] + d[1] * radius, target[2] + d[2] * radius];
}
