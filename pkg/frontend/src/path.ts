/**
 * minimal route-path geometry for rendering and stop-marker dragging:
 * arc-length lookup along the lane centerline plus interpolated normals.
 */

import type { Point } from './protocol.js'

export interface RoutePath {
  vertices: Point[]
  s: number[]           // cumulative arc length per vertex
  headings: number[]    // per-vertex heading, averaged at interior vertices
  length: number
}

export function buildPath(vertices: Point[]): RoutePath {
  if (vertices.length < 2) throw new Error('path needs at least two vertices')
  const s: number[] = [0]
  const segHeadings: number[] = []
  for (let i = 1; i < vertices.length; i++) {
    const dx = vertices[i][0] - vertices[i - 1][0]
    const dy = vertices[i][1] - vertices[i - 1][1]
    s.push(s[i - 1] + Math.hypot(dx, dy))
    segHeadings.push(Math.atan2(dy, dx))
  }
  // unwrap segment headings, then average neighbours at interior vertices
  for (let i = 1; i < segHeadings.length; i++) {
    while (segHeadings[i] - segHeadings[i - 1] > Math.PI) segHeadings[i] -= 2 * Math.PI
    while (segHeadings[i] - segHeadings[i - 1] < -Math.PI) segHeadings[i] += 2 * Math.PI
  }
  const headings = [segHeadings[0]]
  for (let i = 1; i < vertices.length - 1; i++) {
    headings.push(0.5 * (segHeadings[i - 1] + segHeadings[i]))
  }
  headings.push(segHeadings[segHeadings.length - 1])
  return { vertices, s, headings, length: s[s.length - 1] }
}

function locate(path: RoutePath, theta: number): { i: number; w: number } {
  const th = Math.min(Math.max(theta, 0), path.length)
  let lo = 0
  let hi = path.s.length - 1
  while (hi - lo > 1) {
    const mid = (lo + hi) >> 1
    if (path.s[mid] <= th) lo = mid
    else hi = mid
  }
  const span = path.s[hi] - path.s[lo]
  return { i: lo, w: span > 0 ? (th - path.s[lo]) / span : 0 }
}

export function pointAt(path: RoutePath, theta: number): Point {
  const { i, w } = locate(path, theta)
  const a = path.vertices[i]
  const b = path.vertices[i + 1]
  return [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
}

export function normalAt(path: RoutePath, theta: number): Point {
  const { i, w } = locate(path, theta)
  const phi = path.headings[i] + w * (path.headings[i + 1] - path.headings[i])
  return [-Math.sin(phi), Math.cos(phi)]
}

/** nearest progress value to a world point (clamped at the ends) */
export function projectToPath(path: RoutePath, p: Point): number {
  let best = 0
  let bestD = Infinity
  for (let i = 0; i < path.vertices.length - 1; i++) {
    const a = path.vertices[i]
    const b = path.vertices[i + 1]
    const dx = b[0] - a[0]
    const dy = b[1] - a[1]
    const len2 = dx * dx + dy * dy
    let t = len2 > 0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0
    t = Math.min(Math.max(t, 0), 1)
    const qx = a[0] + t * dx
    const qy = a[1] + t * dy
    const d = (p[0] - qx) ** 2 + (p[1] - qy) ** 2
    if (d < bestD) {
      bestD = d
      best = path.s[i] + Math.sqrt(len2) * t
    }
  }
  return best
}
