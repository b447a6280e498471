/**
 * constraint editing: polygon drawing for lateral grants and stop-marker
 * placement for longitudinal edits. validation mirrors what the vehicle
 * will reject, so bad input never leaves the console.
 */

import type { Point } from './protocol.js'

function orient(a: Point, b: Point, c: Point): number {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

function onSegment(a: Point, b: Point, p: Point): boolean {
  return (
    Math.min(a[0], b[0]) - 1e-12 <= p[0] && p[0] <= Math.max(a[0], b[0]) + 1e-12 &&
    Math.min(a[1], b[1]) - 1e-12 <= p[1] && p[1] <= Math.max(a[1], b[1]) + 1e-12
  )
}

export function segmentsIntersect(a: Point, b: Point, c: Point, d: Point): boolean {
  const o1 = orient(a, b, c)
  const o2 = orient(a, b, d)
  const o3 = orient(c, d, a)
  const o4 = orient(c, d, b)
  if (o1 * o2 < 0 && o3 * o4 < 0) return true
  if (o1 === 0 && onSegment(a, b, c)) return true
  if (o2 === 0 && onSegment(a, b, d)) return true
  if (o3 === 0 && onSegment(c, d, a)) return true
  if (o4 === 0 && onSegment(c, d, b)) return true
  return false
}

function polygonArea(points: Point[]): number {
  let acc = 0
  for (let i = 0; i < points.length; i++) {
    const [x1, y1] = points[i]
    const [x2, y2] = points[(i + 1) % points.length]
    acc += x1 * y2 - x2 * y1
  }
  return Math.abs(acc) / 2
}

/** returns a human-readable problem, or null when the polygon is sendable */
export function polygonProblem(points: Point[]): string | null {
  if (points.length < 3) return 'a polygon needs at least three vertices'
  const n = points.length
  for (let i = 0; i < n; i++) {
    const a = points[i]
    const b = points[(i + 1) % n]
    for (let j = i + 1; j < n; j++) {
      // skip edges sharing a vertex
      if (j === i || (j + 1) % n === i || j === (i + 1) % n) continue
      const c = points[j]
      const d = points[(j + 1) % n]
      if (segmentsIntersect(a, b, c, d)) return 'the polygon outline crosses itself'
    }
  }
  if (polygonArea(points) < 1e-9) return 'the polygon has no area'
  return null
}

export function addVertex(points: Point[], p: Point): Point[] {
  return [...points, p]
}

export function undoVertex(points: Point[]): Point[] {
  return points.slice(0, -1)
}
