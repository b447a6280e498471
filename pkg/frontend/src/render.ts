/**
 * scene building: a pure function from the view model to a display list.
 * the canvas painter in the app just replays the items, which keeps all
 * layout/color decisions testable without a DOM.
 */

import { buildPath, normalAt, pointAt, type RoutePath } from './path.js'
import type { Point } from './protocol.js'
import { isStale, type ViewModel } from './viewmodel.js'

export type SceneItem =
  | { kind: 'polyline'; points: Point[]; color: string; width: number; dash?: number[] }
  | { kind: 'polygon'; points: Point[]; fill: string; stroke?: string; dash?: number[] }
  | { kind: 'circle'; center: Point; radius: number; fill: string }
  | { kind: 'watermark'; text: string }

export const COLORS = {
  lane: '#9aa0a6',
  shoulder: 'rgba(128,128,128,0.35)',
  leftBound: '#cc2222',
  rightBound: '#22aa22',
  stopMarker: '#2244cc',
  trajectory: '#115511',
  obstacle: 'rgba(60,60,60,0.85)',
  ego: '#1155cc',
  editPolygon: 'rgba(90,90,90,0.3)',
}

export function routePathFromUpdate(update: { environment: any }): RoutePath | null {
  const lanes = update.environment?.lanes
  if (!lanes || !lanes.length) return null
  return buildPath(lanes[0].centerline as Point[])
}

function boundPolyline(path: RoutePath, thetas: number[], offsets: number[]): Point[] {
  const pts: Point[] = []
  for (let i = 0; i < thetas.length; i++) {
    const c = pointAt(path, thetas[i])
    const n = normalAt(path, thetas[i])
    pts.push([c[0] + offsets[i] * n[0], c[1] + offsets[i] * n[1]])
  }
  return pts
}

export function buildScene(vm: ViewModel, nowMs: number): SceneItem[] {
  const items: SceneItem[] = []
  const update = vm.update
  if (!update) {
    items.push({ kind: 'watermark', text: 'waiting for the vehicle…' })
    return items
  }
  const env = update.environment
  const path = routePathFromUpdate(update)

  for (const shoulder of env.shoulders ?? []) {
    items.push({ kind: 'polygon', points: shoulder, fill: COLORS.shoulder })
  }
  for (const lane of env.lanes ?? []) {
    items.push({ kind: 'polyline', points: lane.centerline, color: COLORS.lane, width: 0.08, dash: [0.6, 0.4] })
  }
  for (const obstacle of env.obstacles ?? []) {
    items.push({ kind: 'polygon', points: obstacle.polygon, fill: COLORS.obstacle })
  }

  if (path) {
    const corridor = update.corridor
    items.push({
      kind: 'polyline',
      points: boundPolyline(path, corridor.thetas, corridor.left),
      color: COLORS.leftBound,
      width: 0.14,
    })
    items.push({
      kind: 'polyline',
      points: boundPolyline(path, corridor.thetas, corridor.right),
      color: COLORS.rightBound,
      width: 0.14,
    })
    if (corridor.stop_progress !== null && corridor.stop_progress !== undefined) {
      const theta = corridor.stop_progress
      const c = pointAt(path, theta)
      const n = normalAt(path, theta)
      const leftOff = interp(corridor.thetas, corridor.left, theta)
      const rightOff = interp(corridor.thetas, corridor.right, theta)
      items.push({
        kind: 'polyline',
        points: [
          [c[0] + leftOff * n[0], c[1] + leftOff * n[1]],
          [c[0] + rightOff * n[0], c[1] + rightOff * n[1]],
        ],
        color: COLORS.stopMarker,
        width: 0.22,
      })
    }
  }

  if (update.proposal) {
    const pts: Point[] = update.proposal.states.map((s: any) => [s.x, s.y])
    items.push({ kind: 'polyline', points: pts, color: COLORS.trajectory, width: 0.16 })
  }

  if (vm.edit.mode === 'polygon' && vm.edit.points.length >= 2) {
    items.push({
      kind: 'polygon',
      points: vm.edit.points,
      fill: COLORS.editPolygon,
      stroke: '#555555',
      dash: [0.4, 0.3],
    })
  }

  const ego = env.ego
  items.push({ kind: 'circle', center: [ego.x, ego.y], radius: 1.0, fill: COLORS.ego })

  if (isStale(vm, nowMs)) {
    items.push({ kind: 'watermark', text: 'STALE DATA' })
  }
  return items
}

function interp(xs: number[], ys: number[], x: number): number {
  if (x <= xs[0]) return ys[0]
  if (x >= xs[xs.length - 1]) return ys[ys.length - 1]
  let lo = 0
  let hi = xs.length - 1
  while (hi - lo > 1) {
    const mid = (lo + hi) >> 1
    if (xs[mid] <= x) lo = mid
    else hi = mid
  }
  const w = (x - xs[lo]) / (xs[hi] - xs[lo])
  return ys[lo] + w * (ys[hi] - ys[lo])
}
