/**
 * console state: the latest vehicle snapshot plus local edit/approval state.
 * frames only ever update the view model through applyFrame; rendering is a
 * pure function of the result.
 */

import type { Envelope, Point } from './protocol.js'

export interface CorridorView {
  thetas: number[]
  left: number[]
  right: number[]
  stop_progress: number | null
}

export interface StateUpdateView {
  environment: any
  sessionState: string
  corridor: CorridorView
  proposal: any | null
  arbitration: any | null
  simTime: number
}

export type EditBuffer =
  | { mode: 'idle' }
  | { mode: 'polygon'; points: Point[] }
  | { mode: 'stop'; stopProgress: number | null }

export interface ViewModel {
  connected: boolean
  update: StateUpdateView | null
  updateAtMs: number | null
  proposalId: number | null
  notice: string | null
  released: boolean
  edit: EditBuffer
}

export const STALE_AFTER_MS = 1000

export function initialViewModel(): ViewModel {
  return {
    connected: false,
    update: null,
    updateAtMs: null,
    proposalId: null,
    notice: null,
    released: false,
    edit: { mode: 'idle' },
  }
}

export function applyFrame(vm: ViewModel, frame: Envelope, nowMs: number): ViewModel {
  switch (frame.kind) {
    case 'state_update': {
      const body = frame.body as any
      const update: StateUpdateView = {
        environment: body.environment,
        sessionState: body.session_state,
        corridor: body.corridor,
        proposal: body.proposal ?? null,
        arbitration: body.arbitration ?? null,
        simTime: frame.t,
      }
      return { ...vm, update, updateAtMs: nowMs }
    }
    case 'assistance_request':
      return { ...vm, notice: 'assistance requested', released: false }
    case 'trajectory_proposal':
      return { ...vm, proposalId: (frame.body as any).proposal_id, notice: null }
    case 'planning_failed':
      return { ...vm, notice: `planning failed: ${(frame.body as any).reason}` }
    case 'ack': {
      const err = (frame.body as any).error
      return err ? { ...vm, notice: `rejected: ${err}` } : vm
    }
    default:
      return vm
  }
}

export function isStale(vm: ViewModel, nowMs: number, maxAgeMs = STALE_AFTER_MS): boolean {
  if (vm.updateAtMs === null) return true
  return nowMs - vm.updateAtMs > maxAgeMs
}

export function markReleased(vm: ViewModel): ViewModel {
  return { ...vm, released: true, edit: { mode: 'idle' } }
}
