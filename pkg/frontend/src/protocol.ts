/**
 * wire protocol frames
 *
 * one JSON object per frame with the envelope {session, seq, t, kind, body}.
 * key order and compact separators must match the vehicle side exactly so
 * that identical logical actions produce byte-identical frames.
 */

export interface Envelope {
  session: string
  seq: number
  t: number
  kind: string
  body: Record<string, unknown>
}

export type Point = [number, number]

export function lateralModificationBody(polygon: Point[]) {
  return { modification: { type: 'lateral', polygon } }
}

export function longitudinalModificationBody(stopProgress: number | null) {
  return { modification: { type: 'longitudinal', stop_progress: stopProgress } }
}

export function approvalBody(proposalId: number) {
  return { proposal_id: proposalId }
}

export function emptyBody() {
  return {}
}

/** builds the canonical frame text (no trailing newline) */
export function encodeFrame(
  session: string,
  seq: number,
  t: number,
  kind: string,
  body: Record<string, unknown>,
): string {
  return JSON.stringify({ session, seq, t, kind, body })
}

export class DecodeError extends Error {}

export function decodeFrame(text: string): Envelope {
  let doc: unknown
  try {
    doc = JSON.parse(text)
  } catch (err) {
    throw new DecodeError(`bad JSON: ${err}`)
  }
  if (typeof doc !== 'object' || doc === null || Array.isArray(doc)) {
    throw new DecodeError('frame must be a JSON object')
  }
  const env = doc as Record<string, unknown>
  if (
    typeof env.session !== 'string' ||
    typeof env.seq !== 'number' ||
    typeof env.t !== 'number' ||
    typeof env.kind !== 'string' ||
    typeof env.body !== 'object' ||
    env.body === null
  ) {
    throw new DecodeError('bad envelope')
  }
  return {
    session: env.session,
    seq: env.seq,
    t: env.t,
    kind: env.kind,
    body: env.body as Record<string, unknown>,
  }
}

/** outbound frame builder with per-connection sequence numbering */
export class FrameSender {
  private seq = 0

  constructor(
    private readonly session: string,
    private readonly transmit: (text: string) => void,
    private clock: () => number = () => 0,
  ) {}

  setClock(clock: () => number) {
    this.clock = clock
  }

  send(kind: string, body: Record<string, unknown>): string {
    this.seq += 1
    const text = encodeFrame(this.session, this.seq, this.clock(), kind, body)
    this.transmit(text)
    return text
  }
}
