/**
 * approval heartbeat: while engaged, re-sends the approval for the current
 * proposal on a fixed cadence. losing window focus disengages (dead-man
 * behavior): an unattended console must never keep a vehicle moving.
 */

export class ApprovalLoop {
  private timer: ReturnType<typeof setInterval> | null = null
  private proposalId: number | null = null

  constructor(
    private readonly send: (proposalId: number) => void,
    private readonly intervalMs = 100,
  ) {}

  get engaged(): boolean {
    return this.timer !== null
  }

  engage(proposalId: number) {
    this.disengage()
    this.proposalId = proposalId
    this.send(proposalId)
    this.timer = setInterval(() => {
      if (this.proposalId !== null) this.send(this.proposalId)
    }, this.intervalMs)
  }

  disengage() {
    if (this.timer !== null) {
      clearInterval(this.timer)
      this.timer = null
    }
    this.proposalId = null
  }

  /** wires the dead-man switch to a window-like event target */
  attachDeadman(target: { addEventListener(type: string, cb: () => void): void }) {
    target.addEventListener('blur', () => this.disengage())
  }
}
