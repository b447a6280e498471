/**
 * browser wiring: websocket to the bridge, canvas painting and the control
 * column (constraint editing, approval hold, stop, handover).
 */

import { addVertex, polygonProblem, undoVertex } from './editor.js'
import { ApprovalLoop } from './heartbeat.js'
import { projectToPath } from './path.js'
import {
  FrameSender,
  decodeFrame,
  emptyBody,
  approvalBody,
  lateralModificationBody,
  longitudinalModificationBody,
  type Point,
} from './protocol.js'
import { COLORS, buildScene, routePathFromUpdate, type SceneItem } from './render.js'
import {
  applyFrame,
  initialViewModel,
  markReleased,
  type ViewModel,
} from './viewmodel.js'

let vm: ViewModel = initialViewModel()

const canvas = document.getElementById('scene') as HTMLCanvasElement
const ctx = canvas.getContext('2d')!
const statusBar = document.getElementById('status')!
const noticeBar = document.getElementById('notice')!

const ws = new WebSocket(`ws://${location.host}/ws`)
const sender = new FrameSender('session-1', (text) => ws.send(text))
const approval = new ApprovalLoop((pid) => sender.send('approval', approvalBody(pid)))
approval.attachDeadman(window)

ws.onopen = () => {
  vm = { ...vm, connected: true }
}
ws.onclose = () => {
  vm = { ...vm, connected: false }
  approval.disengage()
}
ws.onmessage = (ev) => {
  const frame = decodeFrame(String(ev.data))
  vm = applyFrame(vm, frame, performance.now())
  if (vm.update) sender.setClock(() => vm.update!.simTime)
}

// --- world/screen transform ---------------------------------------------------

interface Viewport {
  scale: number
  ox: number
  oy: number
}

function fitViewport(): Viewport {
  const path = vm.update ? routePathFromUpdate(vm.update) : null
  if (!path) return { scale: 8, ox: 40, oy: canvas.height / 2 }
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity
  for (const [x, y] of path.vertices) {
    minX = Math.min(minX, x); maxX = Math.max(maxX, x)
    minY = Math.min(minY, y); maxY = Math.max(maxY, y)
  }
  const pad = 8
  const scale = Math.min(
    canvas.width / (maxX - minX + 2 * pad),
    canvas.height / (maxY - minY + 2 * pad),
  )
  return { scale, ox: -(minX - pad) * scale, oy: (maxY + pad) * scale }
}

function toScreen(v: Viewport, p: Point): Point {
  return [p[0] * v.scale + v.ox, -p[1] * v.scale + v.oy]
}

function toWorld(v: Viewport, p: Point): Point {
  return [(p[0] - v.ox) / v.scale, -(p[1] - v.oy) / v.scale]
}

function paint(items: SceneItem[], v: Viewport) {
  ctx.clearRect(0, 0, canvas.width, canvas.height)
  ctx.fillStyle = '#fafafa'
  ctx.fillRect(0, 0, canvas.width, canvas.height)
  for (const item of items) {
    if (item.kind === 'polyline') {
      ctx.strokeStyle = item.color
      ctx.lineWidth = Math.max(1, item.width * v.scale)
      ctx.setLineDash((item.dash ?? []).map((d) => d * v.scale))
      ctx.beginPath()
      item.points.forEach((p, i) => {
        const [x, y] = toScreen(v, p)
        i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)
      })
      ctx.stroke()
      ctx.setLineDash([])
    } else if (item.kind === 'polygon') {
      ctx.fillStyle = item.fill
      ctx.beginPath()
      item.points.forEach((p, i) => {
        const [x, y] = toScreen(v, p)
        i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)
      })
      ctx.closePath()
      ctx.fill()
      if (item.stroke) {
        ctx.strokeStyle = item.stroke
        ctx.lineWidth = 1
        ctx.setLineDash((item.dash ?? []).map((d) => d * v.scale))
        ctx.stroke()
        ctx.setLineDash([])
      }
    } else if (item.kind === 'circle') {
      ctx.fillStyle = item.fill
      const [x, y] = toScreen(v, item.center)
      ctx.beginPath()
      ctx.arc(x, y, item.radius * v.scale, 0, 2 * Math.PI)
      ctx.fill()
    } else {
      ctx.fillStyle = 'rgba(180,40,40,0.75)'
      ctx.font = '28px system-ui'
      ctx.fillText(item.text, 24, 44)
    }
  }
}

// --- controls -------------------------------------------------------------------

function button(id: string): HTMLButtonElement {
  return document.getElementById(id) as HTMLButtonElement
}

button('draw-polygon').onclick = () => {
  vm = { ...vm, edit: { mode: 'polygon', points: [] }, notice: 'click the map to add vertices' }
}

button('undo-vertex').onclick = () => {
  if (vm.edit.mode === 'polygon') {
    vm = { ...vm, edit: { mode: 'polygon', points: undoVertex(vm.edit.points) } }
  }
}

button('send-polygon').onclick = () => {
  if (vm.edit.mode !== 'polygon') return
  const problem = polygonProblem(vm.edit.points)
  if (problem) {
    vm = { ...vm, notice: problem }
    return
  }
  sender.send('modify_constraints', lateralModificationBody(vm.edit.points))
  vm = { ...vm, edit: { mode: 'idle' }, notice: 'lateral modification sent' }
}

button('set-stop').onclick = () => {
  vm = { ...vm, edit: { mode: 'stop', stopProgress: null }, notice: 'click the map to place the stop limit' }
}

button('lift-stop').onclick = () => {
  sender.send('modify_constraints', longitudinalModificationBody(null))
  vm = { ...vm, notice: 'stop limit lifted' }
}

button('approve').onclick = () => {
  if (approval.engaged) {
    approval.disengage()
    button('approve').textContent = 'Approve (hold)'
  } else if (vm.proposalId !== null) {
    approval.engage(vm.proposalId)
    button('approve').textContent = 'Approving… (click to stop)'
  } else {
    vm = { ...vm, notice: 'no trajectory proposal to approve yet' }
  }
}

button('stop-exec').onclick = () => {
  approval.disengage()
  button('approve').textContent = 'Approve (hold)'
  sender.send('stop_execution', emptyBody())
}

button('handover').onclick = () => {
  approval.disengage()
  sender.send('handover', emptyBody())
  vm = markReleased(vm)
}

canvas.onclick = (ev) => {
  if (vm.released) return
  const rect = canvas.getBoundingClientRect()
  const screen: Point = [ev.clientX - rect.left, ev.clientY - rect.top]
  const world = toWorld(fitViewport(), screen)
  if (vm.edit.mode === 'polygon') {
    vm = { ...vm, edit: { mode: 'polygon', points: addVertex(vm.edit.points, world) } }
  } else if (vm.edit.mode === 'stop') {
    const path = vm.update ? routePathFromUpdate(vm.update) : null
    if (!path) return
    const theta = projectToPath(path, world)
    sender.send('modify_constraints', longitudinalModificationBody(theta))
    vm = { ...vm, edit: { mode: 'idle' }, notice: `stop limit moved to ${theta.toFixed(1)} m` }
  }
}

// --- frame loop -------------------------------------------------------------------

function describe(): string {
  const parts: string[] = []
  parts.push(vm.connected ? 'link up' : 'link down')
  if (vm.update) {
    parts.push(`session ${vm.update.sessionState}`)
    const behavior = activeBehavior(vm.update.arbitration)
    if (behavior) parts.push(`active: ${behavior}`)
    parts.push(`v=${vm.update.environment.ego.speed.toFixed(1)} m/s`)
    parts.push(`progress=${vm.update.environment.ego.progress.toFixed(1)} m`)
  }
  if (vm.released) parts.push('released (read-only)')
  if (approval.engaged) parts.push('approval heartbeat on')
  return parts.join('  |  ')
}

function activeBehavior(node: any): string | null {
  if (!node) return null
  if (node.active && !node.options?.length) return node.name
  for (const opt of node.options ?? []) {
    const hit = activeBehavior(opt)
    if (hit) return hit
  }
  return null
}

function frame() {
  paint(buildScene(vm, performance.now()), fitViewport())
  statusBar.textContent = describe()
  noticeBar.textContent = vm.notice ?? ''
  for (const id of ['draw-polygon', 'undo-vertex', 'send-polygon', 'set-stop',
                    'lift-stop', 'approve', 'stop-exec', 'handover']) {
    button(id).disabled = vm.released
  }
  requestAnimationFrame(frame)
}

requestAnimationFrame(frame)
