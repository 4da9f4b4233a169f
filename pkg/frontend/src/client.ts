/**
 * Viewer session client: owns the websocket, the orbit camera state, and the
 * latest decoded frame / stats / scene info.
 *
 * Camera input is coalesced: pointer events mutate a pending orbit state and
 * at most one `camera` message goes out per animation tick.  Reconnects use a
 * short capped backoff (0.5 s, 1 s, then 2 s).
 */

import { DEFAULT_ORBIT, Drag, OrbitState, orbitUpdate } from './orbit'
import {
  ControlMessage,
  DecodedFrame,
  SceneInfo,
  Stats,
  decodeFrame,
  parseServerMessage,
  serializeControl,
} from './protocol'
import { Store } from './store'

export type ConnectionStatus = 'connecting' | 'open' | 'closed'

/** The subset of the WebSocket interface the client uses (injectable in tests). */
export interface SocketLike {
  binaryType: string
  onopen: ((ev?: unknown) => void) | null
  onmessage: ((ev: { data: unknown }) => void) | null
  onclose: ((ev?: unknown) => void) | null
  onerror: ((ev?: unknown) => void) | null
  send(data: string): void
  close(): void
}

export interface ClientOptions {
  makeSocket?: (url: string) => SocketLike
  /** Schedule `fn` for the next animation tick; returns a cancel handle. */
  requestTick?: (fn: () => void) => unknown
  cancelTick?: (handle: unknown) => void
  setTimer?: (fn: () => void, ms: number) => unknown
  initialOrbit?: OrbitState
}

export const BACKOFF_MS = [500, 1000, 2000]

export class ViewerClient {
  readonly status = new Store<ConnectionStatus>('connecting')
  readonly orbit: Store<OrbitState>
  readonly frame = new Store<DecodedFrame | null>(null)
  readonly stats = new Store<Stats | null>(null)
  readonly sceneInfo = new Store<SceneInfo | null>(null)
  readonly lastError = new Store<string | null>(null)

  private readonly url: string
  private readonly makeSocket: (url: string) => SocketLike
  private readonly requestTick: (fn: () => void) => unknown
  private readonly cancelTick: (handle: unknown) => void
  private readonly setTimer: (fn: () => void, ms: number) => unknown

  private socket: SocketLike | null = null
  private attempts = 0
  private tickHandle: unknown = null
  private cameraDirty = false
  private stopped = false

  constructor(url: string, opts: ClientOptions = {}) {
    this.url = url
    this.makeSocket = opts.makeSocket ??
      ((u) => new WebSocket(u) as unknown as SocketLike)
    this.requestTick = opts.requestTick ??
      ((fn) => requestAnimationFrame(() => fn()))
    this.cancelTick = opts.cancelTick ??
      ((h) => cancelAnimationFrame(h as number))
    this.setTimer = opts.setTimer ?? ((fn, ms) => setTimeout(fn, ms))
    this.orbit = new Store(opts.initialOrbit ?? DEFAULT_ORBIT)
    this.connect()
  }

  private connect(): void {
    if (this.stopped) return
    this.status.set('connecting')
    const socket = this.makeSocket(this.url)
    this.socket = socket
    socket.binaryType = 'arraybuffer'
    socket.onopen = () => {
      this.attempts = 0
      this.status.set('open')
      socket.send(serializeControl({ type: 'hello' }))
      this.sendCameraNow()
    }
    socket.onmessage = (ev) => this.handleMessage(ev.data)
    socket.onerror = () => {}
    socket.onclose = () => {
      if (this.socket !== socket) return
      this.socket = null
      this.status.set('closed')
      const delay = BACKOFF_MS[Math.min(this.attempts, BACKOFF_MS.length - 1)]
      this.attempts += 1
      this.setTimer(() => this.connect(), delay)
    }
  }

  private handleMessage(data: unknown): void {
    if (typeof data === 'string') {
      const msg = parseServerMessage(data)
      if (msg.type === 'scene_info') this.sceneInfo.set(msg)
      else if (msg.type === 'stats') this.stats.set(msg)
      else this.lastError.set(msg.message)
      return
    }
    if (data instanceof ArrayBuffer) {
      this.frame.set(decodeFrame(data))
    }
  }

  /** Accumulate pointer input; the wire update goes out on the next tick. */
  applyInput(drag: Drag, wheel = 0): void {
    this.orbit.set(orbitUpdate(this.orbit.get(), drag, wheel))
    this.cameraDirty = true
    if (this.tickHandle === null) {
      this.tickHandle = this.requestTick(() => {
        this.tickHandle = null
        if (this.cameraDirty) this.sendCameraNow()
      })
    }
  }

  private sendCameraNow(): void {
    this.cameraDirty = false
    const o = this.orbit.get()
    this.send({
      type: 'camera',
      yaw: o.yaw,
      pitch: o.pitch,
      radius: o.radius,
      target: o.target,
      fov: o.fov,
    })
  }

  send(msg: ControlMessage): void {
    if (this.socket !== null && this.status.get() === 'open') {
      this.socket.send(serializeControl(msg))
    }
  }

  close(): void {
    this.stopped = true
    if (this.tickHandle !== null) this.cancelTick(this.tickHandle)
    this.socket?.close()
  }
}
