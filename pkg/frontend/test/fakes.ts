import { SocketLike } from '../src/client'

/** Scripted stand-in for a WebSocket; the test drives open/message/close. */
export class FakeSocket implements SocketLike {
  binaryType = 'blob'
  onopen: ((ev?: unknown) => void) | null = null
  onmessage: ((ev: { data: unknown }) => void) | null = null
  onclose: ((ev?: unknown) => void) | null = null
  onerror: ((ev?: unknown) => void) | null = null
  sent: string[] = []
  closed = false

  send(data: string): void {
    this.sent.push(data)
  }

  close(): void {
    this.closed = true
    this.onclose?.()
  }

  open(): void {
    this.onopen?.()
  }

  receiveText(text: string): void {
    this.onmessage?.({ data: text })
  }

  receiveBinary(buf: ArrayBuffer): void {
    this.onmessage?.({ data: buf })
  }

  serverClose(): void {
    this.onclose?.()
  }

  /** Sent messages parsed as JSON, optionally filtered by type. */
  sentJson(type?: string): Record<string, unknown>[] {
    const all = this.sent.map((s) => JSON.parse(s) as Record<string, unknown>)
    return type === undefined ? all : all.filter((m) => m.type === type)
  }
}

/** Manual animation-tick scheduler: ticks fire only when the test says so. */
export class ManualTicker {
  private pending: (() => void)[] = []

  request = (fn: () => void): unknown => {
    this.pending.push(fn)
    return fn
  }

  cancel = (handle: unknown): void => {
    this.pending = this.pending.filter((fn) => fn !== handle)
  }

  tick(): void {
    const batch = this.pending
    this.pending = []
    for (const fn of batch) fn()
  }

  get pendingCount(): number {
    return this.pending.length
  }
}
