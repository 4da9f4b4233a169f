import { describe, expect, it } from 'vitest'
import {
  axisAngleQuat,
  decodeFrame,
  encodeFrame,
  parseServerMessage,
  ProtocolError,
  serializeControl,
} from '../src/protocol'

function header(tag: number, w: number, h: number, enc: number, len: number): DataView {
  const buf = new ArrayBuffer(10 + len)
  const view = new DataView(buf)
  view.setUint8(0, tag)
  view.setUint16(1, w, true)
  view.setUint16(3, h, true)
  view.setUint8(5, enc)
  view.setUint32(6, len, true)
  return view
}

describe('decodeFrame', () => {
  it('decodes the header fields little-endian', () => {
    const view = header(0x02, 640, 480, 1, 3)
    new Uint8Array(view.buffer, 10).set([9, 8, 7])
    const frame = decodeFrame(view.buffer)
    expect(frame.width).toBe(640)
    expect(frame.height).toBe(480)
    expect(frame.encoding).toBe('png')
    expect(Array.from(frame.payload)).toEqual([9, 8, 7])
  })

  it('decodes a 2x2 raw-rgba8 frame with a 16-byte payload', () => {
    const view = header(0x02, 2, 2, 0, 16)
    const pixels = Array.from({ length: 16 }, (_, i) => i * 10)
    new Uint8Array(view.buffer, 10).set(pixels)
    const frame = decodeFrame(view.buffer)
    expect(frame.encoding).toBe('raw-rgba8')
    expect(frame.payload.byteLength).toBe(16)
    expect(Array.from(frame.payload)).toEqual(pixels)
  })

  it('round-trips through encodeFrame', () => {
    const original = {
      width: 3,
      height: 1,
      encoding: 'raw-rgba8' as const,
      payload: new Uint8Array(12).fill(200),
    }
    const decoded = decodeFrame(encodeFrame(original))
    expect(decoded).toEqual(original)
  })

  it('rejects a wrong tag, a bad encoding id, and a length mismatch', () => {
    expect(() => decodeFrame(header(0x03, 1, 1, 0, 4).buffer)).toThrow(ProtocolError)
    expect(() => decodeFrame(header(0x02, 1, 1, 9, 4).buffer)).toThrow(ProtocolError)
    const short = header(0x02, 1, 1, 0, 4)
    short.setUint32(6, 99, true)
    expect(() => decodeFrame(short.buffer)).toThrow(ProtocolError)
    expect(() => decodeFrame(header(0x02, 2, 2, 0, 4).buffer)).toThrow(/dimensions/)
    expect(() => decodeFrame(new ArrayBuffer(5))).toThrow(/header/)
  })
})

describe('parseServerMessage', () => {
  it('accepts the three server message types', () => {
    const info = parseServerMessage(
      '{"type": "scene_info", "models": [], "has_mesh": false, "background": [0,0,0]}')
    expect(info.type).toBe('scene_info')
    const stats = parseServerMessage('{"type": "stats", "frame_index": 3}')
    expect(stats.type).toBe('stats')
    const err = parseServerMessage('{"type": "error", "fatal": false, "message": "x"}')
    expect(err.type).toBe('error')
  })

  it('rejects junk and unknown types', () => {
    expect(() => parseServerMessage('not json')).toThrow(ProtocolError)
    expect(() => parseServerMessage('{"type": "bogus"}')).toThrow(ProtocolError)
  })
})

describe('control serialization', () => {
  it('emits the wire field names', () => {
    const text = serializeControl({
      type: 'camera', yaw: 1, pitch: 0.5, radius: 3, target: [0, 0, 0], fov: 1.0,
    })
    const parsed = JSON.parse(text)
    expect(parsed).toEqual(
      { type: 'camera', yaw: 1, pitch: 0.5, radius: 3, target: [0, 0, 0], fov: 1.0 })
    expect(JSON.parse(serializeControl({ type: 'set_time', t: 0.25 })))
      .toEqual({ type: 'set_time', t: 0.25 })
    expect(JSON.parse(serializeControl({ type: 'set_strategy', token: 'lazy:10' })))
      .toEqual({ type: 'set_strategy', token: 'lazy:10' })
  })

  it('builds a 90-degree z rotation quaternion', () => {
    const q = axisAngleQuat([0, 0, 1], Math.PI / 2)
    const r = Math.SQRT1_2
    expect(q[0]).toBeCloseTo(r, 12)
    expect(q[1]).toBeCloseTo(0, 12)
    expect(q[2]).toBeCloseTo(0, 12)
    expect(q[3]).toBeCloseTo(r, 12)
  })
})
