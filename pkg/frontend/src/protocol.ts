/**
 * Wire protocol: JSON control/status messages plus the binary frame layout
 * (tag 0x02, u16 width, u16 height, u8 encoding id, u32 payload length,
 * payload; little-endian).
 */

export const FRAME_TAG = 0x02
const HEADER_BYTES = 10

export type Encoding = 'raw-rgba8' | 'png'
const ENCODING_IDS: Record<number, Encoding> = { 0: 'raw-rgba8', 1: 'png' }

export interface DecodedFrame {
  width: number
  height: number
  encoding: Encoding
  payload: Uint8Array
}

export class ProtocolError extends Error {}

export function decodeFrame(data: ArrayBuffer): DecodedFrame {
  if (data.byteLength < HEADER_BYTES) {
    throw new ProtocolError(`frame message of ${data.byteLength} bytes is shorter than its header`)
  }
  const view = new DataView(data)
  const tag = view.getUint8(0)
  if (tag !== FRAME_TAG) throw new ProtocolError(`unexpected message tag 0x${tag.toString(16)}`)
  const width = view.getUint16(1, true)
  const height = view.getUint16(3, true)
  const encoding = ENCODING_IDS[view.getUint8(5)]
  if (encoding === undefined) throw new ProtocolError(`unknown encoding id ${view.getUint8(5)}`)
  const length = view.getUint32(6, true)
  const payload = new Uint8Array(data, HEADER_BYTES)
  if (payload.byteLength !== length) {
    throw new ProtocolError(`payload length ${payload.byteLength} != header ${length}`)
  }
  if (encoding === 'raw-rgba8' && length !== width * height * 4) {
    throw new ProtocolError('raw-rgba8 payload does not match dimensions')
  }
  return { width, height, encoding, payload }
}

/** Test/helper inverse of decodeFrame for raw payloads. */
export function encodeFrame(frame: DecodedFrame): ArrayBuffer {
  const buf = new ArrayBuffer(HEADER_BYTES + frame.payload.byteLength)
  const view = new DataView(buf)
  view.setUint8(0, FRAME_TAG)
  view.setUint16(1, frame.width, true)
  view.setUint16(3, frame.height, true)
  view.setUint8(5, frame.encoding === 'png' ? 1 : 0)
  view.setUint32(6, frame.payload.byteLength, true)
  new Uint8Array(buf, HEADER_BYTES).set(frame.payload)
  return buf
}

// --- JSON control plane -----------------------------------------------------

export interface ModelInfo {
  model_id: number
  count: number | null
  degree: number | null
  kind: string
}

export interface SceneInfo {
  type: 'scene_info'
  models: ModelInfo[]
  has_mesh: boolean
  background: [number, number, number]
}

export interface Stats {
  type: 'stats'
  frame_index: number
  strategy: string
  inversions: number
  generate_ms: number
  preprocess_ms: number
  sort_ms: number
  draw_ms: number
  total_ms: number
  splats_in: number
  splats_visible: number
}

export interface ServerError {
  type: 'error'
  fatal: boolean
  message: string
}

export type ServerMessage = SceneInfo | Stats | ServerError

export function parseServerMessage(text: string): ServerMessage {
  let msg: unknown
  try {
    msg = JSON.parse(text)
  } catch {
    throw new ProtocolError('server message is not valid JSON')
  }
  const type = (msg as { type?: string }).type
  if (type !== 'scene_info' && type !== 'stats' && type !== 'error') {
    throw new ProtocolError(`unknown server message type ${String(type)}`)
  }
  return msg as ServerMessage
}

export interface CameraUpdate {
  type: 'camera'
  yaw: number
  pitch: number
  radius: number
  target: [number, number, number]
  fov: number
}

export type ControlMessage =
  | { type: 'hello' }
  | CameraUpdate
  | { type: 'set_time'; t: number }
  | { type: 'set_pose'; joint_rotations: number[][]; root_translation: number[] }
  | { type: 'set_strategy'; token: string }
  | { type: 'set_model_transform'; model_id: number; transform: number[] }
  | { type: 'set_filter_chain'; tokens: string[] }

export function serializeControl(msg: ControlMessage): string {
  return JSON.stringify(msg)
}

/** Quaternion (w,x,y,z) for a rotation of `angle` radians about a unit axis. */
export function axisAngleQuat(axis: [number, number, number], angle: number): number[] {
  const h = angle / 2
  const s = Math.sin(h)
  return [Math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s]
}
