/**
 * DOM wiring: canvas that paints incoming frames and tracks pointer input,
 * plus a control panel (time slider, sort strategy, pose joint, filters,
 * model list, stats readout) that talks through the ViewerClient.
 */

import { ViewerClient } from './client'
import { DecodedFrame, SceneInfo, Stats, axisAngleQuat } from './protocol'

export const STRATEGIES = ['global', 'lazy:10', 'local:65536']
export const FILTER_PRESETS: Record<string, string[]> = {
  none: [],
  gamma: ['gamma:2.2'],
  sharpen: ['sharpen'],
  'gamma+sharpen': ['gamma:2.2', 'sharpen'],
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document, tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag)
  if (className !== undefined) node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

export function paintFrame(canvas: HTMLCanvasElement, frame: DecodedFrame): void {
  canvas.width = frame.width
  canvas.height = frame.height
  const ctx = canvas.getContext('2d')
  if (ctx === null) return
  if (frame.encoding === 'raw-rgba8') {
    const image = ctx.createImageData(frame.width, frame.height)
    image.data.set(frame.payload)
    ctx.putImageData(image, 0, 0)
  } else {
    const blob = new Blob([frame.payload.slice()], { type: 'image/png' })
    const url = URL.createObjectURL(blob)
    const img = new Image()
    img.onload = () => {
      ctx.drawImage(img, 0, 0)
      URL.revokeObjectURL(url)
    }
    img.src = url
  }
}

function attachPointerInput(canvas: HTMLCanvasElement, client: ViewerClient): void {
  let dragging = false
  let lastX = 0
  let lastY = 0
  canvas.addEventListener('mousedown', (ev) => {
    dragging = true
    lastX = ev.clientX
    lastY = ev.clientY
  })
  canvas.addEventListener('mousemove', (ev) => {
    if (!dragging) return
    client.applyInput({ dx: ev.clientX - lastX, dy: ev.clientY - lastY })
    lastX = ev.clientX
    lastY = ev.clientY
  })
  const stop = () => { dragging = false }
  canvas.addEventListener('mouseup', stop)
  canvas.addEventListener('mouseleave', stop)
  canvas.addEventListener('wheel', (ev) => {
    ev.preventDefault()
    client.applyInput({ dx: 0, dy: 0 }, ev.deltaY)
  })
}

function renderModelRows(doc: Document, list: HTMLElement, info: SceneInfo): void {
  list.textContent = ''
  for (const model of info.models) {
    const row = el(doc, 'li', 'model-row')
    const count = model.count === null ? 'dynamic' : `${model.count} splats`
    const degree = model.degree === null ? '' : `, SH degree ${model.degree}`
    row.textContent = `#${model.model_id} ${model.kind} (${count}${degree})`
    list.appendChild(row)
  }
}

function formatStats(stats: Stats): string {
  return [
    `frame ${stats.frame_index}`,
    `${stats.strategy}`,
    `${stats.splats_visible}/${stats.splats_in} splats`,
    `${stats.total_ms.toFixed(1)} ms`,
    `${stats.inversions} inversions`,
  ].join(' | ')
}

export function buildPanel(root: HTMLElement, client: ViewerClient): void {
  const doc = root.ownerDocument

  const canvas = el(doc, 'canvas', 'viewport')
  canvas.width = 512
  canvas.height = 512
  root.appendChild(canvas)
  attachPointerInput(canvas, client)
  client.frame.subscribe((frame) => {
    if (frame !== null) paintFrame(canvas, frame)
  })

  const panel = el(doc, 'div', 'panel')
  root.appendChild(panel)

  const statusLine = el(doc, 'div', 'status', 'connecting')
  panel.appendChild(statusLine)
  client.status.subscribe((s) => { statusLine.textContent = s })
  client.lastError.subscribe((msg) => {
    if (msg !== null) statusLine.textContent = `error: ${msg}`
  })

  const timeLabel = el(doc, 'label', undefined, 'time ')
  const timeSlider = el(doc, 'input', 'time-slider')
  timeSlider.type = 'range'
  timeSlider.min = '0'
  timeSlider.max = '1'
  timeSlider.step = '0.01'
  timeSlider.value = '0'
  timeSlider.addEventListener('input', () => {
    client.send({ type: 'set_time', t: Number(timeSlider.value) })
  })
  timeLabel.appendChild(timeSlider)
  panel.appendChild(timeLabel)

  const strategyLabel = el(doc, 'label', undefined, 'sort ')
  const strategySelect = el(doc, 'select', 'strategy-select')
  for (const token of STRATEGIES) {
    const option = el(doc, 'option', undefined, token)
    option.value = token
    strategySelect.appendChild(option)
  }
  strategySelect.addEventListener('change', () => {
    client.send({ type: 'set_strategy', token: strategySelect.value })
  })
  strategyLabel.appendChild(strategySelect)
  panel.appendChild(strategyLabel)

  const filterLabel = el(doc, 'label', undefined, 'filters ')
  const filterSelect = el(doc, 'select', 'filter-select')
  for (const name of Object.keys(FILTER_PRESETS)) {
    const option = el(doc, 'option', undefined, name)
    option.value = name
    filterSelect.appendChild(option)
  }
  filterSelect.addEventListener('change', () => {
    client.send({ type: 'set_filter_chain', tokens: FILTER_PRESETS[filterSelect.value] })
  })
  filterLabel.appendChild(filterSelect)
  panel.appendChild(filterLabel)

  // Single demo joint: rotate joint 1 about z, root joint stays at identity.
  const jointLabel = el(doc, 'label', undefined, 'joint 1 (deg) ')
  const jointSlider = el(doc, 'input', 'joint-slider')
  jointSlider.type = 'range'
  jointSlider.min = '-180'
  jointSlider.max = '180'
  jointSlider.step = '1'
  jointSlider.value = '0'
  jointSlider.addEventListener('input', () => {
    const angle = (Number(jointSlider.value) * Math.PI) / 180
    client.send({
      type: 'set_pose',
      joint_rotations: [[1, 0, 0, 0], axisAngleQuat([0, 0, 1], angle)],
      root_translation: [0, 0, 0],
    })
  })
  jointLabel.appendChild(jointSlider)
  panel.appendChild(jointLabel)

  const modelList = el(doc, 'ul', 'model-list')
  panel.appendChild(modelList)
  client.sceneInfo.subscribe((info) => {
    if (info !== null) renderModelRows(doc, modelList, info)
  })

  const statsLine = el(doc, 'div', 'stats')
  panel.appendChild(statsLine)
  client.stats.subscribe((stats) => {
    if (stats !== null) statsLine.textContent = formatStats(stats)
  })
}
