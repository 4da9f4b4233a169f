import { ViewerClient } from './client'
import { buildPanel } from './panel'

function wsUrl(): string {
  const params = new URLSearchParams(window.location.search)
  const explicit = params.get('ws')
  if (explicit !== null) return explicit
  const scheme = window.location.protocol === 'https:' ? 'wss' : 'ws'
  return `${scheme}://${window.location.host}/ws`
}

const root = document.getElementById('app')
if (root === null) throw new Error('missing #app mount point')
const client = new ViewerClient(wsUrl())
buildPanel(root, client)
