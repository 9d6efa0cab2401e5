/** DOM wiring: one map pane, one address form, one results panel. */

import { ApiClient } from './api.js'
import { fromPane, tilesFor, toPane } from './map.js'
import { render } from './render.js'
import { AppController } from './state.js'
import type { BBox, GeoPoint } from './types.js'

// Service region; matches the default NYC mesh served by the engine.
const BOX: BBox = { south: 40.49, west: -74.27, north: 40.92, east: -73.68 }

// Point tileUrl at a slippy source ("https://tiles.example/{z}/{x}/{y}.png")
// to draw a real basemap; empty keeps the offline grid.
const CONFIG = { baseUrl: '', tileUrl: '' }

const api = new ApiClient(CONFIG.baseUrl)
const app = new AppController(api)

const pane = document.getElementById('map') as HTMLDivElement
const results = document.getElementById('results') as HTMLDivElement
const form = document.getElementById('address-form') as HTMLFormElement
const addressInput = document.getElementById('address') as HTMLInputElement
const swapButton = document.getElementById('swap') as HTMLButtonElement
const resetButton = document.getElementById('reset') as HTMLButtonElement
const healthLine = document.getElementById('health') as HTMLSpanElement

function paneSize(): { w: number; h: number } {
  return { w: pane.clientWidth, h: pane.clientHeight }
}

function placeTiles(): void {
  const { w, h } = paneSize()
  for (const t of tilesFor(BOX, w, h, CONFIG.tileUrl)) {
    const img = document.createElement('img')
    img.src = t.url
    img.className = 'tile'
    img.style.left = `${t.left}px`
    img.style.top = `${t.top}px`
    img.style.width = `${t.size}px`
    img.style.height = `${t.size}px`
    pane.appendChild(img)
  }
}

function marker(p: GeoPoint, cls: string): HTMLDivElement {
  const { w, h } = paneSize()
  const at = toPane(p, BOX, w, h)
  const el = document.createElement('div')
  el.className = `marker ${cls}`
  el.style.left = `${at.x}px`
  el.style.top = `${at.y}px`
  return el
}

function redraw(): void {
  const state = app.getState()
  for (const el of Array.from(pane.querySelectorAll('.marker'))) el.remove()
  if (state.origin) pane.appendChild(marker(state.origin, 'origin'))
  if (state.dest) pane.appendChild(marker(state.dest, 'dest'))
  if (state.quote) {
    pane.appendChild(marker(state.quote.matched_trip.pickup, 'trip'))
    pane.appendChild(marker(state.quote.matched_trip.dropoff, 'trip'))
  }
  results.innerHTML = render(state)
}

pane.addEventListener('click', (ev) => {
  const rect = pane.getBoundingClientRect()
  const { w, h } = paneSize()
  app.pickPoint(fromPane({ x: ev.clientX - rect.left, y: ev.clientY - rect.top }, BOX, w, h))
})

form.addEventListener('submit', (ev) => {
  ev.preventDefault()
  void app.pickAddress(addressInput.value)
  addressInput.select()
})

swapButton.addEventListener('click', () => app.swap())
resetButton.addEventListener('click', () => app.reset())

app.subscribe(redraw)
placeTiles()
redraw()

api
  .health()
  .then((h) => {
    healthLine.textContent = h.index_trips != null ? `${h.index_trips} trips indexed` : h.status
  })
  .catch(() => {
    healthLine.textContent = 'service unreachable'
  })
