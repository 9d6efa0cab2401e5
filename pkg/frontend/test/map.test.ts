import { describe, expect, it } from 'vitest'

import { fromPane, invMercY, mercY, tileX, tileY, tilesFor, toPane } from '../src/map.js'
import type { BBox } from '../src/types.js'

const BOX: BBox = { south: 40.49, west: -74.27, north: 40.92, east: -73.68 }
const W = 640
const H = 480

describe('pane projection', () => {
  it('pins the box corners to the pane corners', () => {
    const nw = toPane({ lat: BOX.north, lon: BOX.west }, BOX, W, H)
    expect(nw.x).toBeCloseTo(0, 9)
    expect(nw.y).toBeCloseTo(0, 9)
    const se = toPane({ lat: BOX.south, lon: BOX.east }, BOX, W, H)
    expect(se.x).toBeCloseTo(W, 9)
    expect(se.y).toBeCloseTo(H, 9)
  })

  it('round-trips arbitrary points', () => {
    for (const p of [
      { lat: 40.758, lon: -73.9855 },
      { lat: 40.6413, lon: -73.7781 },
      { lat: 40.49, lon: -74.27 },
    ]) {
      const back = fromPane(toPane(p, BOX, W, H), BOX, W, H)
      expect(back.lat).toBeCloseTo(p.lat, 9)
      expect(back.lon).toBeCloseTo(p.lon, 9)
    }
  })

  it('stretches latitude the Mercator way', () => {
    // at these latitudes the geographic mid-latitude sits below pane center
    const mid = toPane({ lat: (BOX.north + BOX.south) / 2, lon: -74 }, BOX, W, H)
    expect(mid.y).toBeGreaterThan(H / 2)
    expect(invMercY(mercY(40.7))).toBeCloseTo(40.7, 12)
  })
})

describe('slippy tiles', () => {
  it('uses the reference tile grid', () => {
    expect(tileX(-180, 1)).toBeCloseTo(0, 12)
    expect(tileX(0, 1)).toBeCloseTo(1, 12)
    expect(tileX(180, 1)).toBeCloseTo(2, 12)
    expect(tileY(0, 1)).toBeCloseTo(1, 12)
    expect(tileY(85.0511287798, 1)).toBeCloseTo(0, 6)
  })

  it('yields nothing without a configured source', () => {
    expect(tilesFor(BOX, W, H, '')).toEqual([])
  })

  it('covers the pane with substituted tile URLs', () => {
    const tiles = tilesFor(BOX, W, H, 'https://tiles.example/{z}/{x}/{y}.png')
    expect(tiles.length).toBeGreaterThan(0)
    for (const t of tiles) {
      expect(t.url).not.toMatch(/[{}]/)
      expect(t.url).toMatch(/^https:\/\/tiles\.example\/\d+\/\d+\/\d+\.png$/)
    }
    expect(Math.min(...tiles.map((t) => t.left))).toBeLessThanOrEqual(0)
    expect(Math.min(...tiles.map((t) => t.top))).toBeLessThanOrEqual(0)
    expect(Math.max(...tiles.map((t) => t.left + t.size))).toBeGreaterThanOrEqual(W)
    expect(Math.max(...tiles.map((t) => t.top + t.size))).toBeGreaterThanOrEqual(H)
  })
})
