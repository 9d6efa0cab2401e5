/**
 * Map-pane geometry: Web Mercator inside a fixed geographic box.
 *
 * The pane is a plain positioned element; markers and clicks convert
 * between pixel and geographic coordinates here. Latitude uses the
 * Mercator stretch so an optional slippy-tile backdrop lines up with the
 * markers; longitude is linear as in any Mercator view.
 */

import type { BBox, GeoPoint } from './types.js'

const DEG = Math.PI / 180

export function mercY(lat: number): number {
  return Math.log(Math.tan(Math.PI / 4 + (lat * DEG) / 2))
}

export function invMercY(y: number): number {
  return (2 * Math.atan(Math.exp(y)) - Math.PI / 2) / DEG
}

export interface PanePoint {
  x: number
  y: number
}

/** Geographic point to pane pixels; (0,0) is the pane's top-left. */
export function toPane(p: GeoPoint, box: BBox, width: number, height: number): PanePoint {
  const top = mercY(box.north)
  const bottom = mercY(box.south)
  return {
    x: ((p.lon - box.west) / (box.east - box.west)) * width,
    y: ((top - mercY(p.lat)) / (top - bottom)) * height,
  }
}

/** Pane pixels back to a geographic point; inverse of toPane. */
export function fromPane(pt: PanePoint, box: BBox, width: number, height: number): GeoPoint {
  const top = mercY(box.north)
  const bottom = mercY(box.south)
  return {
    lon: box.west + (pt.x / width) * (box.east - box.west),
    lat: invMercY(top - (pt.y / height) * (top - bottom)),
  }
}

/** Standard slippy-map tile column for a longitude at a zoom level. */
export function tileX(lon: number, zoom: number): number {
  return ((lon + 180) / 360) * 2 ** zoom
}

/** Standard slippy-map tile row for a latitude at a zoom level. */
export function tileY(lat: number, zoom: number): number {
  return ((1 - mercY(lat) / Math.PI) / 2) * 2 ** zoom
}

export interface TilePlacement {
  url: string
  left: number
  top: number
  size: number
}

/**
 * Tiles covering the box, positioned in pane pixels. `template` is a
 * slippy URL with {z}/{x}/{y} placeholders; an empty template means the
 * offline grid backdrop and yields no tiles. The zoom is chosen so tiles
 * render at no less than their native 256 px.
 */
export function tilesFor(box: BBox, width: number, height: number, template: string): TilePlacement[] {
  if (!template) return []
  const spanX = tileX(box.east, 0) - tileX(box.west, 0)
  const zoom = Math.max(0, Math.min(19, Math.floor(Math.log2(width / 256 / spanX))))
  const scale = width / ((tileX(box.east, zoom) - tileX(box.west, zoom)) * 256)
  const x0 = tileX(box.west, zoom)
  const y0 = tileY(box.north, zoom)
  const out: TilePlacement[] = []
  const size = 256 * scale
  for (let x = Math.floor(x0); x * 256 * scale - x0 * 256 * scale < width; x++) {
    for (let y = Math.floor(y0); y * 256 * scale - y0 * 256 * scale < height; y++) {
      out.push({
        url: template.replace('{z}', String(zoom)).replace('{x}', String(x)).replace('{y}', String(y)),
        left: (x - x0) * size,
        top: (y - y0) * size,
        size,
      })
    }
  }
  return out
}
