/** Wire types for the comparison service's JSON API. */

export interface GeoPoint {
  lat: number
  lon: number
}

/** One side of a comparison as the service reports it. */
export interface QuoteSide {
  service: 'YELLOW' | 'UBER_X'
  amount_usd: number
  basis: 'HISTORICAL_TRIP' | 'RANGE_MEAN'
  matched_trip?: number
  origin_ring?: number
  dest_gap_m?: number
}

export interface MatchedTrip {
  pickup: GeoPoint
  dropoff: GeoPoint
  dest_gap_m: number
  ring_used: number
}

/**
 * /v1/compare body. `uber`, `cheaper`, and `delta_usd` are null when the
 * service answered in degraded yellow-only mode; `warnings` then carries
 * "provider-down".
 */
export interface CompareResponse {
  yellow: QuoteSide
  uber: QuoteSide | null
  cheaper: 'YELLOW' | 'UBER' | 'TIE' | null
  delta_usd: number | null
  matched_trip: MatchedTrip
  warnings: string[]
}

export interface GeocodeResponse {
  lat: number
  lon: number
  label: string
}

export interface HealthResponse {
  status: string
  index_trips?: number
  built_at?: number
}

/** Geographic extent the map pane covers; mirrors the service region. */
export interface BBox {
  south: number
  west: number
  north: number
  east: number
}
