/** Thin typed client for the comparison service. */

import type { CompareResponse, GeocodeResponse, GeoPoint, HealthResponse } from './types.js'

/** A non-2xx answer, carrying the service's error envelope when present. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message)
    this.name = 'ApiError'
  }
}

async function toApiError(res: Response): Promise<ApiError> {
  try {
    const body = await res.json()
    if (body && body.error && typeof body.error.message === 'string') {
      return new ApiError(res.status, String(body.error.code ?? ''), body.error.message)
    }
  } catch {
    // non-JSON error body, fall through to the generic message
  }
  return new ApiError(res.status, '', `request failed with status ${res.status}`)
}

export type FetchLike = (url: string) => Promise<Response>

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (url) => fetch(url),
  ) {}

  private async get<T>(path: string, params: Record<string, string>): Promise<T> {
    const qs = new URLSearchParams(params).toString()
    let res: Response
    try {
      res = await this.fetchFn(`${this.baseUrl}${path}?${qs}`)
    } catch (e) {
      throw new ApiError(0, 'network', e instanceof Error ? e.message : 'network failure')
    }
    if (!res.ok) throw await toApiError(res)
    return (await res.json()) as T
  }

  compare(origin: GeoPoint, dest: GeoPoint): Promise<CompareResponse> {
    return this.get<CompareResponse>('/v1/compare', {
      olat: String(origin.lat),
      olon: String(origin.lon),
      dlat: String(dest.lat),
      dlon: String(dest.lon),
    })
  }

  geocode(query: string): Promise<GeocodeResponse> {
    return this.get<GeocodeResponse>('/v1/geocode', { q: query })
  }

  health(): Promise<HealthResponse> {
    return this.get<HealthResponse>('/healthz', {})
  }
}
