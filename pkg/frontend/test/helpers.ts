/** Shared fixtures: canned service responses and a scriptable fetch. */

import type { CompareResponse } from '../src/types.js'

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  })
}

export function errorResponse(status: number, code: string, message: string): Response {
  return jsonResponse({ error: { code, message } }, status)
}

export function compareBody(overrides: Partial<CompareResponse> = {}): CompareResponse {
  return {
    yellow: { service: 'YELLOW', amount_usd: 14.3, basis: 'HISTORICAL_TRIP' },
    uber: { service: 'UBER_X', amount_usd: 12.5, basis: 'RANGE_MEAN' },
    cheaper: 'UBER',
    delta_usd: -1.8,
    matched_trip: {
      pickup: { lat: 40.758, lon: -73.9855 },
      dropoff: { lat: 40.7, lon: -74.0 },
      dest_gap_m: 12.3,
      ring_used: 1,
    },
    warnings: [],
    ...overrides,
  }
}

export interface FetchCall {
  url: string
  resolve: (res: Response) => void
  reject: (err: Error) => void
}

/**
 * A fetch stand-in that records every call and either answers from a
 * scripted queue or leaves the promise dangling for the test to settle.
 */
export class FakeFetch {
  calls: FetchCall[] = []
  private queue: Array<Response | Error> = []

  fn = (url: string): Promise<Response> => {
    return new Promise<Response>((resolve, reject) => {
      this.calls.push({ url, resolve, reject })
      const next = this.queue.shift()
      if (next instanceof Error) reject(next)
      else if (next) resolve(next)
    })
  }

  /** Queue an answer for the next call. */
  respondWith(res: Response | Error): void {
    this.queue.push(res)
  }

  lastUrl(): string {
    if (!this.calls.length) throw new Error('no fetch calls recorded')
    return this.calls[this.calls.length - 1].url
  }
}

/** Let queued microtasks and timers run so async state settles. */
export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0))
}
