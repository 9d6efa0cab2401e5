import { beforeEach, describe, expect, it } from 'vitest'

import { ApiClient } from '../src/api.js'
import { AppController, type UiState } from '../src/state.js'
import { compareBody, errorResponse, FakeFetch, flush, jsonResponse } from './helpers.js'

const TS = { lat: 40.758, lon: -73.9855 }
const JFK = { lat: 40.6413, lon: -73.7781 }

let ff: FakeFetch
let app: AppController
let seen: UiState[]

beforeEach(() => {
  ff = new FakeFetch()
  app = new AppController(new ApiClient('', ff.fn))
  seen = []
  app.subscribe((s) => seen.push(s))
})

function expectInvariants(): void {
  for (const s of seen) {
    expect(s.pending && s.quote !== null).toBe(false)
    if (s.quote) {
      expect(s.origin).not.toBeNull()
      expect(s.dest).not.toBeNull()
    }
  }
}

describe('endpoint picking', () => {
  it('fills origin first, destination second, origin again third', async () => {
    app.pickPoint(TS)
    expect(app.getState().origin).toEqual(TS)
    expect(app.getState().dest).toBeNull()
    expect(ff.calls.length).toBe(0) // nothing to compare yet

    ff.respondWith(jsonResponse(compareBody()))
    app.pickPoint(JFK)
    await flush()
    expect(app.getState().dest).toEqual(JFK)
    expect(ff.calls.length).toBe(1)
    expect(app.getState().quote?.yellow.amount_usd).toBe(14.3)

    ff.respondWith(jsonResponse(compareBody()))
    const elsewhere = { lat: 40.75, lon: -74.0 }
    app.pickPoint(elsewhere)
    expect(app.getState().origin).toEqual(elsewhere)
    expect(app.getState().dest).toEqual(JFK)
    await flush()
    expect(ff.calls.length).toBe(2)
    expectInvariants()
  })

  it('resolves addresses through the geocoder and places the point', async () => {
    ff.respondWith(jsonResponse({ lat: TS.lat, lon: TS.lon, label: 'Times Square, Manhattan' }))
    await app.pickAddress('times square')
    expect(ff.lastUrl()).toBe('/v1/geocode?q=times+square')
    expect(app.getState().origin).toEqual(TS)
    expect(app.getState().error).toBeNull()
  })

  it('leaves everything untouched on a geocode miss', async () => {
    app.pickPoint(TS)
    ff.respondWith(errorResponse(404, 'not-found', "no match for 'atlantis'"))
    await app.pickAddress('atlantis')
    const s = app.getState()
    expect(s.error).toBe('no match for "atlantis"')
    expect(s.origin).toEqual(TS) // still the first pick
    expect(s.dest).toBeNull()
    expectInvariants()
  })

  it('ignores blank address submissions', async () => {
    await app.pickAddress('   ')
    expect(ff.calls.length).toBe(0)
  })
})

describe('comparison requests', () => {
  async function pickBoth(): Promise<void> {
    app.pickPoint(TS)
    app.pickPoint(JFK)
    await flush()
  }

  it('quotes render only after a success, never alongside pending', async () => {
    ff.respondWith(jsonResponse(compareBody()))
    await pickBoth()
    const s = app.getState()
    expect(s.quote?.uber?.amount_usd).toBe(12.5)
    expect(s.pending).toBe(false)
    expect(seen.some((x) => x.pending)).toBe(true) // pending state was visible
    expectInvariants()
  })

  it('maps a 404 to the no-nearby-trips message', async () => {
    ff.respondWith(errorResponse(404, 'no-trips-found', 'nothing within 10 rings'))
    await pickBoth()
    expect(app.getState().quote).toBeNull()
    expect(app.getState().error).toBe('no nearby historical trips')
  })

  it('maps a 502 to the provider-unavailable message', async () => {
    ff.respondWith(errorResponse(502, 'provider-unavailable', 'estimate endpoint 503'))
    await pickBoth()
    expect(app.getState().error).toBe('ride-hail pricing is unavailable right now')
  })

  it('keeps a degraded yellow-only answer as a quote', async () => {
    ff.respondWith(
      jsonResponse(
        compareBody({ uber: null, cheaper: null, delta_usd: null, warnings: ['provider-down'] }),
      ),
    )
    await pickBoth()
    const s = app.getState()
    expect(s.error).toBeNull()
    expect(s.quote?.uber).toBeNull()
    expect(s.quote?.warnings).toContain('provider-down')
  })

  it('drops the stale response when a newer request overtakes it', async () => {
    await pickBoth() // request 1 left dangling
    app.pickPoint({ lat: 40.8, lon: -73.9 }) // request 2, origin moved
    await flush()
    expect(ff.calls.length).toBe(2)

    // the old answer lands late and must not win
    ff.calls[1].resolve(jsonResponse(compareBody({ delta_usd: -9.99 })))
    await flush()
    ff.calls[0].resolve(jsonResponse(compareBody({ delta_usd: -1.8 })))
    await flush()
    expect(app.getState().quote?.delta_usd).toBe(-9.99)
    expectInvariants()
  })

  it('swap reverses the endpoints and re-queries', async () => {
    ff.respondWith(jsonResponse(compareBody()))
    await pickBoth()
    ff.respondWith(jsonResponse(compareBody()))
    app.swap()
    await flush()
    const s = app.getState()
    expect(s.origin).toEqual(JFK)
    expect(s.dest).toEqual(TS)
    expect(ff.lastUrl()).toBe(
      '/v1/compare?olat=40.6413&olon=-73.7781&dlat=40.758&dlon=-73.9855',
    )
    expectInvariants()
  })

  it('reset clears the board and disowns in-flight answers', async () => {
    await pickBoth() // dangling request
    app.reset()
    ff.calls[0].resolve(jsonResponse(compareBody()))
    await flush()
    const s = app.getState()
    expect(s).toEqual({ origin: null, dest: null, quote: null, pending: false, error: null })
    expectInvariants()
  })
})
