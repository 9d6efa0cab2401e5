/**
 * UI state machine, kept free of DOM concerns so it can be tested alone.
 *
 * Invariants: a quote is shown only while both endpoints are set and the
 * most recent request for them succeeded; `pending` and `quote` are never
 * set together. Only one compare request matters at a time; responses to
 * superseded requests are dropped by sequence number.
 */

import { ApiClient, ApiError } from './api.js'
import type { CompareResponse, GeoPoint } from './types.js'

export interface UiState {
  origin: GeoPoint | null
  dest: GeoPoint | null
  quote: CompareResponse | null
  pending: boolean
  error: string | null
}

export type Listener = (state: UiState) => void

function messageFor(e: unknown): string {
  if (e instanceof ApiError) {
    if (e.code === 'no-trips-found') return 'no nearby historical trips'
    if (e.code === 'provider-unavailable') return 'ride-hail pricing is unavailable right now'
    if (e.code === 'out-of-bbox') return 'point is outside the service region'
    if (e.status === 0) return 'cannot reach the comparison service'
    return e.message
  }
  return 'unexpected error'
}

export class AppController {
  private state: UiState = { origin: null, dest: null, quote: null, pending: false, error: null }
  private nextSlot: 'origin' | 'dest' = 'origin'
  private requestSeq = 0
  private listeners: Listener[] = []

  constructor(private readonly api: ApiClient) {}

  getState(): Readonly<UiState> {
    return this.state
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn)
  }

  private setState(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch }
    for (const fn of this.listeners) fn(this.state)
  }

  /**
   * Place the next endpoint: clicks fill origin, then destination, then
   * overwrite origin again, and so on. Any previous quote is stale the
   * moment an endpoint moves. Once both ends are set a comparison fires.
   */
  pickPoint(p: GeoPoint): void {
    const slot = this.nextSlot
    this.nextSlot = slot === 'origin' ? 'dest' : 'origin'
    if (slot === 'origin') this.setState({ origin: p, quote: null, error: null })
    else this.setState({ dest: p, quote: null, error: null })
    if (this.state.origin && this.state.dest) void this.requestCompare()
  }

  /** Address mode: resolve through the service, then place like a click. */
  async pickAddress(query: string): Promise<void> {
    const q = query.trim()
    if (!q) return
    try {
      const hit = await this.api.geocode(q)
      this.pickPoint({ lat: hit.lat, lon: hit.lon })
    } catch (e) {
      // a miss leaves every marker and quote exactly as it was
      const msg = e instanceof ApiError && e.status === 404 ? `no match for "${q}"` : messageFor(e)
      this.setState({ error: msg })
    }
  }

  /** Swap origin and destination and price the reversed ride. */
  swap(): void {
    const { origin, dest } = this.state
    this.setState({ origin: dest, dest: origin, quote: null })
    if (this.state.origin && this.state.dest) void this.requestCompare()
  }

  reset(): void {
    this.requestSeq++
    this.nextSlot = 'origin'
    this.setState({ origin: null, dest: null, quote: null, pending: false, error: null })
  }

  async requestCompare(): Promise<void> {
    const { origin, dest } = this.state
    if (!origin || !dest) return
    const id = ++this.requestSeq
    this.setState({ pending: true, quote: null, error: null })
    try {
      const quote = await this.api.compare(origin, dest)
      if (id !== this.requestSeq) return // superseded while in flight
      this.setState({ pending: false, quote })
    } catch (e) {
      if (id !== this.requestSeq) return
      this.setState({ pending: false, quote: null, error: messageFor(e) })
    }
  }
}
