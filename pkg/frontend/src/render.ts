/**
 * HTML builders for the quote card and status line.
 *
 * Pure string-in, string-out functions; every number shown comes from a
 * service response field, formatting aside. Anything that originated as
 * free text (addresses, error messages) is escaped.
 */

import type { CompareResponse, QuoteSide } from './types.js'
import type { UiState } from './state.js'

export function esc(s: string): string {
  return s
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
}

export function money(usd: number): string {
  return `$${usd.toFixed(2)}`
}

function side(q: QuoteSide, label: string, highlighted: boolean): string {
  const cls = highlighted ? 'side cheaper' : 'side'
  const tag = highlighted ? '<span class="badge">cheaper</span>' : ''
  return (
    `<div class="${cls}" data-side="${label.toLowerCase()}">` +
    `<h3>${esc(label)}</h3>` +
    `<p class="amount">${money(q.amount_usd)}</p>${tag}</div>`
  )
}

function warningsLine(quote: CompareResponse): string {
  const notes: string[] = []
  if (quote.warnings.includes('large-dest-gap')) {
    notes.push(
      `closest recorded dropoff is ${Math.round(quote.matched_trip.dest_gap_m)} m from your destination`,
    )
  }
  if (quote.warnings.includes('provider-down')) {
    notes.push('ride-hail pricing is down, showing the cab fare only')
  }
  return notes.length ? `<p class="warnings">${notes.map(esc).join('; ')}</p>` : ''
}

export function renderQuoteCard(quote: CompareResponse): string {
  const yellowSide = side(quote.yellow, 'Yellow cab', quote.cheaper === 'YELLOW')
  const uberSide = quote.uber
    ? side(quote.uber, 'UberX', quote.cheaper === 'UBER')
    : '<div class="side missing" data-side="uberx"><h3>UberX</h3><p class="amount">&ndash;</p></div>'
  const delta =
    quote.delta_usd === null
      ? ''
      : quote.cheaper === 'TIE'
        ? '<p class="delta">same price</p>'
        : `<p class="delta">difference ${money(Math.abs(quote.delta_usd))}</p>`
  return `<div class="quote-card">${yellowSide}${uberSide}${delta}${warningsLine(quote)}</div>`
}

export function renderStatus(state: UiState): string {
  if (state.error) return `<p class="error">${esc(state.error)}</p>`
  if (state.pending) return '<p class="pending">comparing&hellip;</p>'
  if (!state.origin) return '<p class="hint">click the map or search an address to set the pickup</p>'
  if (!state.dest) return '<p class="hint">now set the destination</p>'
  return ''
}

export function render(state: UiState): string {
  const card = state.quote ? renderQuoteCard(state.quote) : ''
  return renderStatus(state) + card
}
