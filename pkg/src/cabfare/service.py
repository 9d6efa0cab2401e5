"""HTTP facade: compare quotes, geocode addresses, report health.

Endpoints (JSON in and out; see docs/openapi.yaml):

    GET /v1/compare?olat&olon&dlat&dlon
    GET /v1/geocode?q=<address>
    GET /healthz

The app is stateless across requests over a shared immutable index, so
identical requests produce byte-identical bodies. Provider failures in
degraded mode yield a yellow-only response with a "provider-down"
warning; a ride-hail number is never fabricated.
"""

from __future__ import annotations

import asyncio
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from starlette.applications import Starlette
from starlette.middleware import Middleware
from starlette.middleware.cors import CORSMiddleware
from starlette.requests import Request
from starlette.responses import JSONResponse
from starlette.routing import Route

from . import fare_query, mesh_index
from .errors import (GeocoderUnavailable, InvalidRange, MalformedResponse,
                     NoTripsFound, ProviderUnavailable)
from .geo import GeoPoint
from .pricing import RateCardEmulator, make_provider

#: Bundled address table for the stub geocoder.
STUB_ADDRESSES: dict[str, tuple[float, float, str]] = {
    "times square": (40.7580, -73.9855, "Times Square, Manhattan"),
    "jfk": (40.6413, -73.7781, "JFK Airport, Queens"),
    "jfk airport": (40.6413, -73.7781, "JFK Airport, Queens"),
    "empire state building": (40.7484, -73.9857, "Empire State Building, Manhattan"),
    "grand central": (40.7527, -73.9772, "Grand Central Terminal, Manhattan"),
    "wall street": (40.7074, -74.0113, "Wall Street, Manhattan"),
    "brooklyn bridge": (40.7061, -73.9969, "Brooklyn Bridge"),
    "columbia university": (40.8075, -73.9626, "Columbia University, Manhattan"),
    "laguardia": (40.7769, -73.8740, "LaGuardia Airport, Queens"),
}


class StubGeocoder:
    """Resolves addresses from a fixed table; misses return None."""

    def __init__(self, table: dict[str, tuple[float, float, str]] | None = None):
        self.table = dict(STUB_ADDRESSES)
        if table:
            self.table.update({k.strip().lower(): v for k, v in table.items()})

    def resolve(self, query: str) -> tuple[float, float, str] | None:
        return self.table.get(query.strip().lower())


class HttpGeocoder:
    """Forwards to an external geocoding endpoint returning {lat, lon, label}."""

    def __init__(self, url: str, timeout_ms: int = 2000, client=None):
        import httpx

        self.url = url
        self._client = client or httpx.Client(timeout=timeout_ms / 1000.0)

    def resolve(self, query: str) -> tuple[float, float, str] | None:
        import httpx

        try:
            resp = self._client.get(self.url, params={"q": query})
        except httpx.HTTPError as e:
            raise GeocoderUnavailable(f"geocoder request failed: {e}") from e
        if resp.status_code == 404:
            return None
        if resp.status_code != 200:
            raise GeocoderUnavailable(f"geocoder returned {resp.status_code}")
        try:
            body = resp.json()
            return float(body["lat"]), float(body["lon"]), str(body.get("label", query))
        except (ValueError, KeyError, TypeError) as e:
            raise GeocoderUnavailable(f"unparseable geocoder body: {e}") from e


def make_geocoder(config: dict):
    kind = config.get("kind", "stub")
    if kind == "stub":
        table = {
            name: (float(e["lat"]), float(e["lon"]), str(e.get("label", name)))
            for name, e in config.get("table", {}).items()
        }
        return StubGeocoder(table)
    if kind == "http":
        return HttpGeocoder(config["url"], int(config.get("timeout_ms", 2000)))
    raise ValueError(f"unknown geocoder kind {kind!r}")


@dataclass
class ServiceConfig:
    """Runtime configuration, loadable from a JSON (or TOML on 3.11+) file."""

    index_path: str = ""
    host: str = "127.0.0.1"
    port: int = 8000
    provider: dict = field(default_factory=lambda: {
        "kind": "emulator",
        # Illustrative placeholder numbers; set a real card per deployment.
        "rate_card": {"base_usd": 2.0, "per_mile_usd": 1.75, "per_min_usd": 0.35,
                      "min_fare_usd": 7.0, "booking_fee_usd": 2.0,
                      "avg_speed_mph": 12.0, "range_spread": 0.1},
    })
    geocoder: dict = field(default_factory=lambda: {"kind": "stub"})
    max_ring: int = 10
    large_dest_gap_m: float = 250.0
    degraded_on_provider_failure: bool = False
    cors_origins: list[str] = field(default_factory=lambda: ["*"])
    max_inflight: int = 256

    def validate(self) -> None:
        if self.max_ring < 1:
            raise ValueError("max_ring must be >= 1")
        if self.large_dest_gap_m <= 0 or self.max_inflight <= 0 or self.port <= 0:
            raise ValueError("limits must be positive")
        if self.index_path and not Path(self.index_path).exists():
            raise FileNotFoundError(f"index file not found: {self.index_path}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib
            except ImportError as e:
                raise ValueError("TOML configs need Python 3.11+; use JSON") from e
            with open(path, "rb") as f:
                raw = tomllib.load(f)
        else:
            with open(path) as f:
                raw = json.load(f)
        known = {f_.name for f_ in cls.__dataclass_fields__.values()}
        unknown = set(raw) - known - {"mesh"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in raw.items() if k in known})
        cfg.validate()
        return cfg


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"error": {"code": code, "message": message}},
                        status_code=status)


def _quote_dict(q: fare_query.FareQuote) -> dict:
    d = {"service": q.service.value, "amount_usd": round(q.amount_usd, 2),
         "basis": q.basis.value}
    if q.basis is fare_query.Basis.HISTORICAL_TRIP:
        d["matched_trip"] = q.matched_trip
        d["origin_ring"] = q.origin_ring
        d["dest_gap_m"] = round(q.dest_gap_m, 1)
    return d


async def _compare(request: Request) -> JSONResponse:
    state = request.app.state
    if state.index is None:
        return _error(503, "loading", "index not loaded yet")
    params = request.query_params
    try:
        olat = float(params["olat"])
        olon = float(params["olon"])
        dlat = float(params["dlat"])
        dlon = float(params["dlon"])
    except (KeyError, ValueError):
        return _error(400, "malformed", "need numeric olat, olon, dlat, dlon")
    if not all(map(math.isfinite, (olat, olon, dlat, dlon))):
        return _error(400, "malformed", "coordinates must be finite")
    bbox = state.index.spec.bbox
    if not (bbox.contains(olat, olon) and bbox.contains(dlat, dlon)):
        return _error(400, "out-of-bbox", "coordinates outside the service region")

    origin = GeoPoint(olat, olon)
    dest = GeoPoint(dlat, dlon)

    # Slow providers overlap with the index lookup; the emulator is
    # cheaper to call inline than to schedule.
    provider_future = None
    if not isinstance(state.provider, RateCardEmulator):
        from starlette.concurrency import run_in_threadpool
        provider_future = asyncio.ensure_future(
            run_in_threadpool(state.provider.estimate, origin, dest))

    try:
        yellow = fare_query.yellow_quote(state.index, origin, dest,
                                         state.config.max_ring)
    except NoTripsFound as e:
        if provider_future is not None:
            provider_future.cancel()
        return _error(404, "no-trips-found", str(e))

    warnings = []
    if yellow.dest_gap_m > state.config.large_dest_gap_m:
        warnings.append("large-dest-gap")

    try:
        if provider_future is not None:
            price_range = await provider_future
            uber = fare_query.FareQuote(
                service=fare_query.Service.UBER_X,
                amount_usd=price_range.mean_usd,
                basis=fare_query.Basis.RANGE_MEAN)
        else:
            uber = fare_query.uber_quote(state.provider, origin, dest)
    except (ProviderUnavailable, MalformedResponse, InvalidRange) as e:
        if not state.config.degraded_on_provider_failure:
            return _error(502, "provider-unavailable", str(e))
        uber = None
        warnings.append("provider-down")

    body = {
        "yellow": _quote_dict(yellow),
        "uber": None if uber is None else _quote_dict(uber),
        "cheaper": None,
        "delta_usd": None,
        "matched_trip": {
            "pickup": _trip_point(state.index, yellow.matched_trip, "pickup"),
            "dropoff": _trip_point(state.index, yellow.matched_trip, "dropoff"),
            "dest_gap_m": round(yellow.dest_gap_m, 1),
            "ring_used": yellow.origin_ring,
        },
        "warnings": warnings,
    }
    if uber is not None:
        result = fare_query.compare_quotes(yellow, uber)
        body["cheaper"] = result.cheaper.value
        body["delta_usd"] = round(result.delta_usd, 2)
    return JSONResponse(body)


def _trip_point(index, ordinal: int, end: str) -> dict:
    store = index.store
    if end == "pickup":
        return {"lat": int(store.pickup_lat_e6[ordinal]) * 1e-6,
                "lon": int(store.pickup_lon_e6[ordinal]) * 1e-6}
    return {"lat": int(store.dropoff_lat_e6[ordinal]) * 1e-6,
            "lon": int(store.dropoff_lon_e6[ordinal]) * 1e-6}


async def _geocode(request: Request) -> JSONResponse:
    state = request.app.state
    query = request.query_params.get("q", "").strip()
    if not query:
        return _error(400, "malformed", "q must be a non-empty address")
    from starlette.concurrency import run_in_threadpool
    try:
        if isinstance(state.geocoder, StubGeocoder):
            hit = state.geocoder.resolve(query)
        else:
            hit = await run_in_threadpool(state.geocoder.resolve, query)
    except GeocoderUnavailable as e:
        return _error(502, "geocoder-unavailable", str(e))
    if hit is None:
        return _error(404, "not-found", f"no match for {query!r}")
    lat, lon, label = hit
    return JSONResponse({"lat": lat, "lon": lon, "label": label})


async def _healthz(request: Request) -> JSONResponse:
    index = request.app.state.index
    if index is None:
        return JSONResponse({"status": "loading"}, status_code=503)
    return JSONResponse({"status": "ok", "index_trips": len(index),
                         "built_at": index.built_at})


class _InflightLimit:
    """Bounds concurrently executing requests; excess waits, never 5xx."""

    def __init__(self, app, limit: int):
        self.app = app
        self.semaphore = asyncio.Semaphore(limit)

    async def __call__(self, scope, receive, send):
        if scope["type"] != "http":
            await self.app(scope, receive, send)
            return
        async with self.semaphore:
            await self.app(scope, receive, send)


def create_app(config: ServiceConfig, *, index=None, provider=None,
               geocoder=None, defer_load: bool = False) -> Starlette:
    """Assemble the ASGI app; components may be injected for tests."""
    middleware = [Middleware(CORSMiddleware, allow_origins=config.cors_origins,
                             allow_methods=["GET"])]
    app = Starlette(routes=[
        Route("/v1/compare", _compare),
        Route("/v1/geocode", _geocode),
        Route("/healthz", _healthz),
    ], middleware=middleware)
    app.add_middleware(_InflightLimit, limit=config.max_inflight)

    app.state.config = config
    app.state.index = index
    app.state.provider = provider if provider is not None else make_provider(config.provider)
    app.state.geocoder = geocoder if geocoder is not None else make_geocoder(config.geocoder)

    def load_index() -> None:
        if app.state.index is None:
            app.state.index = mesh_index.load(config.index_path)

    app.state.load_index = load_index
    if index is None and not defer_load and config.index_path:
        load_index()
    return app


def serve(config: ServiceConfig) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
