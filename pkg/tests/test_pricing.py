import json
import math
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cabfare.errors import (InvalidRange, MalformedResponse,
                            ProviderUnavailable)
from cabfare.geo import GeoPoint, haversine
from cabfare.pricing import (HttpProvider, PriceRange, RateCard,
                             RateCardEmulator, emulate_range, make_provider,
                             point_fare)

EXAMPLE_CARD = RateCard(base_usd=2.0, per_mile_usd=1.5, per_min_usd=0.3,
                        min_fare_usd=7.0, booking_fee_usd=2.0,
                        avg_speed_mph=12.0, range_spread=0.0)

ORIGIN = GeoPoint(40.75, -73.99)


def point_miles_north(p, miles):
    # Pure meridian displacement: haversine is exactly R * dphi.
    dphi = miles * 1609.344 / 6_371_000
    return GeoPoint(p.lat + math.degrees(dphi), p.lon)


class TestPriceRange:
    def test_valid_range(self):
        r = PriceRange(11.0, 14.0)
        assert r.min_usd == 11.0 and r.max_usd == 14.0
        assert r.currency == "USD"

    def test_rejects_inverted(self):
        with pytest.raises(InvalidRange):
            PriceRange(14.0, 11.0)

    def test_rejects_nonpositive_min(self):
        with pytest.raises(InvalidRange):
            PriceRange(0.0, 5.0)

    def test_mean(self):
        assert PriceRange(14.40, 17.60).mean_usd == pytest.approx(16.0)


class TestRateCard:
    def test_rejects_negative_money(self):
        with pytest.raises(ValueError):
            RateCard(base_usd=-1, per_mile_usd=1, per_min_usd=0,
                     min_fare_usd=0, booking_fee_usd=0, avg_speed_mph=10,
                     range_spread=0.0)

    def test_rejects_zero_speed(self):
        with pytest.raises(ValueError):
            RateCard(base_usd=1, per_mile_usd=1, per_min_usd=0,
                     min_fare_usd=0, booking_fee_usd=0, avg_speed_mph=0,
                     range_spread=0.0)

    def test_rejects_spread_of_one(self):
        with pytest.raises(ValueError):
            RateCard(base_usd=1, per_mile_usd=1, per_min_usd=0,
                     min_fare_usd=0, booking_fee_usd=0, avg_speed_mph=10,
                     range_spread=1.0)

    def test_dict_round_trip(self):
        again = RateCard.from_dict(EXAMPLE_CARD.to_dict())
        assert again == EXAMPLE_CARD


class TestEmulator:
    def test_zero_distance_hits_min_fare(self):
        r = emulate_range(EXAMPLE_CARD, ORIGIN, ORIGIN)
        assert (r.min_usd, r.max_usd) == (9.00, 9.00)

    def test_four_mile_trip_with_spread(self):
        card = RateCard(base_usd=2.0, per_mile_usd=1.5, per_min_usd=0.3,
                        min_fare_usd=7.0, booking_fee_usd=2.0,
                        avg_speed_mph=12.0, range_spread=0.10)
        dest = point_miles_north(ORIGIN, 4.0)
        r = emulate_range(card, ORIGIN, dest)
        assert (r.min_usd, r.max_usd) == (14.40, 17.60)

    def test_mean_reproduces_point_fare_when_spread_zero(self):
        dest = point_miles_north(ORIGIN, 2.5)
        r = emulate_range(EXAMPLE_CARD, ORIGIN, dest)
        d = haversine(ORIGIN, dest) / 1609.344
        assert r.mean_usd == pytest.approx(
            round(point_fare(EXAMPLE_CARD, d) * 100) / 100, abs=1e-9)

    def test_estimate_arrays_matches_scalar(self):
        import numpy as np
        card = RateCard(base_usd=2.0, per_mile_usd=1.75, per_min_usd=0.35,
                        min_fare_usd=7.0, booking_fee_usd=2.0,
                        avg_speed_mph=12.0, range_spread=0.1)
        emu = RateCardEmulator(card)
        rng = np.random.default_rng(0)
        olat = rng.uniform(40.5, 40.9, 200)
        olon = rng.uniform(-74.2, -73.7, 200)
        dlat = rng.uniform(40.5, 40.9, 200)
        dlon = rng.uniform(-74.2, -73.7, 200)
        lo, hi = emu.estimate_arrays(olat, olon, dlat, dlon)
        for i in range(0, 200, 17):
            r = emu.estimate(GeoPoint(olat[i], olon[i]), GeoPoint(dlat[i], dlon[i]))
            assert lo[i] == r.min_usd and hi[i] == r.max_usd

    monetary = st.floats(min_value=0.0, max_value=50.0)

    @settings(max_examples=150)
    @given(monetary, monetary, monetary, monetary, monetary,
           st.floats(min_value=1.0, max_value=60.0),
           st.floats(min_value=0.0, max_value=0.9),
           st.floats(min_value=0.0, max_value=30.0),
           st.floats(min_value=0.0, max_value=30.0))
    def test_point_fare_monotone_in_distance(self, base, per_mile, per_min,
                                             min_fare, booking, speed, spread,
                                             d1, d2):
        card = RateCard(base_usd=base, per_mile_usd=per_mile,
                        per_min_usd=per_min, min_fare_usd=min_fare,
                        booking_fee_usd=booking, avg_speed_mph=speed,
                        range_spread=spread)
        lo, hi = sorted((d1, d2))
        assert point_fare(card, lo) <= point_fare(card, hi) + 1e-12

    @settings(max_examples=100)
    @given(st.floats(min_value=40.50, max_value=40.91),
           st.floats(min_value=-74.26, max_value=-73.69),
           st.floats(min_value=40.50, max_value=40.91),
           st.floats(min_value=-74.26, max_value=-73.69))
    def test_estimate_symmetric_in_endpoints(self, alat, alon, blat, blon):
        a, b = GeoPoint(alat, alon), GeoPoint(blat, blon)
        assert emulate_range(EXAMPLE_CARD, a, b) == emulate_range(EXAMPLE_CARD, b, a)


class _StubHandler(BaseHTTPRequestHandler):
    # Class-level knobs set per test.
    response_body: bytes = b"{}"
    status: int = 200
    delay: float = 0.0
    seen_headers: list = []

    def do_GET(self):
        if self.delay:
            import time
            time.sleep(self.delay)
        type(self).seen_headers.append(dict(self.headers))
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(self.response_body)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.seen_headers = []
    _StubHandler.status = 200
    _StubHandler.delay = 0.0
    yield f"http://127.0.0.1:{server.server_port}/estimate"
    server.shutdown()
    server.server_close()


DEST = GeoPoint(40.76, -73.97)


class TestHttpProvider:
    def test_parses_stub_response(self, stub_server):
        _StubHandler.response_body = json.dumps(
            {"low_estimate": 11, "high_estimate": 14,
             "currency_code": "USD"}).encode()
        provider = HttpProvider(stub_server, timeout_ms=2000)
        r = provider.estimate(ORIGIN, DEST)
        assert (r.min_usd, r.max_usd) == (11.0, 14.0)

    def test_sends_bearer_token_from_env(self, stub_server):
        _StubHandler.response_body = json.dumps(
            {"low_estimate": 5, "high_estimate": 6}).encode()
        os.environ["TEST_PROVIDER_TOKEN"] = "sekrit"
        try:
            provider = HttpProvider(stub_server, token_env_var="TEST_PROVIDER_TOKEN")
            provider.estimate(ORIGIN, DEST)
        finally:
            del os.environ["TEST_PROVIDER_TOKEN"]
        assert _StubHandler.seen_headers[-1].get("Authorization") == "Bearer sekrit"

    def test_503_is_provider_unavailable(self, stub_server):
        _StubHandler.status = 503
        provider = HttpProvider(stub_server)
        with pytest.raises(ProviderUnavailable):
            provider.estimate(ORIGIN, DEST)

    def test_inverted_range_raises(self, stub_server):
        _StubHandler.response_body = json.dumps(
            {"low_estimate": 14, "high_estimate": 11}).encode()
        provider = HttpProvider(stub_server)
        with pytest.raises(InvalidRange):
            provider.estimate(ORIGIN, DEST)

    def test_unparseable_body_is_malformed(self, stub_server):
        _StubHandler.response_body = b"not json at all"
        provider = HttpProvider(stub_server)
        with pytest.raises(MalformedResponse):
            provider.estimate(ORIGIN, DEST)

    def test_missing_fields_are_malformed(self, stub_server):
        _StubHandler.response_body = json.dumps({"price": 12}).encode()
        provider = HttpProvider(stub_server)
        with pytest.raises(MalformedResponse):
            provider.estimate(ORIGIN, DEST)

    def test_timeout_is_provider_unavailable(self, stub_server):
        _StubHandler.delay = 0.5
        _StubHandler.response_body = json.dumps(
            {"low_estimate": 5, "high_estimate": 6}).encode()
        provider = HttpProvider(stub_server, timeout_ms=50)
        with pytest.raises(ProviderUnavailable):
            provider.estimate(ORIGIN, DEST)

    def test_connection_refused_is_provider_unavailable(self):
        provider = HttpProvider("http://127.0.0.1:9", timeout_ms=200)
        with pytest.raises(ProviderUnavailable):
            provider.estimate(ORIGIN, DEST)

    @settings(max_examples=40, deadline=None,
              suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(st.one_of(
        st.dictionaries(st.sampled_from(["low_estimate", "high_estimate",
                                         "currency_code", "noise"]),
                        st.one_of(st.floats(allow_nan=True),
                                  st.text(max_size=6), st.none())),
        st.text(max_size=20)))
    def test_fuzzed_bodies_never_yield_invalid_range(self, stub_server, body):
        raw = json.dumps(body).encode() if isinstance(body, dict) else body.encode()
        _StubHandler.response_body = raw
        provider = HttpProvider(stub_server)
        try:
            r = provider.estimate(ORIGIN, DEST)
        except (ProviderUnavailable, MalformedResponse, InvalidRange):
            return
        assert 0 < r.min_usd <= r.max_usd


class TestMakeProvider:
    def test_emulator_config(self):
        p = make_provider({"kind": "emulator",
                           "rate_card": EXAMPLE_CARD.to_dict()})
        assert isinstance(p, RateCardEmulator)
        assert p.card == EXAMPLE_CARD

    def test_http_config(self):
        p = make_provider({"kind": "http", "url": "http://x/estimate",
                           "timeout_ms": 100})
        assert isinstance(p, HttpProvider)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            make_provider({"kind": "psychic"})
