import numpy as np
import pytest

from cabfare.geo import NYC_BBOX, BoundingBox, GeoPoint, MeshSpec
from cabfare.pricing import RateCard, RateCardEmulator
from cabfare.store import TripStore

#: Small box around lower Manhattan used by hand-built fixtures; its
#: grid is tiny enough to reason about cell membership by hand.
FIXTURE_BBOX = BoundingBox(GeoPoint(40.70, -74.02), GeoPoint(40.76, -73.95))


@pytest.fixture
def fixture_bbox():
    return FIXTURE_BBOX


@pytest.fixture
def fixture_spec(fixture_bbox):
    return MeshSpec(bbox=fixture_bbox, cell_size=100.0)


@pytest.fixture
def nyc_spec():
    return MeshSpec(bbox=NYC_BBOX, cell_size=100.0)


@pytest.fixture
def rate_card():
    return RateCard(base_usd=2.0, per_mile_usd=1.75, per_min_usd=0.35,
                    min_fare_usd=7.0, booking_fee_usd=2.0,
                    avg_speed_mph=12.0, range_spread=0.1)


@pytest.fixture
def emulator(rate_card):
    return RateCardEmulator(rate_card)


def store_from_rows(rows):
    """rows: (plat, plon, dlat, dlon, fare_usd) tuples -> TripStore."""
    a = np.array(rows, dtype=np.float64)
    return TripStore.from_degrees(a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4])
