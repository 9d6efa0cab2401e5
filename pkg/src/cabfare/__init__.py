"""Yellow-cab fare lookups against a gridded historical trip corpus.

The core flow: ingest trip CSVs into a columnar TripStore, build an
immutable MeshIndex over ~100 m cells, then answer "what did a cab
actually cost for this origin/destination?" next to a ride-hail
estimate. The analytics module reproduces the batch comparisons; the
service module exposes the same queries over HTTP.
"""

from .errors import (CabfareError, CorruptFile, EmptyInput,
                     GeocoderUnavailable, InvalidRange, MalformedResponse,
                     NoTripsFound, OutOfBounds, ProviderUnavailable,
                     VersionMismatch)
from .geo import (NYC_BBOX, BoundingBox, CellId, GeoPoint, MeshSpec, cell_of,
                  haversine, neighbors, project, unproject)
from .store import TripStore, TripStoreBuilder
from .ingest import ColumnSchema, IngestReport, TripRecord, ingest_file, join_fare
from .mesh_index import MeshIndex, build as build_index
from .pricing import (HttpProvider, PriceRange, RateCard, RateCardEmulator,
                      make_provider)
from .fare_query import (Basis, Cheaper, ComparisonResult, FareQuote, Service,
                         compare, find_comparable_trip, uber_quote, yellow_quote)
from .analytics import (Histogram, MajorityRaster, MedianCurve, PairSet,
                        StatsConfig, run_experiment, write_stats_outputs)

__version__ = "0.1.0"

__all__ = [
    "CabfareError", "CorruptFile", "EmptyInput", "GeocoderUnavailable",
    "InvalidRange", "MalformedResponse", "NoTripsFound", "OutOfBounds",
    "ProviderUnavailable", "VersionMismatch",
    "NYC_BBOX", "BoundingBox", "CellId", "GeoPoint", "MeshSpec",
    "cell_of", "haversine", "neighbors", "project", "unproject",
    "TripStore", "TripStoreBuilder",
    "ColumnSchema", "IngestReport", "TripRecord", "ingest_file", "join_fare",
    "MeshIndex", "build_index",
    "HttpProvider", "PriceRange", "RateCard", "RateCardEmulator", "make_provider",
    "Basis", "Cheaper", "ComparisonResult", "FareQuote", "Service",
    "compare", "find_comparable_trip", "uber_quote", "yellow_quote",
    "Histogram", "MajorityRaster", "MedianCurve", "PairSet", "StatsConfig",
    "run_experiment", "write_stats_outputs",
    "__version__",
]
