"""Command line entry points: ingest, build-index, query, stats, serve.

Exit codes are part of the contract: 0 success, 1 usage error, 2 data
error, 3 I/O error. Data goes to stdout or files; progress and errors
go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analytics, fare_query, ingest, mesh_index, service
from .errors import CabfareError
from .geo import NYC_BBOX, BoundingBox, GeoPoint, MeshSpec
from .pricing import make_provider
from .store import TripStore

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract reserves 1 for usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_bbox(text: str) -> BoundingBox:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError("bbox must be 'sw_lat,sw_lon,ne_lat,ne_lon'")
    return BoundingBox(GeoPoint(parts[0], parts[1]), GeoPoint(parts[2], parts[3]))


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _cmd_ingest(args) -> int:
    schema = (ingest.ColumnSchema.from_json_file(args.schema)
              if args.schema else ingest.ColumnSchema.identity())
    bbox = _parse_bbox(args.bbox) if args.bbox else NYC_BBOX
    if args.fares:
        if not args.join_key:
            raise ValueError("--fares requires --join-key")
        records, report = ingest.join_fare_files(args.input, args.fares,
                                                 args.join_key, schema, bbox)
    else:
        records, report = ingest.ingest_file(args.input, schema, bbox)
    trip_store = ingest.records_to_store(records)
    trip_store.save(args.out)
    _log(f"ingested {report.rows_kept} of {report.rows_read} rows -> {args.out}")
    if args.report:
        with open(args.report, "w") as f:
            f.write(report.to_json())
    print(report.to_json())
    return EXIT_OK


def _cmd_build_index(args) -> int:
    trip_store = TripStore.load(args.records)
    bbox = _parse_bbox(args.bbox) if args.bbox else NYC_BBOX
    spec = MeshSpec(bbox=bbox, cell_size=args.cell_size)
    built_at = args.built_at
    if built_at is None and "SOURCE_DATE_EPOCH" in os.environ:
        built_at = int(os.environ["SOURCE_DATE_EPOCH"])
    index = mesh_index.build(trip_store, spec, built_at=built_at)
    mesh_index.save(index, args.out)
    _log(f"indexed {len(index)} trips over {index.n_cells} occupied cells "
         f"({spec.nx}x{spec.ny} grid) -> {args.out}")
    return EXIT_OK


def _cmd_query(args) -> int:
    index = mesh_index.load(args.index)
    with open(args.provider_config) as f:
        provider = make_provider(json.load(f))
    result = fare_query.compare(index, provider,
                                GeoPoint(args.olat, args.olon),
                                GeoPoint(args.dlat, args.dlon),
                                max_ring=args.max_ring)
    out = {
        "yellow_usd": round(result.yellow.amount_usd, 2),
        "uber_usd": round(result.uber.amount_usd, 2),
        "cheaper": result.cheaper.value,
        "delta_usd": round(result.delta_usd, 2),
        "matched_trip": result.yellow.matched_trip,
        "ring_used": result.yellow.origin_ring,
        "dest_gap_m": round(result.yellow.dest_gap_m, 1),
    }
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def _cmd_stats(args) -> int:
    index = mesh_index.load(args.index)
    with open(args.provider_config) as f:
        provider = make_provider(json.load(f))
    cfg = analytics.StatsConfig(
        sample=args.sample, seed=args.seed, bin_width_usd=args.bin_width,
        min_support=args.min_support, raster_cell_size=args.raster_cell_size,
        trace_sample=args.trace_sample, threads=args.threads)
    summary = analytics.write_stats_outputs(index.store, provider, index.spec,
                                            args.out_dir, cfg)
    _log(f"stats over {summary['counts']['pairs']} pairs -> {args.out_dir}")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _cmd_serve(args) -> int:
    cfg = service.ServiceConfig.from_file(args.config)
    service.serve(cfg)
    return EXIT_OK


def build_parser() -> _Parser:
    p = _Parser(prog="cabfare",
                description="Historical yellow-cab fares vs ride-hail quotes.")
    p.add_argument("--threads", type=int, default=1,
                   help="worker thread cap for batch commands")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="CSV -> validated binary trip store")
    sp.add_argument("--input", required=True)
    sp.add_argument("--schema", help="JSON column mapping (default: canonical headers)")
    sp.add_argument("--bbox", help="sw_lat,sw_lon,ne_lat,ne_lon (default: NYC)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--fares", help="separate fare CSV to join")
    sp.add_argument("--join-key", help="column joining trip and fare files")
    sp.add_argument("--report", help="also write the ingest report JSON here")
    sp.set_defaults(fn=_cmd_ingest)

    sp = sub.add_parser("build-index", help="trip store -> mesh index")
    sp.add_argument("--records", required=True)
    sp.add_argument("--cell-size", type=float, default=100.0)
    sp.add_argument("--bbox", help="sw_lat,sw_lon,ne_lat,ne_lon (default: NYC)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--built-at", type=int, default=None,
                    help="embed this epoch timestamp (SOURCE_DATE_EPOCH also works)")
    sp.set_defaults(fn=_cmd_build_index)

    sp = sub.add_parser("query", help="one origin/destination comparison")
    sp.add_argument("--index", required=True)
    sp.add_argument("--olat", type=float, required=True)
    sp.add_argument("--olon", type=float, required=True)
    sp.add_argument("--dlat", type=float, required=True)
    sp.add_argument("--dlon", type=float, required=True)
    sp.add_argument("--provider-config", required=True)
    sp.add_argument("--max-ring", type=int, default=fare_query.DEFAULT_MAX_RING)
    sp.set_defaults(fn=_cmd_query)

    sp = sub.add_parser("stats", help="batch statistics and figure data")
    sp.add_argument("--index", required=True)
    sp.add_argument("--provider-config", required=True)
    sp.add_argument("--sample", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--bin-width", type=float, default=1.0)
    sp.add_argument("--min-support", type=int, default=1)
    sp.add_argument("--raster-cell-size", type=float, default=500.0)
    sp.add_argument("--trace-sample", type=float, default=0.01)
    sp.set_defaults(fn=_cmd_stats)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--config", required=True)
    sp.set_defaults(fn=_cmd_serve)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except ValueError as e:
        _log(f"error: {e}")
        return EXIT_USAGE
    except CabfareError as e:
        _log(f"error: {type(e).__name__}: {e}")
        return EXIT_DATA
    except OSError as e:
        _log(f"error: {e}")
        return EXIT_IO


def main() -> None:
    raise SystemExit(run())
