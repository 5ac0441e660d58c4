"""Command-line interface: calibrate, classify, evaluate, cost, serve.

Thin client over :mod:`earlyfcm.workflows`; all numerical work lives in the
core modules.  Machine-readable results go to standard output and files,
progress logging to the error stream.  Exit codes are a stable contract:
0 success, 2 usage/configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .calibration import load_model, save_model, threshold_for
from .cost import (
    PriceSheet,
    build_cost_report,
    cost_report_document,
    extrapolate_savings,
    format_cost_report,
    round_cents,
)
from .earlystop import (
    load_report,
    write_accuracy_table,
    write_report_json,
    write_time_table,
)
from .errors import (
    ConfigurationError,
    EarlyFcmError,
    IngestionError,
    InputError,
    ParseError,
    SchemaError,
)
from .fcm import FcmConfig, VirtualClock
from .imagery import (
    load_corpus_dir,
    load_image_features,
    write_label_image,
    write_points_csv,
)
from .lof import LofConfig
from .svr import SvrHyperparams
from .workflows import classify_record, cost_from_report, run_calibration, run_evaluation

__all__ = ["main", "build_parser"]

log = logging.getLogger(__name__)

#: Exceptions that mean the user asked for something invalid (exit 2) rather
#: than the computation failing (exit 3).
_USAGE_ERRORS = (ConfigurationError, InputError, ParseError, SchemaError, IngestionError)


def _parse_accuracies(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse accuracy list '{text}': {exc}") from None
    if not values:
        raise InputError(f"accuracy list '{text}' is empty")
    for v in values:
        if not 0.0 < v < 1.0:
            raise InputError(f"accuracies must lie in (0, 1), got {v}")
    return values


def _parse_gamma(text: str):
    if text == "scale":
        return "scale"
    try:
        return float(text)
    except ValueError:
        raise InputError(f"gamma must be 'scale' or a positive number, got '{text}'") from None


def _timer_factory(args):
    return VirtualClock if args.timer == "virtual" else None


def _jobs(args) -> int:
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get("EARLYFCM_JOBS")
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError:
        raise InputError(f"EARLYFCM_JOBS must be an integer, got '{env}'") from None


def _model_path(args) -> str:
    if args.model:
        return args.model
    env = os.environ.get("EARLYFCM_MODEL")
    if env:
        return env
    raise InputError("no model given: pass --model PATH or set EARLYFCM_MODEL")


def _fcm_config(args) -> FcmConfig:
    return FcmConfig(
        n_clusters=args.clusters,
        fuzzifier=args.fuzzifier,
        epsilon=args.epsilon,
        max_iterations=args.max_iterations,
        seed=args.seed,
    )


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--jobs", type=int, default=None,
                     help="corpus-level parallelism (default: EARLYFCM_JOBS or 1; "
                          "1 is fully serial and bit-reproducible)")
    sub.add_argument("--timer", choices=("wall", "virtual"), default="wall",
                     help="per-iteration clock: wall time, or a deterministic "
                          "virtual clock ticking 1s per iteration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="earlyfcm",
        description="Early-stopped fuzzy c-means image classification: "
                    "calibrate change-rate thresholds, classify with them, "
                    "measure accuracy/time trade-offs, and price the savings.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info logging, -vv for debug (stderr)")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    cal = subs.add_parser("calibrate", help="fit a stop-threshold model from a corpus")
    cal.add_argument("--input", required=True, help="directory of PNG/PPM/CSV inputs")
    cal.add_argument("--out", required=True, help="output model JSON path")
    cal.add_argument("--accuracies", default=None,
                     help="comma-separated grid, default 0.85,0.90,0.95,0.99,0.999")
    cal.add_argument("--seed", type=int, default=0, help="membership-init seed")
    cal.add_argument("--clusters", type=int, default=6)
    cal.add_argument("--fuzzifier", type=float, default=2.0)
    cal.add_argument("--epsilon", type=float, default=0.005,
                     help="membership-change convergence tolerance")
    cal.add_argument("--max-iterations", type=int, default=300)
    cal.add_argument("--lof-neighbors", type=int, default=40)
    cal.add_argument("--outliers-fraction", type=float, default=0.03)
    cal.add_argument("--svr-c", type=float, default=1.0)
    cal.add_argument("--svr-epsilon", type=float, default=0.01)
    cal.add_argument("--svr-gamma", default="scale")
    cal.add_argument("--svr-tolerance", type=float, default=1e-3)
    cal.add_argument("--svr-max-passes", type=int, default=200)
    cal.add_argument("--header", action="store_true",
                     help="skip the first row of CSV inputs")
    cal.add_argument("--points-csv", default=None,
                     help="also export harvested calibration points as CSV")
    _add_common(cal)
    cal.set_defaults(func=cmd_calibrate)

    cla = subs.add_parser("classify", help="cluster images, stopping early per the model")
    cla.add_argument("--model", default=None, help="model JSON (or EARLYFCM_MODEL)")
    cla.add_argument("--accuracy", type=float, required=True,
                     help="desired accuracy in (0, 1)")
    cla.add_argument("--image", action="append", required=True,
                     help="input image; repeat for several")
    cla.add_argument("--out", default=None,
                     help="output label PNG (single --image only)")
    cla.add_argument("--out-dir", default=None,
                     help="directory for <id>_labels.png outputs (default: .)")
    cla.add_argument("--seed", type=int, default=None,
                     help="override the model's membership-init seed")
    cla.add_argument("--clusters", type=int, default=None,
                     help="must match the model's cluster count")
    _add_common(cla)
    cla.set_defaults(func=cmd_classify)

    ev = subs.add_parser("evaluate", help="measure achieved accuracy and time fractions")
    ev.add_argument("--model", default=None, help="model JSON (or EARLYFCM_MODEL)")
    ev.add_argument("--input", required=True, help="directory of test images")
    ev.add_argument("--accuracies", default=None,
                    help="comma-separated levels (default: the model's table)")
    ev.add_argument("--report", default="report.json", help="output report JSON path")
    ev.add_argument("--accuracy-csv", default=None,
                    help="accuracy table CSV (default: accuracy_table.csv next to report)")
    ev.add_argument("--time-csv", default=None,
                    help="time table CSV (default: time_table.csv next to report)")
    ev.add_argument("--header", action="store_true",
                    help="skip the first row of CSV inputs")
    _add_common(ev)
    ev.set_defaults(func=cmd_evaluate)

    co = subs.add_parser("cost", help="price compute hours and early-stop savings")
    co.add_argument("--unit-price", type=float, required=True,
                    help="dollars per compute hour")
    co.add_argument("--report", default=None, help="evaluation report JSON to price")
    co.add_argument("--accuracy", type=float, default=None,
                    help="price only this accuracy level of the report")
    co.add_argument("--training-hours", type=float, default=0.0)
    co.add_argument("--actual-hours", type=float, default=None,
                    help="explicit clustering hours (alternative to --report)")
    co.add_argument("--saved-hours", type=float, default=None,
                    help="explicit saved hours (alternative to --report)")
    co.add_argument("--area-km2", type=float, default=None,
                    help="extrapolate savings over this land area")
    co.add_argument("--image-area-m2", type=float, default=None,
                    help="ground footprint of one image")
    co.add_argument("--saved-hours-per-image", type=float, default=None)
    co.add_argument("--out", default=None, help="also write the figures as JSON")
    co.set_defaults(func=cmd_cost)

    se = subs.add_parser("serve", help="run the HTTP service")
    se.add_argument("--model", default=None,
                    help="model JSON to preload (or EARLYFCM_MODEL)")
    se.add_argument("--host", default="127.0.0.1")
    se.add_argument("--port", type=int, default=8000)
    se.set_defaults(func=cmd_serve)

    return parser


def cmd_calibrate(args) -> int:
    records = load_corpus_dir(args.input, header=args.header)
    grid = _parse_accuracies(args.accuracies) if args.accuracies else None
    outcome = run_calibration(
        records,
        fcm_config=_fcm_config(args),
        lof_config=LofConfig(
            n_neighbors=args.lof_neighbors, outliers_fraction=args.outliers_fraction
        ),
        svr_params=SvrHyperparams(
            c=args.svr_c,
            epsilon_tube=args.svr_epsilon,
            gamma=_parse_gamma(args.svr_gamma),
            tolerance=args.svr_tolerance,
            max_passes=args.svr_max_passes,
        ),
        accuracy_grid=grid,
        jobs=_jobs(args),
        timer_factory=_timer_factory(args),
    )
    save_model(outcome.model, args.out)
    if args.points_csv:
        write_points_csv(outcome.points, args.points_csv)
    print(f"images loaded: {outcome.n_images}")
    print(f"calibration points: {outcome.n_points}")
    print(f"outliers removed: {outcome.n_outliers_removed}")
    print("thresholds:")
    for accuracy, threshold in outcome.model.threshold_table:
        print(f"  accuracy {accuracy:g} -> change rate {threshold:.6e}")
    print(f"model written: {args.out}")
    return 0


def cmd_classify(args) -> int:
    model = load_model(_model_path(args))
    if args.out and len(args.image) > 1:
        raise InputError("--out works with a single --image; use --out-dir for several")
    config = None
    if args.seed is not None or args.clusters is not None:
        config = dataclasses.replace(
            model.fcm_config,
            **{
                k: v
                for k, v in (("seed", args.seed), ("n_clusters", args.clusters))
                if v is not None
            },
        )
    timer_factory = _timer_factory(args)
    for image_path in args.image:
        record = load_image_features(image_path)
        outcome = classify_record(
            record,
            model,
            args.accuracy,
            config=config,
            timer=timer_factory() if timer_factory else None,
        )
        if args.out:
            out_path = Path(args.out)
        else:
            out_dir = Path(args.out_dir) if args.out_dir else Path(".")
            out_path = out_dir / f"{record.image_id}_labels.png"
        write_label_image(outcome.label_map, out_path)
        note = "" if outcome.exact_table_hit else " (threshold interpolated off-table)"
        print(
            f"{record.image_id}: stop_iteration={outcome.result.stop_iteration} "
            f"elapsed={outcome.result.elapsed_seconds:.3f}s "
            f"stopped_early={outcome.result.stopped_early} "
            f"labels={out_path}{note}"
        )
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(_model_path(args))
    records = load_corpus_dir(args.input, header=args.header)
    accuracies = _parse_accuracies(args.accuracies) if args.accuracies else None
    report = run_evaluation(
        records,
        model,
        accuracies,
        jobs=_jobs(args),
        timer_factory=_timer_factory(args),
    )
    report_path = Path(args.report)
    acc_csv = Path(args.accuracy_csv) if args.accuracy_csv else report_path.parent / "accuracy_table.csv"
    time_csv = Path(args.time_csv) if args.time_csv else report_path.parent / "time_table.csv"
    write_report_json(report, report_path)
    write_accuracy_table(report, acc_csv)
    write_time_table(report, time_csv)
    print("accuracy  mean_achieved  std_achieved  mean_time_fraction")
    for s in report.summaries:
        print(
            f"{s.desired_accuracy:<8g}  {s.mean_achieved:<13.6f}  "
            f"{s.std_achieved:<12.6f}  {s.mean_time_fraction:.6f}"
        )
    print(f"report written: {report_path}")
    print(f"tables written: {acc_csv}, {time_csv}")
    return 0


def cmd_cost(args) -> int:
    price = PriceSheet(unit_price=args.unit_price)
    extrapolation = (args.area_km2, args.image_area_m2, args.saved_hours_per_image)
    have_extrapolation = all(v is not None for v in extrapolation)
    if any(v is not None for v in extrapolation) and not have_extrapolation:
        raise InputError(
            "extrapolation needs all of --area-km2, --image-area-m2 "
            "and --saved-hours-per-image"
        )
    have_hours = args.actual_hours is not None or args.saved_hours is not None
    if not (args.report or have_hours or have_extrapolation):
        raise InputError(
            "nothing to price: pass --report, or --actual-hours/--saved-hours, "
            "or the extrapolation flags"
        )

    document: dict = {"currency": price.currency, "unit_price": repr(float(price.unit_price))}
    if args.report:
        report = load_report(args.report)
        rows = cost_from_report(
            report,
            price,
            training_hours=args.training_hours,
            desired_accuracy=args.accuracy,
        )
        document["levels"] = []
        for level, cost_report in rows:
            print(f"desired accuracy {level:g}:")
            for line in format_cost_report(cost_report).splitlines():
                print(f"  {line}")
            document["levels"].append(
                {"desired_accuracy": level, **cost_report_document(cost_report)}
            )
    elif have_hours:
        if args.actual_hours is None or args.saved_hours is None:
            raise InputError("explicit pricing needs both --actual-hours and --saved-hours")
        cost_report = build_cost_report(
            price, args.training_hours, args.actual_hours, args.saved_hours
        )
        print(format_cost_report(cost_report))
        document["explicit"] = cost_report_document(cost_report)

    if have_extrapolation:
        count, saved_hours, dollars = extrapolate_savings(
            args.area_km2, args.image_area_m2, args.saved_hours_per_image, price
        )
        print(f"extrapolation: {count:,} images over {args.area_km2:g} km^2")
        print(f"  saved hours: {saved_hours:,.2f}")
        print(f"  saved dollars: {round_cents(dollars):,} {price.currency}")
        document["extrapolation"] = {
            "image_count": count,
            "saved_hours": repr(saved_hours),
            "dollars_saved": str(round_cents(dollars)),
        }

    if args.out:
        import json

        Path(args.out).write_text(
            json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"cost document written: {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model_path = args.model or os.environ.get("EARLYFCM_MODEL")
    app = create_app(model_path=model_path)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EarlyFcmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive catch-all
        log.exception("unexpected failure")
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
