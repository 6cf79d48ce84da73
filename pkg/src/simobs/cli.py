"""Command-line front end: extract, analyze, classify, train, simulate,
and the evaluation studies.

Every command is a pure function of its inputs, flags and seed; paths
are read fully before any output is written, so failures leave no
partial files behind.  Exit codes: 0 ok, 1 analysis error, 2 usage or
I/O error.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import classify as cls
from . import mp4, pcap, similarity, simulate
from .errors import AlignmentError, ParameterError, SimobsError
from .timeseries import DEFAULT_STEP, DEFAULT_WINDOW, ByteSeries, read_series_csv, write_series_csv


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _render(writer, *args) -> str:
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()


def _parse_thresholds(text: str) -> dict[str, float]:
    if text == "default":
        return dict(cls.DEFAULT_THRESHOLDS)
    out = dict(cls.DEFAULT_THRESHOLDS)
    for part in text.split(","):
        measure, _, value = part.partition("=")
        if measure not in similarity.MEASURES or not value:
            raise ParameterError(f"bad threshold {part!r} (want measure=value)")
        out[measure] = float(value)
    return out


def _load_samples(path: str) -> list[cls.LabeledSample]:
    with open(path) as fh:
        return cls.read_samples_json(fh)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_extract(args) -> int:
    if bool(args.pcap) == bool(args.video):
        raise ParameterError("give exactly one of --pcap or --video")
    if args.pcap:
        data = Path(args.pcap).read_bytes()
        records = list(pcap.read_pcap(data))
        start = args.start
        if start is None:
            start = records[0].timestamp if records else 0.0
        streams = pcap.extract_device_series(
            records,
            start=start,
            step=args.step,
            n_steps=args.window,
            byte_basis=args.byte_basis,
            group_by=args.group_by,
            include_non_data=args.include_non_data,
        )
        if args.format == "csv":
            text = _render(pcap.write_devices_csv, streams)
        else:
            text = _render(pcap.write_devices_json, streams)
    else:
        data = Path(args.video).read_bytes()
        tables = mp4.parse_mp4(data)
        series = mp4.video_byte_series(tables, step=args.step)
        if args.format == "csv":
            text = _render(write_series_csv, series)
        else:
            payload = {
                "start_time": series.start_time,
                "step": series.step,
                "values": [int(v) for v in series.values],
            }
            text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _write_text(args.out, text)
    return 0


def _read_series(path: str) -> ByteSeries:
    with open(path) as fh:
        return read_series_csv(fh)


def cmd_analyze(args) -> int:
    reference = _read_series(args.reference)
    with open(args.devices) as fh:
        streams = pcap.read_devices_csv(fh)
    manifest = None
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())

    rows = []
    skipped = []
    for ds in streams:
        try:
            sv = similarity.similarity_vector(reference, ds.series)
        except AlignmentError as exc:
            skipped.append((str(ds.device_id), str(exc)))
            continue
        rows.append((str(ds.device_id), sv))
    for device_id, reason in skipped:
        print(f"warning: {device_id}: {reason}", file=sys.stderr)

    if manifest is not None:
        truth = {d["device_id"]: d for d in manifest.get("devices", [])}
        tags = sorted(manifest.get("scenario", {}).get("tags", []))
        payload = []
        for device_id, sv in rows:
            entry = truth.get(device_id, {})
            payload.append(
                {
                    "device_id": device_id,
                    "cc": sv.cc,
                    "dtw": sv.dtw,
                    "kld": sv.kld,
                    "jsd": sv.jsd,
                    "flags": sorted(sv.flags),
                    "label": bool(entry.get("spying", False)),
                    "tags": tags + ([f"kind={entry['kind']}"] if "kind" in entry else []),
                }
            )
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        text = _render(similarity.write_report_csv, rows)
    else:
        text = _render(similarity.write_report_json, rows)
    _write_text(args.out, text)
    return 0


def cmd_classify(args) -> int:
    with open(args.report) as fh:
        rows = similarity.read_report_json(fh)
    out_rows = []
    if args.model:
        with open(args.model) as fh:
            model = cls.load_model(fh)
        for device_id, sv in rows:
            probability = cls.mlp_predict(model, sv)
            out_rows.append((device_id, {"probability": probability, "spy": probability >= 0.5}))
    else:
        thresholds = _parse_thresholds(args.thresholds)
        for device_id, sv in rows:
            cell: dict = {}
            for measure in args.measures.split(","):
                cfg = cls.ThresholdConfig.for_measure(measure, thresholds[measure])
                verdict = cls.threshold_classify(sv, cfg)
                cell[f"spy_{measure}"] = verdict.spy
                if verdict.indeterminate:
                    cell[f"indeterminate_{measure}"] = True
            out_rows.append((device_id, cell))

    if args.format == "csv":
        keys = sorted({k for _, cell in out_rows for k in cell})
        lines = ["device_id," + ",".join(keys)]
        for device_id, cell in out_rows:
            lines.append(device_id + "," + ",".join(str(cell.get(k, "")) for k in keys))
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(
            [{"device_id": d, **cell} for d, cell in out_rows], indent=2, sort_keys=True
        ) + "\n"
    _write_text(args.out, text)
    return 0


def cmd_train(args) -> int:
    samples = _load_samples(args.samples)
    layers = tuple(int(x) for x in args.layers.split(","))
    model = cls.mlp_train(
        samples,
        layers=layers,
        activation=args.activation,
        seed=args.seed,
        max_iter=args.max_iter,
        alpha=args.alpha,
        feature_subset=tuple(args.features.split(",")),
    )
    _write_text(args.out, _render(cls.save_model, model))
    return 0


def cmd_grid_search(args) -> int:
    samples = _load_samples(args.samples)
    subset = tuple(args.features.split(","))
    if args.full_grid:
        grid = cls.ParamGrid()
    else:
        grid = cls.ParamGrid(
            layer_counts=(1, 3), widths=(8, 13), activations=("logistic",), alphas=(1e-4, 1e-2)
        )
    best, cv_f1 = cls.grid_search(
        samples, grid, folds=args.folds, seed=args.seed, feature_subset=subset
    )
    report = {
        "cv_f1": cv_f1,
        "hidden_layers": list(best.hidden_layers),
        "activation": best.activation,
        "alpha": best.alpha,
        "folds": args.folds,
        "grid_points": len(grid.points()),
    }
    _write_text(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    if args.fit_out:
        model = cls.mlp_train(
            samples,
            layers=best.hidden_layers,
            activation=best.activation,
            seed=args.seed,
            alpha=best.alpha,
            feature_subset=subset,
        )
        _write_text(args.fit_out, _render(cls.save_model, model))
    return 0


def _scenario_from_args(args) -> simulate.SimScenario:
    if bool(args.scenario) == bool(args.preset):
        raise ParameterError("give exactly one of --scenario or --preset")
    if args.scenario:
        with open(args.scenario) as fh:
            scenario = simulate.load_scenario(fh)
        if args.seed is not None:
            scenario = simulate.scenario_from_dict(
                {**simulate.scenario_to_dict(scenario), "seed": args.seed}
            )
        return scenario
    seed = args.seed if args.seed is not None else 0
    return simulate.preset_scenario(args.preset, seed)


def cmd_simulate(args) -> int:
    scenario = _scenario_from_args(args)
    dataset = simulate.render_scenario(scenario)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    buf = io.StringIO()
    write_series_csv(dataset.reference_series, buf)
    (out_dir / "reference.csv").write_text(buf.getvalue())

    streams = [
        pcap.DeviceStream(tr.device_id, tr.series, frame_count=max(1, len(tr.events)))
        for tr in dataset.traces
    ]
    (out_dir / "devices.csv").write_text(_render(pcap.write_devices_csv, streams))
    (out_dir / "manifest.json").write_text(
        json.dumps(dataset.manifest, indent=2, sort_keys=True) + "\n"
    )
    if args.pcap_out:
        Path(args.pcap_out).write_bytes(simulate.write_pcap(dataset, link=args.link))
    return 0


def cmd_converge(args) -> int:
    scenario = _scenario_from_args(args)
    if args.model:
        with open(args.model) as fh:
            classifier = cls.load_model(fh)
    else:
        threshold = args.threshold if args.threshold is not None else cls.DEFAULT_THRESHOLDS[args.measure]
        classifier = cls.ThresholdConfig.for_measure(args.measure, threshold)

    curves: list[list[cls.Metrics]] = []
    base = simulate.scenario_to_dict(scenario)
    for trial in range(args.trials):
        trial_scenario = simulate.scenario_from_dict({**base, "seed": scenario.seed + trial})
        dataset = simulate.render_scenario(trial_scenario)
        results = cls.convergence_analysis(
            dataset.reference_series,
            [tr.series for tr in dataset.traces],
            [tr.spying for tr in dataset.traces],
            classifier,
        )
        curves.append([m for _, m in results])

    n_t = min(len(c) for c in curves)
    lines = ["t,mean_f1,mean_accuracy,mean_precision,mean_recall"]
    for i in range(n_t):
        ms = [c[i] for c in curves]
        cells = [
            float(np.mean([m.f1 for m in ms])),
            float(np.mean([m.accuracy for m in ms])),
            float(np.mean([m.precision for m in ms])),
            float(np.mean([m.recall for m in ms])),
        ]
        lines.append(f"{i + 2}," + ",".join(repr(c) for c in cells))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_portability(args) -> int:
    samples = _load_samples(args.samples)
    if args.trainer in similarity.MEASURES:
        trainer = args.trainer
    else:
        raise ParameterError(f"trainer must be a measure name, got {args.trainer!r}")
    order, matrix = cls.portability_matrix(
        samples, args.partition_tag, trainer, seed=args.seed if args.seed is not None else 0
    )
    lines = ["train\\test," + ",".join(order)]
    for name, row in zip(order, matrix):
        lines.append(name + "," + ",".join(repr(float(v)) for v in row))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_agreement(args) -> int:
    samples = _load_samples(args.samples)
    thresholds = _parse_thresholds(args.thresholds)
    configs = [
        cls.ThresholdConfig.for_measure(m, thresholds[m]) for m in args.measures.split(",")
    ]
    report = cls.measure_agreement(samples, configs)
    payload = {
        "total_false_positives": report.total_false_positives,
        "counts": {str(k): v for k, v in sorted(report.counts.items())},
        "distribution": {str(k): v for k, v in report.distribution.items()},
    }
    _write_text(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simobs",
        description="Find streaming cameras by comparing device byte rates with a reference recording.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--step", type=float, default=DEFAULT_STEP, help="time step in seconds")
    common.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="window length in steps")
    common.add_argument("--seed", type=int, default=None, help="seed for every stochastic path")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common], help="byte series from a pcap or MP4 file")
    p.add_argument("--pcap")
    p.add_argument("--video")
    p.add_argument("--group-by", choices=("mac", "ip"), default="mac")
    p.add_argument("--byte-basis", choices=("transmitted", "on_wire"), default="transmitted")
    p.add_argument("--include-non-data", action="store_true")
    p.add_argument("--start", type=float, default=None, help="window start (defaults to first packet)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("analyze", parents=[common], help="similarity of each device to the reference")
    p.add_argument("--reference", required=True, help="reference byte-series CSV")
    p.add_argument("--devices", required=True, help="device-set CSV")
    p.add_argument("--manifest", help="simulator manifest; adds labels/tags and forces JSON")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("classify", parents=[common], help="verdicts from a similarity report")
    p.add_argument("--report", required=True, help="similarity report (JSON)")
    p.add_argument("--thresholds", default="default", help="'default' or measure=value,...")
    p.add_argument("--measures", default="cc,kld,jsd")
    p.add_argument("--model", help="trained model JSON (overrides thresholds)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("train", parents=[common], help="train the network classifier")
    p.add_argument("--samples", required=True, help="labeled samples JSON")
    p.add_argument("--layers", default="13,13,13")
    p.add_argument("--activation", choices=cls.ACTIVATIONS, default="logistic")
    p.add_argument("--alpha", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=400)
    p.add_argument("--features", default="cc,kld,jsd")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid-search", parents=[common], help="hyperparameter search with CV")
    p.add_argument("--samples", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--features", default="cc,kld,jsd")
    p.add_argument("--full-grid", action="store_true", help="all 768 combinations")
    p.add_argument("--fit-out", help="also fit the best point on all samples, write model here")
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("simulate", parents=[common], help="render a synthetic labeled dataset")
    p.add_argument("--scenario", help="scenario config JSON")
    p.add_argument("--preset", choices=sorted(simulate.PRESETS))
    p.add_argument("--out-dir", required=True)
    p.add_argument("--pcap-out", help="also write the dataset as a pcap")
    p.add_argument("--link", choices=("ethernet", "radiotap"), default="ethernet")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("converge", parents=[common], help="metrics at every prefix length")
    p.add_argument("--scenario")
    p.add_argument("--preset", choices=sorted(simulate.PRESETS))
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--measure", choices=similarity.MEASURES, default="kld")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--model")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("portability", parents=[common], help="train/test F1 across two partitions")
    p.add_argument("--samples", required=True)
    p.add_argument("--partition-tag", required=True)
    p.add_argument("--trainer", default="kld", help="measure swept per cell")
    p.set_defaults(func=cmd_portability)

    p = sub.add_parser("agreement", parents=[common], help="simultaneous false-positive counts")
    p.add_argument("--samples", required=True)
    p.add_argument("--thresholds", default="default")
    p.add_argument("--measures", default="cc,kld,jsd")
    p.set_defaults(func=cmd_agreement)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimobsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
