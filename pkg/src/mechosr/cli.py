"""Command-line interface: ``mechosr generate|run|sweep|report``.

Configuration files are plain text with one ``key = value`` pair per line;
blank lines and lines starting with ``#`` are ignored. Files ending in
``.json`` are read as a flat JSON object instead. ``--set key=value``
overrides are applied after the file, in order.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .core import SyntheticSpec, dumps_report, generate_synthetic, save_csv
from .exceptions import ConfigError, DataError
from .experiment import (
    SWEEP_PARAMS,
    ExperimentReport,
    load_dataset,
    parse_config,
    run_experiment,
    sweep,
)
from .reporting import comparison_csv, render_comparison, render_markdown, sweep_csv

OUTPUT_ENV = "MECHOSR_OUTPUT_DIR"
DEFAULT_OUTPUT = "mechosr-out"
GENERATE_KEYS = {"classes": int, "samples_per_class": int, "separation": float, "seed": int}

log = logging.getLogger("mechosr")


def read_config_file(path):
    """Parse a config file into a dict of raw (string or JSON) values."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return data
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def parse_overrides(pairs):
    values = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        values[key.strip()] = value.strip()
    return values


def gather(args):
    raw = read_config_file(args.config) if args.config else {}
    raw.update(parse_overrides(args.set))
    return raw


def parse_values(text, kind=float):
    """``0,0.2,0.4`` or an inclusive range ``start..stop[:step]``.

    A range without a step counts by 1 for integer endpoints and by 0.1
    otherwise.
    """
    text = text.strip()
    try:
        if ".." in text:
            bounds, _, step = text.partition(":")
            lo_s, hi_s = bounds.split("..", 1)
            integral = all(s.strip().lstrip("-").isdigit() for s in (lo_s, hi_s))
            lo, hi = float(lo_s), float(hi_s)
            step = float(step) if step else (1.0 if integral else 0.1)
            if step <= 0 or hi < lo:
                raise ValueError(text)
            n = int(np.floor((hi - lo) / step + 1e-9)) + 1
            values = [round(lo + i * step, 10) for i in range(n)]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse --values {text!r}") from None
    if not values:
        raise ConfigError("--values is empty")
    if kind is int:
        if any(v != int(v) for v in values):
            raise ConfigError(f"--values must be integers, got {text!r}")
        return [int(v) for v in values]
    return values


def output_dir(args):
    return Path(args.out or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def write_outputs(files):
    """Write every ``{path: text}`` entry, each through a temporary file."""
    for path, text in files.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        log.info("wrote %s", path)


def _stamp(data, args):
    if args.no_timestamp:
        data.pop("runtime_seconds", None)
    else:
        data["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return data


def cmd_generate(args):
    raw = gather(args)
    unknown = sorted(set(raw) - set(GENERATE_KEYS))
    if unknown:
        raise ConfigError(
            f"unknown generate key(s): {', '.join(unknown)}; valid: {', '.join(GENERATE_KEYS)}"
        )
    values = {"classes": 20, "samples_per_class": 25, "separation": 8.0, "seed": 7}
    for key, value in raw.items():
        try:
            values[key] = GENERATE_KEYS[key](value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot interpret {value!r}") from None
    spec = SyntheticSpec(
        n_classes=values["classes"],
        samples_per_class=values["samples_per_class"],
        separation=values["separation"],
    )
    dataset = generate_synthetic(spec, seed=values["seed"])
    out = Path(args.out) if args.out else output_dir(args) / "dataset.csv"
    header = "mechosr synthetic dataset\n" + json.dumps(values, sort_keys=True)
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out.parent, prefix=f".{out.name}.")
    os.close(fd)
    try:
        save_csv(dataset, tmp, comment=header)
        os.replace(tmp, out)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    means = dataset.metadata["class_means"]
    print(f"{len(dataset)} rows, {dataset.n_classes} classes, {dataset.metadata['clipped']} clipped values -> {out}")
    print("class  rows  stiffness  viscosity  restitution  friction")
    for g, n in dataset.class_counts.items():
        m = means[g - 1]
        print(f"{g:5d}  {n:4d}  {m[0]:9.2f}  {m[1]:9.3f}  {m[2]:11.3f}  {m[3]:8.3f}")
    return 0


def cmd_run(args):
    config = parse_config(gather(args))
    dataset = load_dataset(config)
    traces = [] if args.trace else None
    report = run_experiment(config, jobs=args.jobs, dataset=dataset, traces=traces)
    data = _stamp(report.to_dict(), args)
    out = output_dir(args)
    files = {
        out / "report.json": dumps_report(data),
        out / "report.md": render_markdown(data),
    }
    if traces is not None:
        head = {"config": data["config"], "seeds": data["seeds"]}
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True) for r in traces]
        files[out / "trace.jsonl"] = "\n".join(lines) + "\n"
    write_outputs(files)
    agg = report.aggregate
    print(
        f"{config.arm}: overall {agg['overall_accuracy']['mean']:.4f}, "
        f"recognition {agg['recognition_rate']['mean']:.4f}, "
        f"ARI {agg['ari']['mean']:.4f} ± {agg['ari']['std']:.4f} -> {out}"
    )
    return 0


def cmd_sweep(args):
    if args.param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {args.param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    config = parse_config(gather(args))
    kind = int if args.param in ("n_gen", "tau_update") else float
    values = parse_values(args.values, kind)
    dataset = load_dataset(config)
    result = sweep(config, args.param, values, jobs=args.jobs, dataset=dataset)
    out = output_dir(args)
    header = "mechosr sweep\n" + json.dumps(
        {"param": args.param, "values": values, "config": config.to_dict(),
         "seeds": result.reports[0].seeds},
        sort_keys=True,
    )
    files = {out / f"sweep_{args.param}.csv": sweep_csv(result, header)}
    for v, rep in zip(values, result.reports):
        data = _stamp(rep.to_dict(), args)
        files[out / f"sweep_{args.param}" / f"{args.param}={v}.json"] = dumps_report(data)
    write_outputs(files)
    for row in result.curve():
        print(f"{args.param}={row['value']}: ARI {row['mean_ari']:.4f} ± {row['std_ari']:.4f}")
    return 0


def cmd_report(args):
    if not args.reports:
        raise ConfigError("no report files given")
    reports = []
    for path in args.reports:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read report {path}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc.msg})") from None
        reports.append(data)
    names = [Path(p).stem if Path(p).stem != "report" else Path(p).parent.name or Path(p).stem
             for p in args.reports]
    render = comparison_csv if args.format == "csv" else render_comparison
    text = render(reports, names)
    # versions agree; now check they are also the version this build reads
    for data in reports:
        ExperimentReport.from_dict(data)
    if args.out:
        write_outputs({Path(args.out): text})
    else:
        sys.stdout.write(text)
    return 0


def _experiment_args(p):
    p.add_argument("--config", help="config file (key = value lines, or .json)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key; repeatable")
    p.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    p.add_argument("--jobs", type=int, default=1, help="parallel trial processes (default 1)")
    p.add_argument("--no-timestamp", action="store_true", help="omit creation time and runtime from reports")


def build_parser():
    parser = argparse.ArgumentParser(prog="mechosr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV")
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help=f"one of: {', '.join(GENERATE_KEYS)}")
    p.add_argument("--out", help="output CSV path (default: <output dir>/dataset.csv)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="run repeated trials and write JSON + markdown reports")
    _experiment_args(p)
    p.add_argument("--trace", action="store_true", help="also write per-assignment records as JSONL")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="one experiment per value of a hyperparameter")
    _experiment_args(p)
    p.add_argument("--param", required=True, help=f"one of: {', '.join(SWEEP_PARAMS)}")
    p.add_argument("--values", required=True, help="comma list or start..stop[:step]")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="merge report JSON files into one comparison table")
    p.add_argument("reports", nargs="*")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
