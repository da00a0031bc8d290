"""Markdown and CSV renderings of experiment reports."""

import csv
import io
import json

from .exceptions import ConfigError

ARM_TITLES = {
    "full": "Regression-seeded clusters",
    "random_params": "Random cluster parameters",
    "kmeans_baseline": "K-means (true k)",
}


def _pct(stat):
    return f"{100 * stat['mean']:.2f} ± {100 * stat['std']:.2f}"


def _ari(stat):
    return f"{stat['mean']:.3f} ± {stat['std']:.3f}"


def provenance(data):
    """JSON blob with the effective config and seeds of a report."""
    return json.dumps({"config": data["config"], "seeds": data["seeds"]}, sort_keys=True)


def _label(data):
    return ARM_TITLES.get(data["config"].get("arm"), data["config"].get("arm", "?"))


def _ref_rows(data, metrics, fmt):
    ref = data.get("reference") or {}
    if not all(m in ref for m in metrics):
        return []
    cells = [fmt(ref[m]) for m in metrics]
    return [f"| Published, physical dataset (reference only) | {' | '.join(cells)} |"]


def render_markdown(data):
    """Three tables: novelty detection, known-class recognition, novel clustering."""
    agg = data["aggregate"]
    label = _label(data)
    n = len(data["per_trial"])
    lines = [
        f"<!-- mechosr report: {provenance(data)} -->",
        f"# Open-set recognition report ({n} repetitions, {data.get('std_kind', 'population')} std)",
        "",
        "## Accuracy of novelty detection (%)",
        "",
        "| Method | Known | Novel | Overall |",
        "|---|---|---|---|",
        f"| {label} | {_pct(agg['known_accuracy'])} | {_pct(agg['novel_accuracy'])} | {_pct(agg['overall_accuracy'])} |",
        *_ref_rows(data, ["known_accuracy", "novel_accuracy", "overall_accuracy"],
                   lambda s: f"{s['mean']:.2f} ± {s['std']:.2f}"),
        "",
        "## Recognition rate of known objects (%)",
        "",
        "| Method | Recognition rate |",
        "|---|---|",
        f"| {label} | {_pct(agg['recognition_rate'])} |",
        *_ref_rows(data, ["recognition_rate"], lambda s: f"{s['mean']:.2f} ± {s['std']:.2f}"),
        "",
        "## Clustering of novel objects",
        "",
        "| Method | ARI | Clusters | Outliers |",
        "|---|---|---|---|",
        f"| {label} | {_ari(agg['ari'])} | {agg['n_clusters']['mean']:.1f} | {agg['n_outliers']['mean']:.1f} |",
    ]
    ref = data.get("reference") or {}
    if "ari" in ref:
        lines.append(f"| Published, physical dataset (reference only) | {_ari(ref['ari'])} | | |")
    return "\n".join(lines) + "\n"


def _check_versions(reports):
    if not reports:
        raise ConfigError("no reports given")
    versions = {r.get("schema_version") for r in reports}
    if len(versions) != 1:
        raise ConfigError(f"reports have mismatched schema versions: {sorted(map(str, versions))}")


COMPARE_COLUMNS = ("known_accuracy", "novel_accuracy", "overall_accuracy", "recognition_rate", "ari")


def render_comparison(reports, names=None):
    """Side-by-side markdown table of several reports."""
    _check_versions(reports)
    names = names or [_label(r) for r in reports]
    head = "| Report | Known (%) | Novel (%) | Overall (%) | Recognition (%) | ARI |"
    lines = [head, "|---|---|---|---|---|---|"]
    for name, r in zip(names, reports):
        agg = r["aggregate"]
        cells = [_pct(agg[m]) for m in COMPARE_COLUMNS[:-1]] + [_ari(agg["ari"])]
        lines.append(f"| {name} | {' | '.join(cells)} |")
    return "\n".join(lines) + "\n"


def comparison_csv(reports, names=None):
    _check_versions(reports)
    names = names or [_label(r) for r in reports]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["report"] + [f"{s}_{m}" for m in COMPARE_COLUMNS for s in ("mean", "std")])
    for name, r in zip(names, reports):
        agg = r["aggregate"]
        writer.writerow([name] + [repr(agg[m][s]) for m in COMPARE_COLUMNS for s in ("mean", "std")])
    return buf.getvalue()


def sweep_csv(sweep_result, header=None):
    """Curve CSV (``value,mean_ari,std_ari,...``) with ``#`` provenance lines."""
    rows = sweep_result.curve()
    first = ["value", "mean_ari", "std_ari"]
    rest = [k for k in rows[0] if k not in first]
    buf = io.StringIO()
    if header:
        for line in header.splitlines():
            buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(first + rest)
    for row in rows:
        writer.writerow([repr(row[k]) for k in first + rest])
    return buf.getvalue()
