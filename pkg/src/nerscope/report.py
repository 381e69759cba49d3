"""Report bundles and their JSON, Markdown and chart-data renderings.

A bundle is a plain JSON-ready dict assembled from a performance tensor by
:func:`build_bundle`.  All scores inside it are fractions; the Markdown view
shows them as percentages with one decimal.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from statistics import fmean
from typing import Any, Iterable, Sequence

from . import __version__
from .analysis import (
    PerformanceTensor,
    attribute_rho,
    bucket_wilcoxon,
    comparative_diagnose,
    dataset_significance,
    model_wise_table,
    normalize_zeta,
    self_diagnose,
)

SCHEMA = "nerscope-report/1"
CHART_KINDS = ("radar", "heatmap", "diagnosis-bars")

ReportBundle = dict


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _interval_json(plan_json: dict) -> list:
    return plan_json["boundaries"]


def build_bundle(T: PerformanceTensor, alpha: float = 0.05,
                 pairs: Iterable[tuple[str, str]] | None = None,
                 inputs: dict[str, str] | None = None,
                 config: dict[str, Any] | None = None) -> ReportBundle:
    """Collect every analysis view of ``T`` into one document.

    ``pairs`` lists (m1, m2) system pairs for comparative diagnosis; by
    default each unordered pair once, in registration order.
    """
    if pairs is None:
        pairs = [(a, b) for i, a in enumerate(T.systems) for b in T.systems[i + 1:]]
    mw = model_wise_table(T, alpha)
    data_p = dataset_significance(T, alpha)

    buckets = {}
    for a in T.attributes:
        plan = T.plans[a]
        buckets[a] = {
            "strategy": plan.strategy,
            "labels": list(plan.labels),
            "intervals": _interval_json(plan.to_json()),
            "gold_sizes": T.gold_sizes[a],
            "pred_sizes": {s: [None if c is None else c.predicted_count for c in T.prf[s][a]]
                           for s in T.systems},
            "f1": {s: T.values(s, a) for s in T.systems},
            "precision": {s: [None if c is None else c.precision for c in T.prf[s][a]] for s in T.systems},
            "recall": {s: [None if c is None else c.recall for c in T.prf[s][a]] for s in T.systems},
            "warnings": list(plan.warnings),
        }

    zeta_norm = normalize_zeta([T.zeta])[0] if T.zeta else {}
    attribute_wise = {}
    for a in T.attributes:
        p = data_p[a]
        attribute_wise[a] = {
            "zeta": T.zeta.get(a),
            "zeta_token": T.zeta_token.get(a),
            "zeta_normalized": zeta_norm.get(a),
            "rho": attribute_rho(T, a),
            "p_value": p,
            "significant": p is not None and p < alpha,
        }

    def label(a, k):
        return T.plans[a].labels[k]

    self_diag = {}
    for s in T.systems:
        self_diag[s] = [{
            "attribute": e.attribute,
            "best_bucket": label(e.attribute, e.high_bucket),
            "best_f1": e.high_value,
            "worst_bucket": label(e.attribute, e.low_bucket),
            "worst_f1": e.low_value,
            "gap": e.gap,
            "tied": e.tied,
        } for e in self_diagnose(T, s)]

    comparative = []
    for m1, m2 in pairs:
        entries = []
        for e in comparative_diagnose(T, m1, m2):
            w_hi = bucket_wilcoxon(T, m1, m2, e.attribute, e.high_bucket)
            w_lo = bucket_wilcoxon(T, m1, m2, e.attribute, e.low_bucket)
            entries.append({
                "attribute": e.attribute,
                "max_gap_bucket": label(e.attribute, e.high_bucket),
                "max_gap": e.high_value,
                "max_gap_p": w_hi.p_value,
                "max_gap_all_zero": w_hi.all_zero,
                "min_gap_bucket": label(e.attribute, e.low_bucket),
                "min_gap": e.low_value,
                "min_gap_p": w_lo.p_value,
                "min_gap_all_zero": w_lo.all_zero,
                "tied": e.tied,
            })
        comparative.append({"m1": m1, "m2": m2, "entries": entries})

    return {
        "schema": SCHEMA,
        "metadata": {
            "tool": "nerscope",
            "version": __version__,
            "inputs": dict(sorted((inputs or {}).items())),
            "config": config or {},
        },
        "alpha": alpha,
        "folds": T.folds,
        "systems": list(T.systems),
        "attributes": list(T.attributes),
        "overall": {s: T.overall[s].as_dict() for s in T.systems},
        "buckets": buckets,
        "model_wise": [{
            "system": r.system,
            "attribute": r.attribute,
            "spearman": r.spearman,
            "std": r.std,
            "p_value": r.p_value,
            "significant": r.significant,
        } for r in mw],
        "attribute_wise": attribute_wise,
        "self_diagnosis": self_diag,
        "comparative_diagnosis": comparative,
    }


def canonical(obj):
    """Round floats to 6 significant digits; everything else passes through."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite number {obj!r} in report")
        x = float(f"{obj:.6g}")
        return 0.0 if x == 0 else x
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(bundle: ReportBundle) -> str:
    return json.dumps(canonical(bundle), indent=2, ensure_ascii=False) + "\n"


def _write(path, text: str) -> Path:
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e
    return path


def emit_json(bundle: ReportBundle, path) -> Path:
    return _write(path, dumps(bundle))


def load_json(path) -> ReportBundle:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"{path}: not a {SCHEMA} document")
    return doc


# markdown

NA = "n/a"


def pct(x) -> str:
    return NA if x is None else f"{100 * x:.1f}"


def _grey(text: str, significant: bool) -> str:
    return text if significant or text == NA else f"~~{text}~~"


def _table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def _p(x) -> str:
    return NA if x is None else f"{x:.3g}"


def render_markdown(bundle: ReportBundle) -> str:
    # render from the rounded values so markdown and JSON never disagree
    bundle = canonical(bundle)
    systems = bundle["systems"]
    attrs = bundle["attributes"]
    alpha = bundle["alpha"]
    out = ["# NER bucketed evaluation", ""]
    out.append(f"Scores are percentages. Significance level {alpha:g}; "
               f"~~struck~~ cells did not pass the Friedman test (p >= {alpha:g}).")
    out.append("")

    out += ["## Overall", ""]
    out += _table(["System", "P (%)", "R (%)", "F1 (%)"],
                  [[s, pct(bundle["overall"][s]["precision"]), pct(bundle["overall"][s]["recall"]),
                    pct(bundle["overall"][s]["f1"])] for s in systems])
    out.append("")

    mw = {(r["system"], r["attribute"]): r for r in bundle["model_wise"]}
    for title, key in (("Spearman correlation with bucket rank (%)", "spearman"),
                       ("Standard deviation of bucket F1 (%)", "std")):
        out += [f"## Model-wise: {title}", ""]
        rows = []
        for s in systems:
            rows.append([s] + [_grey(pct(mw[s, a][key]), mw[s, a]["significant"]) for a in attrs])
        out += _table(["System"] + list(attrs), rows)
        out.append("")

    out += ["## Attribute-wise", ""]
    rows = []
    for a in attrs:
        aw = bundle["attribute_wise"][a]
        z = NA if aw["zeta"] is None else f"{aw['zeta']:.4g}"
        rows.append([a, z, _grey(pct(aw["rho"]), aw["significant"]), _p(aw["p_value"])])
    out += _table(["Attribute", "zeta", "rho (%)", "Friedman p"], rows)
    out.append("")

    out += ["## Per-bucket F1 (%)", ""]
    for a in attrs:
        b = bundle["buckets"][a]
        out += [f"### {a} ({b['strategy']})", ""]
        n = len(b["labels"])
        rows = [["interval"] + [_describe(iv, k == n - 1) for k, iv in enumerate(b["intervals"])],
                ["gold entities"] + [str(x) for x in b["gold_sizes"]]]
        rows += [[s] + [pct(v) for v in b["f1"][s]] for s in systems]
        out += _table(["Bucket"] + b["labels"], rows)
        out.append("")

    out += ["## Self-diagnosis", ""]
    rows = []
    for s in systems:
        for e in bundle["self_diagnosis"][s]:
            rows.append([s, e["attribute"], e["best_bucket"], pct(e["best_f1"]), e["worst_bucket"],
                         pct(e["worst_f1"]), pct(e["gap"]) + (" (tie)" if e["tied"] else "")])
    out += _table(["System", "Attribute", "Best", "F1", "Worst", "F1", "Gap"], rows)
    out.append("")

    for comp in bundle["comparative_diagnosis"]:
        out += [f"## Comparative diagnosis: {comp['m1']} vs {comp['m2']}", ""]
        rows = []
        for e in comp["entries"]:
            rows.append([e["attribute"], e["max_gap_bucket"], pct(e["max_gap"]), _p(e["max_gap_p"]),
                         e["min_gap_bucket"], pct(e["min_gap"]), _p(e["min_gap_p"])])
        out += _table(["Attribute", "Largest gap", "Gap", "Wilcoxon p",
                       "Smallest gap", "Gap", "Wilcoxon p"], rows)
        out.append("")

    out += ["## Friedman p-values per model", ""]
    rows = [[s] + [_grey(_p(mw[s, a]["p_value"]), mw[s, a]["significant"]) for a in attrs]
            for s in systems]
    out += _table(["System"] + list(attrs), rows)
    out.append("")
    return "\n".join(out)


def _describe(iv, last: bool) -> str:
    lo, hi = iv
    hi_s = "inf" if hi is None else f"{hi:.4g}"
    # a bucket ending just above zero holds exactly zero
    if lo == 0 and hi is not None and 0 < hi < 1e-300:
        return "{0}"
    if lo == hi:
        return f"{{{lo:.4g}}}"
    lo_s = "0+" if 0 < lo < 1e-300 else f"{lo:.4g}"
    return f"[{lo_s}, {hi_s}{']' if last else ')'}"


def emit_markdown(bundle: ReportBundle, path) -> Path:
    return _write(path, render_markdown(bundle))


# chart data

def radar_data(bundles: Sequence[ReportBundle], names: Sequence[str] | None = None) -> dict:
    """Per-dataset zeta (normalized by its maximum across ``bundles``) and rho."""
    names = list(names) if names else [f"dataset{i + 1}" for i in range(len(bundles))]
    attrs = bundles[0]["attributes"]
    raw = [{a: b["attribute_wise"][a]["zeta"] for a in attrs if b["attribute_wise"][a]["zeta"] is not None}
           for b in bundles]
    norm = normalize_zeta(raw)
    return {
        "attributes": list(attrs),
        "series": [{
            "name": name,
            "zeta": [n.get(a) for a in attrs],
            "zeta_raw": [r.get(a) for a in attrs],
            "rho": [b["attribute_wise"][a]["rho"] for a in attrs],
        } for name, b, r, n in zip(names, bundles, raw, norm)],
    }


def heatmap_rows(bundle: ReportBundle, m1: str, m2: str) -> list[list]:
    """Rows of bucket-wise F1 gaps ``m1 - m2``, one per attribute."""
    width = max(len(bundle["buckets"][a]["labels"]) for a in bundle["attributes"])
    rows = [["attribute"] + [f"bucket_{k + 1}" for k in range(width)]]
    for a in bundle["attributes"]:
        f = bundle["buckets"][a]["f1"]
        cells = [None if x is None or y is None else x - y for x, y in zip(f[m1], f[m2])]
        rows.append([a] + cells + [None] * (width - len(cells)))
    return rows


def diagnosis_rows(bundle: ReportBundle) -> list[list]:
    rows = [["system", "attribute", "best_bucket", "best_f1", "worst_bucket", "worst_f1", "gap"]]
    for s in bundle["systems"]:
        for e in bundle["self_diagnosis"][s]:
            rows.append([s, e["attribute"], e["best_bucket"], e["best_f1"],
                         e["worst_bucket"], e["worst_f1"], e["gap"]])
    return rows


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
    for row in rows:
        w.writerow(["" if v is None else canonical(v) for v in row])
    return buf.getvalue()


def emit_chart_data(bundle: ReportBundle, kind: str, path, pair: tuple[str, str] | None = None) -> Path:
    if kind == "radar":
        return _write(path, json.dumps(canonical(radar_data([bundle])), indent=2) + "\n")
    if kind == "heatmap":
        if pair is None:
            if len(bundle["systems"]) < 2:
                raise ValueError("a heatmap needs two systems")
            pair = tuple(bundle["systems"][:2])
        return _write(path, _csv_text(heatmap_rows(bundle, *pair)))
    if kind == "diagnosis-bars":
        return _write(path, _csv_text(diagnosis_rows(bundle)))
    raise ValueError(f"chart kind must be one of {CHART_KINDS}")


# cross-dataset summary

def average_bundles(bundles: Sequence[ReportBundle], names: Sequence[str] | None = None) -> dict:
    """Average per-dataset Spearman correlations, spreads and overall F1.

    Correlations are averaged per dataset, not recomputed on averaged F1.
    A cell counts as significant when it was significant on every dataset.
    """
    systems = [s for s in bundles[0]["systems"] if all(s in b["systems"] for b in bundles)]
    attrs = [a for a in bundles[0]["attributes"] if all(a in b["attributes"] for b in bundles)]
    rows = []
    for s in systems:
        for a in attrs:
            cells = [next(r for r in b["model_wise"] if r["system"] == s and r["attribute"] == a)
                     for b in bundles]
            rho = [c["spearman"] for c in cells if c["spearman"] is not None]
            sd = [c["std"] for c in cells if c["std"] is not None]
            rows.append({
                "system": s, "attribute": a,
                "spearman": fmean(rho) if rho else None,
                "std": fmean(sd) if sd else None,
                "significant": all(c["significant"] for c in cells),
                "datasets": len(cells),
            })
    return {
        "schema": "nerscope-summary/1",
        "datasets": list(names) if names else [f"dataset{i + 1}" for i in range(len(bundles))],
        "systems": systems,
        "attributes": attrs,
        "overall_f1": {s: fmean(b["overall"][s]["f1"] for b in bundles) for s in systems},
        "model_wise": rows,
        "radar": radar_data(bundles, names),
    }
