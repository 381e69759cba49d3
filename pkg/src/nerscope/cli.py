"""Command-line front end.

    nerscope analyze --train train.txt --test test.txt --pred crf=crf.txt --out report/
    nerscope compare --train ... --test ... --pred a=... --pred b=... a b
    nerscope buckets --train ... --test ...
    nerscope average report1/report.json report2/report.json --out summary/

Predictions come either from separate files aligned with the test file
(``--pred NAME=PATH``, tag in the last column) or from extra columns of the
test file itself (``--pred NAME=:COLUMN``).  Settings may also be read from
a ``key = value`` file given with ``--config``; flags on the command line
win over the file, and the file wins over the defaults.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .analysis import DEFAULT_FOLDS, PerformanceTensor, bucket_wilcoxon, build_tensor, comparative_diagnose
from .attributes import ATTRIBUTES, Featurizer, TrainingStats, build_training_stats, check_attributes
from .bucketing import DEFAULT_M, load_plans, partition, plan_buckets, save_plans
from .corpus import ColumnSpec, CorpusError, attach_predictions, extract_spans, read_conll
from .report import (
    average_bundles,
    build_bundle,
    dumps,
    emit_chart_data,
    emit_json,
    emit_markdown,
    file_digest,
    load_json,
)

log = logging.getLogger("nerscope")

FORMATS = ("json", "md", "csv")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    train: str | None = None
    test: str | None = None
    preds: list[tuple[str, str]] = field(default_factory=list)
    scheme: str = "BIO"
    attributes: tuple[str, ...] = ATTRIBUTES
    buckets: dict[str, int] = field(default_factory=dict)
    default_buckets: int = DEFAULT_M
    alpha: float = 0.05
    out: str = "."
    formats: tuple[str, ...] = ("json", "md")
    stats: str | None = None
    plan: str | None = None
    tensor: str | None = None
    lowercase: bool = False
    folds: int = DEFAULT_FOLDS
    token_column: int = 0
    gold_column: int = -1

    def validate(self, need_preds: bool = True) -> None:
        if self.train is None or self.test is None:
            raise UsageError("--train and --test are required")
        if need_preds and not self.preds:
            raise UsageError("at least one --pred source is required")
        if not 0 < self.alpha < 1:
            raise UsageError("--alpha must lie strictly between 0 and 1")
        if self.folds < 1:
            raise UsageError("--folds must be positive")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise UsageError(f"unknown format(s): {', '.join(bad)}")

    def buckets_for(self) -> dict[str, int]:
        return {a: self.buckets.get(a, self.default_buckets) for a in self.attributes}

    def describe(self) -> dict:
        """Settings that shape the report (paths left out so reports are location-independent)."""
        return {
            "scheme": self.scheme,
            "attributes": list(self.attributes),
            "buckets": self.buckets_for(),
            "alpha": self.alpha,
            "folds": self.folds,
            "lowercase": self.lowercase,
            "systems": [name for name, _ in self.preds],
        }


def _parse_pred(text: str) -> tuple[str, str]:
    name, sep, src = text.partition("=")
    if not sep or not name or not src:
        raise UsageError(f"--pred expects NAME=PATH or NAME=:COLUMN, got {text!r}")
    return name, src


def _parse_buckets(text: str, cfg: RunConfig) -> None:
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            attr, n = part.split("=", 1)
            check_attributes([attr.strip()])
            cfg.buckets[attr.strip()] = _int(n, "--buckets")
        else:
            cfg.default_buckets = _int(part, "--buckets")


def _int(text, what) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise UsageError(f"{what}: {text!r} is not an integer") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config_file(path) -> dict[str, list[str]]:
    """Flat ``key = value`` lines; ``#`` starts a comment; repeated keys accumulate."""
    out: dict[str, list[str]] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e.strerror}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected key = value")
        out.setdefault(key.strip().replace("_", "-"), []).append(value.strip())
    return out


_KEYS = {"train", "test", "pred", "scheme", "attributes", "buckets", "alpha", "out", "format",
         "stats", "plan", "tensor", "lowercase", "folds", "token-col", "gold-col"}


def build_config(args: argparse.Namespace) -> RunConfig:
    file_values: dict[str, list[str]] = {}
    if getattr(args, "config", None):
        file_values = read_config_file(args.config)
        unknown = set(file_values) - _KEYS
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")

    def pick(key):
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None and flag != []:
            return flag
        vals = file_values.get(key)
        if vals is None:
            return None
        return vals if key in ("pred", "format") else vals[-1]

    cfg = RunConfig()
    cfg.train = pick("train")
    cfg.test = pick("test")
    for p in pick("pred") or []:
        cfg.preds.append(_parse_pred(p.strip()))
    names = [n for n, _ in cfg.preds]
    if len(set(names)) != len(names):
        raise UsageError("system names given to --pred must be distinct")
    if (v := pick("scheme")) is not None:
        cfg.scheme = v.upper()
        if cfg.scheme not in ("BIO", "BIOES"):
            raise UsageError("--scheme must be bio or bioes")
    if (v := pick("attributes")) is not None:
        try:
            cfg.attributes = check_attributes(a.strip() for a in v.split(",") if a.strip())
        except ValueError as e:
            raise UsageError(str(e)) from None
        if not cfg.attributes:
            raise UsageError("--attributes selects nothing")
    if (v := pick("buckets")) is not None:
        try:
            _parse_buckets(v, cfg)
        except ValueError as e:
            raise UsageError(str(e)) from None
    if (v := pick("alpha")) is not None:
        try:
            cfg.alpha = float(v)
        except ValueError:
            raise UsageError(f"--alpha: {v!r} is not a number") from None
    if (v := pick("out")) is not None:
        cfg.out = v
    if (v := pick("format")) is not None:
        cfg.formats = tuple(f.strip() for item in v for f in item.split(",") if f.strip())
    for key in ("stats", "plan", "tensor"):
        if (v := pick(key)) is not None:
            setattr(cfg, key, v)
    if (v := pick("lowercase")) is not None:
        cfg.lowercase = _bool(v)
    if (v := pick("folds")) is not None:
        cfg.folds = _int(v, "--folds")
    if (v := pick("token-col")) is not None:
        cfg.token_column = _int(v, "--token-col")
    if (v := pick("gold-col")) is not None:
        cfg.gold_column = _int(v, "--gold-col")
    return cfg


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise UsageError(f"{what} file not found: {path}")


@dataclass
class Loaded:
    featurizer: Featurizer
    inputs: dict[str, str]


def load_inputs(cfg: RunConfig) -> Loaded:
    _require_file(cfg.train, "training")
    _require_file(cfg.test, "test")
    inline = [(n, int(src[1:])) for n, src in cfg.preds if src.startswith(":")]
    external = [(n, src) for n, src in cfg.preds if not src.startswith(":")]
    for _, src in external:
        _require_file(src, "prediction")

    inputs = {"train": file_digest(cfg.train), "test": file_digest(cfg.test)}
    stats = None
    if cfg.stats and os.path.isfile(cfg.stats):
        stats = TrainingStats.load(cfg.stats)
        if stats.lowercase != cfg.lowercase:
            raise UsageError(f"{cfg.stats} was built with lowercase={stats.lowercase}")
        log.info("loaded training statistics from %s", cfg.stats)
    if stats is None:
        train = read_conll(cfg.train, ColumnSpec(cfg.token_column, cfg.gold_column, (), cfg.scheme), "train")
        stats = build_training_stats(train, cfg.scheme, cfg.lowercase)
        if cfg.stats:
            stats.save(cfg.stats)

    test_spec = ColumnSpec(cfg.token_column, cfg.gold_column, tuple(inline), cfg.scheme)
    test = read_conll(cfg.test, test_spec, "test")
    for name, path in external:
        predicted = read_conll(path, ColumnSpec(cfg.token_column, -1, (), cfg.scheme))
        test = attach_predictions(test, name, predicted)
        inputs[f"pred:{name}"] = file_digest(path)
    # keep the systems in the order they were given
    order = [n for n, _ in cfg.preds]
    if list(test.systems) != order:
        test = test.select_systems(order)
    return Loaded(Featurizer(test, stats, cfg.scheme), inputs)


def compute_tensor(cfg: RunConfig, loaded: Loaded) -> PerformanceTensor:
    if cfg.tensor and os.path.isfile(cfg.tensor):
        log.info("loaded tensor from %s", cfg.tensor)
        return PerformanceTensor.load(cfg.tensor)
    plans = None
    if cfg.plan and os.path.isfile(cfg.plan):
        plans = load_plans(cfg.plan)
    T = build_tensor(loaded.featurizer, attributes=cfg.attributes, m=cfg.buckets_for(),
                     plans=plans, folds=cfg.folds)
    if cfg.plan and plans is None:
        save_plans([T.plans[a] for a in T.attributes], cfg.plan)
    if cfg.tensor:
        T.save(cfg.tensor)
    return T


def _emit(bundle, cfg: RunConfig, stem: str = "report") -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in cfg.formats:
        written.append(emit_json(bundle, out / f"{stem}.json"))
    if "md" in cfg.formats:
        written.append(emit_markdown(bundle, out / f"{stem}.md"))
    if "csv" in cfg.formats:
        written.append(emit_chart_data(bundle, "radar", out / "radar.json"))
        written.append(emit_chart_data(bundle, "diagnosis-bars", out / "diagnosis_bars.csv"))
        for comp in bundle["comparative_diagnosis"]:
            name = f"heatmap_{comp['m1']}_vs_{comp['m2']}.csv"
            written.append(emit_chart_data(bundle, "heatmap", out / name, (comp["m1"], comp["m2"])))
    return written


def cmd_analyze(cfg: RunConfig) -> int:
    cfg.validate()
    loaded = load_inputs(cfg)
    T = compute_tensor(cfg, loaded)
    bundle = build_bundle(T, cfg.alpha, inputs=loaded.inputs, config=cfg.describe())
    for path in _emit(bundle, cfg):
        print(path)
    return 0


def cmd_compare(cfg: RunConfig, a: str, b: str) -> int:
    cfg.validate()
    names = [n for n, _ in cfg.preds]
    for s in (a, b):
        if s not in names:
            raise UsageError(f"unknown system {s!r}; registered: {', '.join(names)}")
    loaded = load_inputs(cfg)
    T = compute_tensor(cfg, loaded)
    bundle = build_bundle(T, cfg.alpha, pairs=[(a, b)], inputs=loaded.inputs, config=cfg.describe())
    lines = [f"{a} vs {b}  (gap = {a} - {b}, F1 points)"]
    for e in comparative_diagnose(T, a, b):
        labels = T.plans[e.attribute].labels
        parts = []
        for tag, k, v in (("max", e.high_bucket, e.high_value), ("min", e.low_bucket, e.low_value)):
            w = bucket_wilcoxon(T, a, b, e.attribute, k)
            p = "all-zero" if w.all_zero else f"p={w.p_value:.3g}"
            mark = "*" if not w.all_zero and w.p_value < cfg.alpha else " "
            parts.append(f"{tag} {e.attribute}:{labels[k]:<3} {100 * v:+6.1f} ({p}){mark}")
        lines.append("  ".join(parts))
    print("\n".join(lines))
    if cfg.formats:
        _emit(bundle, cfg, stem=f"compare_{a}_vs_{b}")
    return 0


def cmd_buckets(cfg: RunConfig) -> int:
    cfg.validate(need_preds=False)
    loaded = load_inputs(cfg)
    feat = loaded.featurizer
    gold = extract_spans(feat.corpus, None, cfg.scheme)
    if not gold:
        raise UsageError("the test corpus has no gold entities")
    plans = load_plans(cfg.plan) if cfg.plan and os.path.isfile(cfg.plan) else {}
    m = cfg.buckets_for()
    made = []
    for attr in cfg.attributes:
        values = [feat.span_value(s, attr) for s in gold]
        plan = plans.get(attr) or plan_buckets(attr, values, m[attr])
        made.append(plan)
        sizes = partition(values, plan).sizes()
        print(f"{attr} ({plan.strategy}), {len(plan)} buckets, {sum(sizes)} spans")
        for k, (label, iv, n) in enumerate(zip(plan.labels, plan.intervals, sizes)):
            print(f"  {label:<3} {iv.describe(k == len(plan) - 1):<28} {n}")
        for w in plan.warnings:
            print(f"  warning: {w}")
    if cfg.plan and not plans:
        save_plans(made, cfg.plan)
    return 0


def cmd_average(paths: list[str], out: str | None, names: list[str] | None) -> int:
    bundles = [load_json(p) for p in paths]
    summary = average_bundles(bundles, names)
    text = dumps(summary)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "summary.json").write_text(text, encoding="utf-8")
        print(Path(out) / "summary.json")
    else:
        sys.stdout.write(text)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file with defaults for these flags")
    p.add_argument("--train", help="training file (gold tags)")
    p.add_argument("--test", help="test file (gold tags, optionally prediction columns)")
    p.add_argument("--pred", action="append", default=[], metavar="NAME=PATH",
                   help="system predictions: NAME=PATH for a separate file, NAME=:COL for a test-file column")
    p.add_argument("--scheme", type=str.lower, choices=("bio", "bioes"))
    p.add_argument("--attributes", help=f"comma-separated subset of {','.join(ATTRIBUTES)}")
    p.add_argument("--buckets", help="bucket count N, or attr=N pairs, comma-separated")
    p.add_argument("--alpha", help="significance level (default 0.05)")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--format", action="append", default=[], help="json, md, csv (repeatable or comma list)")
    p.add_argument("--stats", help="training statistics JSON: read if present, otherwise written")
    p.add_argument("--plan", help="bucket plan JSON: read if present, otherwise written")
    p.add_argument("--tensor", help="performance tensor JSON: read if present, otherwise written")
    p.add_argument("--lowercase", action="store_const", const=True, default=None,
                   help="match surfaces case-insensitively")
    p.add_argument("--folds", help=f"sentence folds used as test blocks (default {DEFAULT_FOLDS})")
    p.add_argument("--token-col", help="token column (default 0)")
    p.add_argument("--gold-col", help="gold tag column (default -1, the last)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nerscope", description="Bucketed, attribute-aided NER evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("analyze", help="full report: overall, model-, attribute- and bucket-wise")
    _add_common(p)
    p = sub.add_parser("compare", help="comparative diagnosis of two systems")
    _add_common(p)
    p.add_argument("system_a")
    p.add_argument("system_b")
    p = sub.add_parser("buckets", help="print bucket plans and populations without scoring")
    _add_common(p)
    p = sub.add_parser("average", help="average model-wise measures over several report.json files")
    p.add_argument("reports", nargs="+")
    p.add_argument("--names", help="comma-separated dataset names")
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        if args.command == "average":
            names = args.names.split(",") if args.names else None
            return cmd_average(args.reports, args.out, names)
        cfg = build_config(args)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "compare":
            return cmd_compare(cfg, args.system_a, args.system_b)
        return cmd_buckets(cfg)
    except (UsageError, CorpusError, ValueError, OSError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"nerscope: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
