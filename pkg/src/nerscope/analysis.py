"""Performance tensor and the model-, attribute- and bucket-wise measures built on it.

The tensor holds, for every (system, attribute, bucket), the bucket's
precision/recall/F1, or ``None`` where the bucket has no gold entities.  To
give the Friedman and Wilcoxon tests more than one observation per bucket,
the test sentences are also split into ``folds`` interleaved groups
(sentence index modulo ``folds``) and bucket F1 is recomputed inside each
group under the same plan.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from statistics import fmean, pstdev
from typing import Mapping, Sequence

from . import stats
from .attributes import ATTRIBUTES, TOKEN_NATIVE, Featurizer, check_attributes
from .bucketing import DEFAULT_M, BucketPlan, Partition, partition, plan_buckets
from .corpus import Span, extract_spans
from .metrics import PRF, bucket_prf, matched, micro_f1

TENSOR_VERSION = 1
DEFAULT_FOLDS = 10


class InsufficientBuckets(ValueError):
    pass


@dataclass
class PerformanceTensor:
    systems: list[str]
    attributes: list[str]
    plans: dict[str, BucketPlan]
    prf: dict[str, dict[str, list[PRF | None]]]  # system -> attribute -> bucket
    fold_f1: dict[str, dict[str, list[list[float | None]]]]  # system -> attribute -> fold -> bucket
    gold_sizes: dict[str, list[int]]
    overall: dict[str, PRF]
    zeta: dict[str, float] = field(default_factory=dict)
    zeta_token: dict[str, float] = field(default_factory=dict)
    folds: int = DEFAULT_FOLDS

    def values(self, system: str, attr: str) -> list[float | None]:
        return [None if c is None else c.f1 for c in self.prf[system][attr]]

    def labels(self, attr: str) -> tuple[str, ...]:
        return self.plans[attr].labels

    def shape(self) -> tuple[int, int, list[int]]:
        return len(self.systems), len(self.attributes), [len(self.plans[a]) for a in self.attributes]

    def to_json(self) -> dict:
        def prf(c):
            return None if c is None else c.as_dict()
        return {
            "version": TENSOR_VERSION,
            "systems": list(self.systems),
            "attributes": list(self.attributes),
            "folds": self.folds,
            "plans": {a: self.plans[a].to_json() for a in self.attributes},
            "gold_sizes": {a: self.gold_sizes[a] for a in self.attributes},
            "zeta": {a: self.zeta[a] for a in self.attributes if a in self.zeta},
            "zeta_token": {a: self.zeta_token[a] for a in self.attributes if a in self.zeta_token},
            "overall": {s: self.overall[s].as_dict() for s in self.systems},
            "buckets": {s: {a: [prf(c) for c in self.prf[s][a]] for a in self.attributes}
                        for s in self.systems},
            "fold_f1": {s: {a: self.fold_f1[s][a] for a in self.attributes} for s in self.systems},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PerformanceTensor":
        if doc.get("version") != TENSOR_VERSION:
            raise ValueError(f"unsupported tensor version {doc.get('version')!r}")

        def prf(d):
            if d is None:
                return None
            return PRF(d["tp"], d["n_pred"], d["n_gold"], d["precision"], d["recall"], d["f1"])
        systems = doc["systems"]
        attrs = doc["attributes"]
        return cls(
            systems=systems,
            attributes=attrs,
            plans={a: BucketPlan.from_json(doc["plans"][a]) for a in attrs},
            prf={s: {a: [prf(c) for c in doc["buckets"][s][a]] for a in attrs} for s in systems},
            fold_f1=doc["fold_f1"],
            gold_sizes=doc["gold_sizes"],
            overall={s: prf(doc["overall"][s]) for s in systems},
            zeta=doc.get("zeta", {}),
            zeta_token=doc.get("zeta_token", {}),
            folds=doc["folds"],
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "PerformanceTensor":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def _restrict(part: Partition, keep: Sequence[bool]) -> Partition:
    return Partition(part.plan, tuple(tuple(i for i in b if keep[i]) for b in part.members))


def build_tensor(featurizer: Featurizer, systems: Sequence[str] | None = None,
                 attributes: Sequence[str] = ATTRIBUTES, m: int | Mapping[str, int] = DEFAULT_M,
                 plans: Mapping[str, BucketPlan] | None = None, folds: int = DEFAULT_FOLDS,
                 ) -> PerformanceTensor:
    """Score every system on every attribute's buckets.

    Plans are fitted on gold-span values (unless given in ``plans``) and
    predicted spans are assigned under the same plan.
    """
    corpus = featurizer.corpus
    scheme = featurizer.scheme
    attributes = list(check_attributes(attributes))
    systems = list(corpus.systems if systems is None else systems)
    if folds < 1:
        raise ValueError("folds must be positive")
    gold = extract_spans(corpus, None, scheme)
    if not gold:
        raise ValueError("the test corpus has no gold entities")
    preds = {s: extract_spans(corpus, s, scheme) for s in systems}
    gold_fold = [s.sentence_index % folds for s in gold]
    pred_fold = {s: [p.sentence_index % folds for p in preds[s]] for s in systems}

    out_plans: dict[str, BucketPlan] = {}
    gold_sizes = {}
    prf = {s: {} for s in systems}
    fold_f1 = {s: {} for s in systems}
    zeta = {}
    zeta_token = {}
    for attr in attributes:
        gvals = [featurizer.span_value(s, attr) for s in gold]
        zeta[attr] = fmean(gvals)
        zeta_token[attr] = attribute_zeta(gold, attr, featurizer, level="token")
        plan = plans.get(attr) if plans else None
        if plan is None:
            k = m if isinstance(m, int) else m.get(attr, DEFAULT_M)
            plan = plan_buckets(attr, gvals, k)
        out_plans[attr] = plan
        gpart = partition(gvals, plan)
        gold_sizes[attr] = gpart.sizes()
        for sysname in systems:
            pred = preds[sysname]
            hits = matched(gold, pred)
            ppart = partition([featurizer.span_value(p, attr) for p in pred], plan)
            prf[sysname][attr] = bucket_prf(gpart, ppart, gold, pred, hits)
            rows = []
            for f in range(folds):
                g_keep = [x == f for x in gold_fold]
                p_keep = [x == f for x in pred_fold[sysname]]
                cells = bucket_prf(_restrict(gpart, g_keep), _restrict(ppart, p_keep), gold, pred, hits)
                rows.append([None if c is None else c.f1 for c in cells])
            fold_f1[sysname][attr] = rows
    overall = {s: micro_f1(gold, preds[s]) for s in systems}
    return PerformanceTensor(systems, attributes, out_plans, prf, fold_f1, gold_sizes,
                             overall, zeta, zeta_token, folds)


# model-wise

@dataclass(frozen=True)
class ModelWiseRow:
    system: str
    attribute: str
    spearman: float | None
    std: float | None
    p_value: float | None
    significant: bool


def bucket_ranks(n: int) -> list[int]:
    """Rank of each bucket: 1 for the lowest attribute interval."""
    return list(range(1, n + 1))


def spearman_vs_rank(values: Sequence[float | None]) -> float:
    ranks = bucket_ranks(len(values))
    pairs = [(v, r) for v, r in zip(values, ranks) if v is not None]
    if len(pairs) < 3:
        raise InsufficientBuckets(f"{len(pairs)} non-empty buckets; Spearman needs 3")
    return stats.spearman_rho([v for v, _ in pairs], [r for _, r in pairs])


def population_std(values: Sequence[float | None]) -> float:
    present = [v for v in values if v is not None]
    if len(present) < 2:
        raise InsufficientBuckets("standard deviation needs 2 non-empty buckets")
    return pstdev(present)


def model_wise(T: PerformanceTensor, system: str, attr: str) -> tuple[float | None, float | None]:
    """Spearman correlation of bucket F1 with bucket rank, and the spread of bucket F1.

    Either value is ``None`` when too few buckets are filled (or, for the
    correlation, when every bucket scores the same).
    """
    row = T.values(system, attr)
    try:
        rho = spearman_vs_rank(row)
    except (InsufficientBuckets, stats.DegenerateInput):
        rho = None
    try:
        sd = population_std(row)
    except InsufficientBuckets:
        sd = None
    return rho, sd


def _complete_blocks(rows, columns):
    out = []
    for row in rows:
        vals = [row[k] for k in columns]
        if all(v is not None for v in vals):
            out.append(vals)
    return out


def friedman_for(T: PerformanceTensor, attr: str, systems: Sequence[str]) -> stats.TestResult | None:
    """Friedman test over buckets of ``attr`` with (system, fold) rows as blocks.

    Only buckets filled in the full tensor take part, and only blocks where
    all of them are filled.  ``None`` when the test cannot run.
    """
    columns = [k for k, n in enumerate(T.gold_sizes[attr]) if n > 0]
    blocks = []
    for s in systems:
        blocks += _complete_blocks(T.fold_f1[s][attr], columns)
    try:
        return stats.friedman_test(blocks)
    except stats.StatsError:
        return None


def model_wise_table(T: PerformanceTensor, alpha: float = 0.05) -> list[ModelWiseRow]:
    rows = []
    for s in T.systems:
        for a in T.attributes:
            rho, sd = model_wise(T, s, a)
            test = friedman_for(T, a, [s])
            p = None if test is None else test.p_value
            rows.append(ModelWiseRow(s, a, rho, sd, p, p is not None and p < alpha))
    return rows


# attribute-wise

def attribute_zeta(items: Sequence[Span], attr: str, featurizer: Featurizer, level: str = "entity") -> float:
    """Mean attribute value over test entities.

    With ``level="token"`` the token-native attributes are averaged over the
    individual tokens of the entities instead of per entity.
    """
    if not items:
        raise ValueError("no test entities")
    if level == "entity" or attr not in TOKEN_NATIVE:
        return fmean(featurizer.span_value(s, attr) for s in items)
    if level != "token":
        raise ValueError(f"level must be 'entity' or 'token', not {level!r}")
    vals = [featurizer.token_value(s.sentence_index, i, attr, s.label)
            for s in items for i in range(s.start, s.end)]
    return fmean(vals)


def normalize_zeta(per_dataset: Sequence[Mapping[str, float]]) -> list[dict[str, float]]:
    """Divide each attribute's value by its maximum over the datasets given."""
    attrs = {a for d in per_dataset for a in d}
    peak = {a: max(d.get(a, 0.0) for d in per_dataset) for a in attrs}
    return [{a: (v / peak[a] if peak[a] > 0 else 0.0) for a, v in d.items()} for d in per_dataset]


def attribute_rho(T: PerformanceTensor, attr: str) -> float | None:
    """Mean absolute Spearman correlation over the systems where it is defined."""
    vals = [model_wise(T, s, attr)[0] for s in T.systems]
    vals = [abs(v) for v in vals if v is not None]
    return fmean(vals) if vals else None


# bucket-wise

@dataclass(frozen=True)
class DiagnosisEntry:
    attribute: str
    high_bucket: int  # best bucket, or bucket of largest gap
    low_bucket: int
    high_value: float
    low_value: float
    tied: bool = False
    kind: str = "self"

    @property
    def gap(self) -> float:
        return self.high_value - self.low_value


def _arg_extremes(values: Sequence[float | None]):
    present = [(k, v) for k, v in enumerate(values) if v is not None]
    if not present:
        return None
    hi = max(v for _, v in present)
    lo = min(v for _, v in present)
    hi_k = [k for k, v in present if v == hi]
    lo_k = [k for k, v in present if v == lo]
    return hi_k[0], lo_k[0], hi, lo, len(hi_k) > 1 or len(lo_k) > 1


def self_diagnose(T: PerformanceTensor, system: str) -> list[DiagnosisEntry]:
    out = []
    for a in T.attributes:
        ext = _arg_extremes(T.values(system, a))
        if ext is not None:
            out.append(DiagnosisEntry(a, *ext, kind="self"))
    return out


def gaps(T: PerformanceTensor, m1: str, m2: str, attr: str) -> list[float | None]:
    return [None if a is None or b is None else a - b
            for a, b in zip(T.values(m1, attr), T.values(m2, attr))]


def comparative_diagnose(T: PerformanceTensor, m1: str, m2: str) -> list[DiagnosisEntry]:
    """Per attribute, the buckets where ``m1 - m2`` in F1 is largest and smallest."""
    for s in (m1, m2):
        if s not in T.systems:
            raise KeyError(s)
    out = []
    for a in T.attributes:
        ext = _arg_extremes(gaps(T, m1, m2, a))
        if ext is not None:
            out.append(DiagnosisEntry(a, *ext, kind="comparative"))
    return out


def bucket_wilcoxon(T: PerformanceTensor, m1: str, m2: str, attr: str, bucket: int) -> stats.TestResult:
    """Signed-rank test of the two systems' per-fold F1 in one bucket."""
    a = T.fold_f1[m1][attr]
    b = T.fold_f1[m2][attr]
    pairs = [(x[bucket], y[bucket]) for x, y in zip(a, b)
             if x[bucket] is not None and y[bucket] is not None]
    return stats.wilcoxon_signed_rank([x for x, _ in pairs], [y for _, y in pairs])


def dataset_significance(T: PerformanceTensor, alpha: float = 0.05) -> dict[str, float | None]:
    """Friedman p per attribute with all systems' folds pooled as blocks."""
    out = {}
    for a in T.attributes:
        test = friedman_for(T, a, T.systems)
        out[a] = None if test is None else test.p_value
    return out
