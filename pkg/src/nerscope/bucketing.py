"""Splitting attribute values into buckets.

Each attribute has its own interval strategy:

* ``isolate-both-ends`` (eCon, tCon): value 0 alone in the first bucket,
  value 1 alone in the last, the rest split by population into ``m - 2``.
* ``isolate-zero`` (eFre, tFre, oDen): value 0 alone in the first bucket,
  the rest split by population into ``m - 1``.
* ``equal-population`` (sLen, eDen): population split into ``m``.
* ``fixed-lengths`` (eLen): lengths 1, 2, 3 and 4 or more.

Intervals are half-open ``[lo, hi)``; the last one is closed.  Equal
population cuts always fall between distinct values, so tied items never
end up in different buckets.
"""

from __future__ import annotations

import bisect
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

STRATEGIES = {
    "eCon": "isolate-both-ends",
    "tCon": "isolate-both-ends",
    "eFre": "isolate-zero",
    "tFre": "isolate-zero",
    "oDen": "isolate-zero",
    "sLen": "equal-population",
    "eDen": "equal-population",
    "eLen": "fixed-lengths",
}
SIZE_LABELS = ("XS", "S", "L", "XL")
DEFAULT_M = 4
# smallest float above zero: upper edge of a bucket that holds exactly 0
_ABOVE_ZERO = math.nextafter(0.0, 1.0)


class BucketingError(ValueError):
    pass


class TooFewDistinctValues(BucketingError):
    """Raised only in strict mode; by default the plan shrinks instead."""


def bucket_labels(n: int) -> tuple[str, ...]:
    return SIZE_LABELS if n == 4 else tuple(f"B{i}" for i in range(1, n + 1))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float  # math.inf for an unbounded last interval

    def __post_init__(self):
        if self.lo > self.hi:
            raise BucketingError(f"interval [{self.lo}, {self.hi}] is reversed")

    def describe(self, last: bool = False) -> str:
        hi = "inf" if math.isinf(self.hi) else f"{self.hi:g}"
        return f"[{self.lo:g}, {hi}{']' if last else ')'}"


@dataclass(frozen=True)
class BucketPlan:
    attribute: str
    intervals: tuple[Interval, ...]
    labels: tuple[str, ...]
    strategy: str
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.labels) != len(self.intervals):
            raise BucketingError("one label per interval required")
        for a, b in zip(self.intervals, self.intervals[1:]):
            if a.hi != b.lo:
                raise BucketingError("intervals must be contiguous and sorted")

    def __len__(self) -> int:
        return len(self.intervals)

    @cached_property
    def edges(self) -> list[float]:
        return [iv.lo for iv in self.intervals[1:]]

    def to_json(self) -> dict:
        return {
            "attribute": self.attribute,
            "strategy": self.strategy,
            "labels": list(self.labels),
            "boundaries": [[iv.lo, None if math.isinf(iv.hi) else iv.hi] for iv in self.intervals],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BucketPlan":
        ivs = tuple(Interval(lo, math.inf if hi is None else hi) for lo, hi in doc["boundaries"])
        return cls(doc["attribute"], ivs, tuple(doc["labels"]), doc["strategy"])


def save_plans(plans: Iterable[BucketPlan], path) -> None:
    doc = {"version": 1, "plans": [p.to_json() for p in plans]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def load_plans(path) -> dict[str, BucketPlan]:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    return {p["attribute"]: BucketPlan.from_json(p) for p in doc["plans"]}


def _population_cuts(values: Sequence[float], q: int) -> list[float]:
    """Values at which each of up to ``q`` equal-population groups starts.

    Returns the starting value of every group after the first.  Ties are kept
    together, so fewer than ``q`` groups come back when there are not enough
    distinct values.
    """
    counts = sorted(Counter(values).items())
    distinct = [v for v, _ in counts]
    q = min(q, len(distinct))
    if q <= 1:
        return []
    cum = []
    running = 0
    for _, c in counts:
        running += c
        cum.append(running)
    total = running
    cuts = []
    prev = 0  # number of distinct values already used
    for r in range(1, q):
        target = r * total / q
        # a group boundary after distinct index i (exclusive) for i in [prev+1, limit]
        limit = len(distinct) - (q - r)
        best = None
        for i in range(prev + 1, limit + 1):
            dev = abs(cum[i - 1] - target)
            if best is None or dev < best[0]:
                best = (dev, i)
            elif cum[i - 1] > target:
                break
        prev = best[1]
        cuts.append(distinct[prev])
    return cuts


def plan_buckets(attr: str, values: Iterable[float], m: int = DEFAULT_M, strict: bool = False) -> BucketPlan:
    values = sorted(values)
    if not values:
        raise BucketingError(f"{attr}: no values to bucket")
    strategy = STRATEGIES.get(attr)
    if strategy is None:
        raise BucketingError(f"unknown attribute {attr!r}")
    if strategy == "fixed-lengths":
        ivs = (Interval(1, 2), Interval(2, 3), Interval(3, 4), Interval(4, math.inf))
        return BucketPlan(attr, ivs, SIZE_LABELS, strategy)
    if m < 2:
        raise BucketingError("need at least 2 buckets")

    warnings = []
    if strategy == "equal-population":
        starts = [values[0]] + _population_cuts(values, m)
    else:
        has_zero = values[0] == 0
        has_one = strategy == "isolate-both-ends" and values[-1] == 1
        middle_q = m - 1 if strategy == "isolate-zero" else m - 2
        if middle_q < 1:
            # m == 2 under isolate-both-ends: ones join the non-zero bucket
            has_one, middle_q = False, 1
            warnings.append(f"{attr}: m={m} too small to isolate value 1")
        middle = [v for v in values if v != 0 and not (has_one and v == 1)]
        starts = []
        if has_zero:
            starts.append(0.0)
        else:
            warnings.append(f"{attr}: no zero-valued items")
        if middle:
            mids = [middle[0]] + _population_cuts(middle, middle_q)
            if has_zero:
                mids[0] = _ABOVE_ZERO
            starts.extend(mids)
        if has_one:
            starts.append(1.0)
        elif strategy == "isolate-both-ends":
            warnings.append(f"{attr}: no items with value 1")
    bounds = starts + [values[-1]]
    ivs = tuple(Interval(a, b) for a, b in zip(bounds, bounds[1:]))
    if len(ivs) < m:
        msg = f"{attr}: only {len(ivs)} non-empty buckets possible, {m} requested"
        if strict:
            raise TooFewDistinctValues(msg)
        warnings.append(msg)
        log.warning(msg)
    return BucketPlan(attr, ivs, bucket_labels(len(ivs)), strategy, tuple(warnings))


def _locate(value: float, plan: BucketPlan) -> tuple[int, bool]:
    if value < plan.intervals[0].lo:
        return 0, True
    if value > plan.intervals[-1].hi:
        return len(plan.intervals) - 1, True
    return bisect.bisect_right(plan.edges, value), False


def assign(value: float, plan: BucketPlan) -> int:
    """Index of the bucket holding ``value``; out-of-range values go to the nearest end."""
    k, clamped = _locate(value, plan)
    if clamped:
        log.warning("%s: value %g outside the planned range, clamped to bucket %d",
                    plan.attribute, value, k + 1)
    return k


@dataclass(frozen=True)
class Partition:
    plan: BucketPlan
    members: tuple[tuple[int, ...], ...]  # item indices per bucket
    clamped: int = 0

    def sizes(self) -> list[int]:
        return [len(b) for b in self.members]

    def bucket_of(self) -> dict[int, int]:
        return {i: k for k, bucket in enumerate(self.members) for i in bucket}


def partition(values: Sequence[float], plan: BucketPlan) -> Partition:
    members: list[list[int]] = [[] for _ in plan.intervals]
    clamped = 0
    for i, v in enumerate(values):
        k, out = _locate(v, plan)
        clamped += out
        members[k].append(i)
    if clamped:
        log.warning("%s: %d value(s) outside the planned range were clamped", plan.attribute, clamped)
    return Partition(plan, tuple(tuple(b) for b in members), clamped)


def bucket_test_set(items, attr: str, featurizer, m: int = DEFAULT_M,
                    plan: BucketPlan | None = None, fit_items=None) -> Partition:
    """Bucket spans by ``attr``.

    The plan is fitted on ``fit_items`` (defaults to ``items``) unless one is
    given; every item in ``items`` is then assigned under it.
    """
    values = [featurizer.span_value(s, attr) for s in items]
    if plan is None:
        fit = values if fit_items is None else [featurizer.span_value(s, attr) for s in fit_items]
        plan = plan_buckets(attr, fit, m)
    return partition(values, plan)
