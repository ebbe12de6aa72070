"""Exact verification and explanation queries on compiled diagrams.

All quantities here are exact.  Counts are arbitrary-precision integers,
ratios are `fractions.Fraction`, and the robustness of a trivial function
is `math.inf` (a real sentinel, never a large integer, so it cannot
silently poison an average).

The robustness of an instance is the least number of input flips that
changes the classifier's label; the robustness of a whole function is
summarized by `RobustnessProfile`: exact per-level counts of how many
instances need exactly k flips, their sum of flips, and the normalizations
of that sum both by all 2**n instances and by the instances of the
polarity alone.  The per-level sets are computed by repeatedly conjoining
a function with both of its cofactors on every variable, which peels away
the instances that sit within one flip of the boundary.

A sufficient reason for an instance is a minimum-cardinality subset of its
bits that forces the classification no matter how the remaining bits are
filled in; `fooling_complete` exploits exactly that guarantee to build
adversarial-looking completions that provably keep the label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .obdd import NodeRef

POSITIVE = "positive"
NEGATIVE = "negative"
BOTH = "both"


class Unateness(str, Enum):
    POSITIVE = "pos"
    NEGATIVE = "neg"
    UNUSED = "unused"
    NONE = "none"


def _check_instance(x: Sequence[int], n: int) -> None:
    if len(x) != n:
        raise ValueError("instance has %d bits, expected %d" % (len(x), n))
    if any(b not in (0, 1) for b in x):
        raise ValueError("instance bits must be 0 or 1")


def _nontrivial(f: NodeRef) -> None:
    if f.is_terminal:
        raise ValueError("trivial function: every instance has infinite robustness")


def instance_robustness(f: NodeRef, x: Sequence[int]) -> int | float:
    """Least number of bit flips of ``x`` that changes the label; inf if trivial.

    Recurses on the diagram of the function (or its complement, so that the
    instance is always on the positive side): reaching FALSE costs nothing
    more, reaching TRUE means this branch never flips, and at a decision
    node the choice is between following the instance's own branch and
    paying one flip to follow the other.  Variables skipped by reduction
    never need flipping, so the recursion memoizes per node.
    """
    mgr = f.manager
    _check_instance(x, mgr.num_vars)
    if f.is_terminal:
        return math.inf
    g = f if mgr.evaluate(f, x) else mgr.negate(f)
    nodes = mgr._nodes
    memo: dict[int, int | float] = {0: 0, 1: math.inf}

    def walk(u: int) -> int | float:
        r = memo.get(u)
        if r is None:
            var, lo, hi = nodes[u]
            same, other = (hi, lo) if x[var] else (lo, hi)
            r = min(walk(same), 1 + walk(other))
            memo[u] = r
        return r

    return walk(g.i)


def robust_sets(f: NodeRef, n: int | None = None) -> list[NodeRef]:
    """Diagrams of the positive instances with robustness >= k, for k = 1, 2, ...

    The first entry is ``f`` itself; each next level conjoins, over every
    variable, both cofactors of the previous level, keeping only instances
    that stay positive under any single flip.  The list stops before the
    first unsatisfiable level, which for a non-trivial function arrives
    after at most n steps.
    """
    mgr = f.manager
    _nontrivial(f)
    if n is None:
        n = mgr.num_vars
    elif n < mgr.num_vars:
        sup = mgr.support(f)
        if sup and max(sup) >= n:
            raise ValueError(
                "function depends on variable %d, beyond n=%d" % (max(sup), n)
            )
    levels = [f]
    g = f
    for _ in range(n + 1):
        nxt = mgr.true
        for v in range(n):
            nxt = nxt & (mgr.condition(g, v, 1) & mgr.condition(g, v, 0))
            if nxt.is_false:
                break
        if nxt.is_false:
            return levels
        levels.append(nxt)
        g = nxt
    raise AssertionError("robustness levels failed to shrink to FALSE")


@dataclass(frozen=True)
class PolaritySummary:
    """Exact robustness tallies for the instances of one label."""

    polarity: str
    num_vars: int
    counts: tuple[tuple[int, int], ...]  # (k, number of instances with robustness k)

    @property
    def instance_count(self) -> int:
        return sum(c for _, c in self.counts)

    @property
    def flip_sum(self) -> int:
        """Total flips over the polarity's instances: sum of k * count(k)."""
        return sum(k * c for k, c in self.counts)

    @property
    def max_robustness(self) -> int:
        return max((k for k, c in self.counts if c), default=0)

    @property
    def mean_over_all(self) -> Fraction:
        """Flip sum normalized by all 2**n instances."""
        return Fraction(self.flip_sum, 2**self.num_vars)

    @property
    def mean_over_polarity(self) -> Fraction:
        """Flip sum normalized by the polarity's own instance count."""
        return Fraction(self.flip_sum, self.instance_count)


@dataclass(frozen=True)
class RobustnessProfile:
    num_vars: int
    positive: PolaritySummary | None
    negative: PolaritySummary | None

    @property
    def mr(self) -> Fraction:
        """Sum of flips over the covered polarities, normalized by 2**n."""
        total = 0
        for side in (self.positive, self.negative):
            if side is not None:
                total += side.flip_sum
        return Fraction(total, 2**self.num_vars)

    @property
    def maxr(self) -> int:
        return max(
            side.max_robustness
            for side in (self.positive, self.negative)
            if side is not None
        )


def polarity_summary(f: NodeRef, n: int, polarity: str) -> PolaritySummary:
    """Exact per-level robustness counts for one polarity of ``f``."""
    mgr = f.manager
    g = f if polarity == POSITIVE else mgr.negate(f)
    levels = robust_sets(g, n)
    sizes = [mgr.model_count(level, n) for level in levels]
    sizes.append(0)  # the level after the last satisfiable one is empty
    counts = tuple(
        (k, sizes[k - 1] - sizes[k])
        for k in range(1, len(levels) + 1)
        if sizes[k - 1] - sizes[k]
    )
    return PolaritySummary(polarity, n, counts)


def model_robustness(
    f: NodeRef, n: int | None = None, polarity: str = BOTH
) -> RobustnessProfile:
    """Exact robustness profile of a non-trivial function.

    ``polarity`` selects whose instances are tallied: the positive ones,
    the negative ones (the same computation on the complement), or both.
    """
    _nontrivial(f)
    if n is None:
        n = f.manager.num_vars
    if polarity not in (POSITIVE, NEGATIVE, BOTH):
        raise ValueError("polarity must be 'positive', 'negative' or 'both'")
    pos = polarity_summary(f, n, POSITIVE) if polarity in (POSITIVE, BOTH) else None
    neg = polarity_summary(f, n, NEGATIVE) if polarity in (NEGATIVE, BOTH) else None
    return RobustnessProfile(n, pos, neg)


def max_robustness(f: NodeRef, n: int | None = None) -> int:
    """Largest robustness among the positive instances.

    Equals the number of satisfiable robustness levels; the level chain can
    be abandoned as soon as one level empties out.
    """
    _nontrivial(f)
    return len(robust_sets(f, n))


def robustness_histogram(
    f: NodeRef, n: int | None = None, polarity: str = POSITIVE
) -> dict[int, Fraction]:
    """Per-level proportions: instances with robustness exactly k over 2**n."""
    _nontrivial(f)
    if n is None:
        n = f.manager.num_vars
    if polarity not in (POSITIVE, NEGATIVE):
        raise ValueError("histogram polarity must be 'positive' or 'negative'")
    summary = polarity_summary(f, n, polarity)
    return {k: Fraction(c, 2**n) for k, c in summary.counts}


# ------------------------------------------------------------ explanations


@dataclass(frozen=True)
class Explanation:
    """A minimum-cardinality sufficient reason for one classification."""

    literals: tuple[tuple[int, int], ...]  # (variable, bit), ascending variables
    label: int

    @property
    def cardinality(self) -> int:
        return len(self.literals)

    def as_dict(self) -> dict[int, int]:
        return dict(self.literals)


def pi_explanation(f: NodeRef, x: Sequence[int]) -> Explanation:
    """Smallest subset of ``x`` that forces its classification.

    Works on the function or its complement so the instance is positive,
    then minimizes over each decision variable the cheaper of keeping the
    instance's literal (one more committed bit) and releasing the variable
    entirely, which requires the conjunction of both cofactors to still be
    forced.  Among equal-cardinality witnesses the lower-indexed variable
    is committed first, so the result is deterministic.
    """
    mgr = f.manager
    _check_instance(x, mgr.num_vars)
    _nontrivial(f)
    label = mgr.evaluate(f, x)
    g = f if label else mgr.negate(f)
    nodes = mgr._nodes
    cost: dict[int, int | float] = {1: 0, 0: math.inf}
    include: dict[int, bool] = {}

    def best(u: int) -> int | float:
        r = cost.get(u)
        if r is None:
            var = nodes[u][0]
            committed = 1 + best(mgr._cond_id(u, var, x[var]))
            released = best(
                mgr._apply_id("and", mgr._cond_id(u, var, 0), mgr._cond_id(u, var, 1))
            )
            if committed <= released:
                cost[u] = committed
                include[u] = True
            else:
                cost[u] = released
                include[u] = False
            r = cost[u]
        return r

    total = best(g.i)
    literals: list[tuple[int, int]] = []
    u = g.i
    while u != 1:
        var = nodes[u][0]
        if include[u]:
            literals.append((var, x[var]))
            u = mgr._cond_id(u, var, x[var])
        else:
            u = mgr._apply_id(
                "and", mgr._cond_id(u, var, 0), mgr._cond_id(u, var, 1)
            )
    assert len(literals) == total
    return Explanation(tuple(literals), label)


def fooling_complete(
    f: NodeRef,
    reason: Explanation | Mapping[int, int] | Iterable[tuple[int, int]],
    fill: Sequence[int],
) -> tuple[int, ...]:
    """Extend a sufficient reason with arbitrary filler bits.

    The filler may be crafted to *look* like the opposite class; because
    the reason already forces the classification, the returned instance is
    still classified the same way, which is verified before returning.
    """
    mgr = f.manager
    _check_instance(fill, mgr.num_vars)
    if isinstance(reason, Explanation):
        pairs = dict(reason.literals)
    elif isinstance(reason, Mapping):
        pairs = dict(reason)
    else:
        pairs = {}
        for var, bit in reason:
            if var in pairs:
                raise ValueError("variable %d assigned twice" % var)
            pairs[var] = bit
    g = f
    for var, bit in pairs.items():
        if not 0 <= var < mgr.num_vars or bit not in (0, 1):
            raise ValueError("bad literal (%r, %r)" % (var, bit))
        g = mgr.condition(g, var, bit)
    if g.is_true:
        label = 1
    elif g.is_false:
        label = 0
    else:
        raise ValueError("the given assignment is not a sufficient reason")
    out = tuple(pairs.get(v, fill[v]) for v in range(mgr.num_vars))
    assert mgr.evaluate(f, out) == label
    return out


# ------------------------------------------------------- per-variable views


def marginal(f: NodeRef, var: int, n: int | None = None) -> Fraction:
    """Probability that ``var`` is 1 among the satisfying instances."""
    mgr = f.manager
    if not mgr.is_sat(f):
        raise ValueError("marginals of an unsatisfiable function are undefined")
    if n is None:
        n = mgr.num_vars
    on = mgr.model_count(mgr.condition(f, var, 1), n)
    return Fraction(on, 2 * mgr.model_count(f, n))


def unateness(f: NodeRef, var: int) -> Unateness:
    """How flipping ``var`` from 0 to 1 can move the output, if at all."""
    mgr = f.manager
    c0 = mgr.condition(f, var, 0)
    c1 = mgr.condition(f, var, 1)
    if c0 == c1:
        return Unateness.UNUSED
    if not mgr.is_sat(c0 & ~c1):
        return Unateness.POSITIVE
    if not mgr.is_sat(c1 & ~c0):
        return Unateness.NEGATIVE
    return Unateness.NONE


def marginal_grid(
    f: NodeRef, height: int, width: int, n: int | None = None
) -> list[tuple[int, int, int, Fraction]]:
    """(var, row, col, marginal) rows for a raster-ordered pixel grid."""
    _check_grid(f, height, width)
    return [
        (r * width + c, r, c, marginal(f, r * width + c, n))
        for r in range(height)
        for c in range(width)
    ]


def unateness_grid(
    f: NodeRef, height: int, width: int
) -> list[tuple[int, int, int, Unateness]]:
    """(var, row, col, unateness) rows for a raster-ordered pixel grid."""
    _check_grid(f, height, width)
    return [
        (r * width + c, r, c, unateness(f, r * width + c))
        for r in range(height)
        for c in range(width)
    ]


def _check_grid(f: NodeRef, height: int, width: int) -> None:
    if height * width != f.manager.num_vars:
        raise ValueError(
            "grid %dx%d does not cover %d variables"
            % (height, width, f.manager.num_vars)
        )


def dataset_average_robustness(f: NodeRef, dataset) -> Fraction:
    """Mean instance robustness over dataset rows (features only)."""
    _nontrivial(f)
    rows = dataset.features.tolist() if hasattr(dataset, "features") else list(dataset)
    if not rows:
        raise ValueError("empty dataset")
    total = 0
    for row in rows:
        total += instance_robustness(f, row)
    return Fraction(total, len(rows))
