"""Threshold-unit neurons and their compilation to diagrams.

A neuron with binary inputs and a step activation is just a linear
threshold classifier: it fires exactly when a weighted sum of its input
bits reaches a threshold.  Two representations are used here.
`LinearThresholdUnit` carries real weights and a bias (fires when
``sum(w*x) + bias >= 0``); `IntThresholdUnit` carries integer weights and
an explicit threshold (fires when ``sum(w*x) >= threshold``).

Real parameters are everywhere interpreted at their printed decimal value:
a weight written 1.15 means the rational 115/100 exactly, not the nearest
binary float.  Without this, scaling 1.15 by 100 would truncate to 114.
`exact_decimal` implements the convention and the quantizer, the exact
compiler and `fires` all go through it.

Two compilers are provided.  `compile_pseudo` builds the diagram of an
integer unit by dynamic programming over residual thresholds: processing
inputs top-down, every partial assignment is summarized by the threshold
still to be met, residuals that can no longer fail resolve to TRUE and
residuals that can no longer succeed resolve to FALSE, and each remaining
(level, residual) cell becomes one decision node.  The work and the
reduced node count are bounded by ``n * (2W + 1)`` cells, where W is the
magnitude ``|T| + sum(|w|)``.  `compile_exact` is the reference compiler:
a memoized Shannon expansion on exact rational residuals, capped to small
arities, used as an oracle for the pseudo-polynomial route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Sequence, Union

from .obdd import Manager, NodeRef

_INT_LIMIT = 2**63


class QuantizationError(ValueError):
    """Scaled parameters left the supported integer range."""


def exact_decimal(value) -> Fraction:
    """Exact rational of a number's printed decimal form."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


@dataclass(frozen=True)
class LinearThresholdUnit:
    """A neuron in bias form: fires iff ``sum(w_i * x_i) + bias >= 0``."""

    weights: tuple[float, ...]
    bias: float

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "bias", float(self.bias))
        if not all(math.isfinite(w) for w in self.weights) or not math.isfinite(
            self.bias
        ):
            raise ValueError("weights and bias must be finite")

    @property
    def arity(self) -> int:
        return len(self.weights)

    def activation(self, x: Sequence[int]) -> float:
        """Pre-activation value in float arithmetic (training-side view)."""
        if len(x) != self.arity:
            raise ValueError("instance width mismatch")
        return sum(w * b for w, b in zip(self.weights, x)) + self.bias

    def fires(self, x: Sequence[int]) -> int:
        """Step output on one instance, decided in exact decimal arithmetic."""
        if len(x) != self.arity:
            raise ValueError("instance width mismatch")
        total = sum(
            (exact_decimal(w) for w, b in zip(self.weights, x) if b),
            start=Fraction(0),
        )
        return 1 if total + exact_decimal(self.bias) >= 0 else 0


@dataclass(frozen=True)
class ThresholdForm:
    """A unit rewritten with the bias folded into an explicit threshold."""

    weights: tuple[float, ...]
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "threshold", float(self.threshold))

    @property
    def arity(self) -> int:
        return len(self.weights)

    def fires(self, x: Sequence[int]) -> int:
        if len(x) != self.arity:
            raise ValueError("instance width mismatch")
        total = sum(
            (exact_decimal(w) for w, b in zip(self.weights, x) if b),
            start=Fraction(0),
        )
        return 1 if total >= exact_decimal(self.threshold) else 0


@dataclass(frozen=True)
class IntThresholdUnit:
    """Integer-weight classifier: fires iff ``sum(w_i * x_i) >= threshold``."""

    weights: tuple[int, ...]
    threshold: int

    def __post_init__(self):
        if not all(isinstance(w, int) for w in self.weights):
            raise ValueError("weights must be integers")
        if not isinstance(self.threshold, int):
            raise ValueError("threshold must be an integer")
        object.__setattr__(self, "weights", tuple(self.weights))

    @property
    def arity(self) -> int:
        return len(self.weights)

    @property
    def magnitude(self) -> int:
        """``|threshold| + sum(|w|)``, the size parameter of the compiler bound."""
        return abs(self.threshold) + sum(abs(w) for w in self.weights)

    def fires(self, x: Sequence[int]) -> int:
        if len(x) != self.arity:
            raise ValueError("instance width mismatch")
        return 1 if sum(w for w, b in zip(self.weights, x) if b) >= self.threshold else 0


def to_threshold_form(unit: LinearThresholdUnit) -> ThresholdForm:
    """Fold the bias: fires iff the weighted sum reaches ``-bias``."""
    return ThresholdForm(unit.weights, -unit.bias)


def quantize(
    unit: LinearThresholdUnit | ThresholdForm,
    digits: int,
    mode: str = "truncate",
) -> IntThresholdUnit:
    """Scale parameters by ``10**digits`` and round to an integer unit.

    ``truncate`` rounds toward zero (the default); ``nearest`` uses
    round-half-even.  Raises `QuantizationError` when a scaled parameter
    leaves the supported integer range.
    """
    if not isinstance(digits, int) or not 0 <= digits <= 9:
        raise ValueError("digits must be an integer in 0..9")
    if mode not in ("truncate", "nearest"):
        raise ValueError("mode must be 'truncate' or 'nearest'")
    if isinstance(unit, LinearThresholdUnit):
        unit = to_threshold_form(unit)
    scale = 10**digits

    def scaled(value: float) -> int:
        exact = exact_decimal(value) * scale
        n = int(exact) if mode == "truncate" else round(exact)
        if abs(n) > _INT_LIMIT:
            raise QuantizationError(
                "parameter %r scales beyond the integer range at %d digits"
                % (value, digits)
            )
        return n

    return IntThresholdUnit(
        tuple(scaled(w) for w in unit.weights), scaled(unit.threshold)
    )


def _resolve_order(order, n: int) -> tuple[int, ...]:
    if order is None:
        return tuple(range(n))
    order = tuple(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the %d inputs" % n)
    return order


def compile_pseudo(
    unit: IntThresholdUnit,
    manager: Manager,
    order: Sequence[int] | None = None,
) -> NodeRef:
    """Compile an integer threshold unit by residual-threshold dynamic programming.

    Level k of the diagram tests input ``order[k]`` (identity by default).
    Setting that input keeps the residual or lowers it by the input's
    weight; a residual at or below the remaining negative mass is TRUE, one
    above the remaining positive mass is FALSE, and the fully assigned case
    is TRUE iff the residual is <= 0.  The manager's node budget, if any,
    also bounds the number of materialized cells.
    """
    n = unit.arity
    if manager.num_vars != n:
        raise ValueError(
            "manager has %d variables, unit has %d inputs" % (manager.num_vars, n)
        )
    order = _resolve_order(order, n)
    w = [unit.weights[order[k]] for k in range(n)]
    t0 = unit.threshold

    # suffix sums of the negative and positive weight mass below each level
    mins = [0] * (n + 1)
    maxs = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        mins[i] = mins[i + 1] + (w[i] if w[i] < 0 else 0)
        maxs[i] = maxs[i + 1] + (w[i] if w[i] > 0 else 0)

    if t0 <= mins[0]:
        return manager.true
    if t0 > maxs[0]:
        return manager.false

    # forward pass: undecided residuals reachable at each level
    levels: list[set[int]] = []
    cur = {t0}
    cells = 0
    for i in range(n):
        levels.append(cur)
        cells += len(cur)
        manager.charge_cells(cells)
        wi = w[i]
        lo_b = mins[i + 1]
        hi_b = maxs[i + 1]
        nxt = set()
        for t in cur:
            if lo_b < t <= hi_b:
                nxt.add(t)
            u = t - wi
            if lo_b < u <= hi_b:
                nxt.add(u)
        cur = nxt
    assert cells <= n * (2 * unit.magnitude + 1)

    # backward pass: one node per surviving cell
    mk = manager._mk_id
    prev: dict[int, int] = {}
    for i in range(n - 1, -1, -1):
        wi = w[i]
        lo_b = mins[i + 1]
        hi_b = maxs[i + 1]
        table: dict[int, int] = {}
        for t in levels[i]:
            lo = 1 if t <= lo_b else (0 if t > hi_b else prev[t])
            u = t - wi
            hi = 1 if u <= lo_b else (0 if u > hi_b else prev[u])
            table[t] = mk(i, lo, hi)
        prev = table
    return NodeRef(manager, prev[t0])


def compile_exact(
    unit: LinearThresholdUnit | ThresholdForm | IntThresholdUnit,
    manager: Manager,
    order: Sequence[int] | None = None,
    max_inputs: int = 20,
) -> NodeRef:
    """Reference compiler: memoized Shannon expansion on exact residuals.

    Accepts real-weight or integer-weight units; real parameters are taken
    at their printed decimal value.  Intended as an oracle, so the arity is
    capped (worst case is exponential in half the inputs).
    """
    n = unit.arity
    if n > max_inputs:
        raise ValueError("arity %d exceeds the cap of %d inputs" % (n, max_inputs))
    if manager.num_vars != n:
        raise ValueError(
            "manager has %d variables, unit has %d inputs" % (manager.num_vars, n)
        )
    order = _resolve_order(order, n)
    if isinstance(unit, LinearThresholdUnit):
        unit = to_threshold_form(unit)
    if isinstance(unit, IntThresholdUnit):
        w = [unit.weights[k] for k in order]
        t0 = unit.threshold
    else:
        w = [exact_decimal(unit.weights[k]) for k in order]
        t0 = exact_decimal(unit.threshold)

    zero = 0 if isinstance(t0, int) else Fraction(0)
    mins = [zero] * (n + 1)
    maxs = [zero] * (n + 1)
    for i in range(n - 1, -1, -1):
        mins[i] = mins[i + 1] + (w[i] if w[i] < 0 else zero)
        maxs[i] = maxs[i + 1] + (w[i] if w[i] > 0 else zero)

    mk = manager._mk_id
    memo: dict[tuple[int, object], int] = {}

    def build(i: int, t) -> int:
        if t <= mins[i]:
            return 1
        if t > maxs[i]:
            return 0
        key = (i, t)
        r = memo.get(key)
        if r is None:
            r = mk(i, build(i + 1, t), build(i + 1, t - w[i]))
            memo[key] = r
        return r

    return NodeRef(manager, build(0, t0))


# --------------------------------------------------------------- text format
#
# One line `weights: w1 w2 ... wn`, then either `bias: b` (real unit) or
# `threshold: T` (integer unit).  Blank lines and `#` comments are ignored.


def parse_neuron(text: str) -> LinearThresholdUnit | IntThresholdUnit:
    """Parse the neuron text format."""
    fields: dict[str, str] = {}
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if ":" not in ln:
            raise ValueError("bad neuron line: %r" % ln)
        key, _, rest = ln.partition(":")
        key = key.strip().lower()
        if key in fields:
            raise ValueError("duplicate field %r" % key)
        fields[key] = rest.strip()
    if "weights" not in fields:
        raise ValueError("missing weights line")
    has_bias = "bias" in fields
    has_threshold = "threshold" in fields
    if has_bias == has_threshold:
        raise ValueError("expected exactly one of 'bias' or 'threshold'")
    tokens = fields["weights"].split()
    if has_bias:
        return LinearThresholdUnit(
            tuple(float(tok) for tok in tokens), float(fields["bias"])
        )
    try:
        weights = tuple(int(tok) for tok in tokens)
        threshold = int(fields["threshold"])
    except ValueError:
        raise ValueError("integer unit requires integer weights and threshold")
    return IntThresholdUnit(weights, threshold)


def format_neuron(unit: LinearThresholdUnit | IntThresholdUnit) -> str:
    """Render a unit in the neuron text format."""
    if isinstance(unit, IntThresholdUnit):
        return "weights: %s\nthreshold: %d\n" % (
            " ".join(str(w) for w in unit.weights),
            unit.threshold,
        )
    return "weights: %s\nbias: %s\n" % (
        " ".join(repr(w) for w in unit.weights),
        repr(unit.bias),
    )


PathOrFile = Union[str, "IO[str]"]


def read_neuron(src: PathOrFile) -> LinearThresholdUnit | IntThresholdUnit:
    if hasattr(src, "read"):
        return parse_neuron(src.read())  # type: ignore[union-attr]
    with open(src, "r") as fp:
        return parse_neuron(fp.read())


def write_neuron(unit, dest: PathOrFile) -> None:
    text = format_neuron(unit)
    if hasattr(dest, "write"):
        dest.write(text)  # type: ignore[union-attr]
        return
    with open(dest, "w") as fp:
        fp.write(text)
