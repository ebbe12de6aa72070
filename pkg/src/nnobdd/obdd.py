"""Canonical reduced ordered binary decision diagrams.

Nodes live in a per-manager store and are hash-consed through a unique
table, with reduction (no node whose branches coincide) applied eagerly at
construction.  As a consequence two handles produced by the same manager
denote the same Boolean function if and only if they are equal, which is
what makes validity and satisfiability checks plain comparisons against
the terminals.

There are no complement edges: negation is a memoized traversal that swaps
the terminals.  There is no garbage collection; node stores only grow,
which is fine at the sizes this package targets, and an optional node
budget turns runaway growth into a `BudgetExceededError` instead of an
out-of-memory failure.

A manager and every handle it produced must be confined to a single thread
of control at a time.  Distinct managers are fully independent and may be
used in parallel.  No operation ever mutates an existing diagram; the
operation caches are the only mutable state.
"""

from __future__ import annotations

import re
from typing import IO, Sequence, Union


class OBDDError(Exception):
    """Base class for diagram construction and query errors."""


class BudgetExceededError(OBDDError):
    """The manager's node budget would be exceeded by this operation."""


#: A total assignment: one bit per variable, in variable order.
Instance = Sequence[int]

_OPS = ("and", "or", "xor")


class NodeRef:
    """Opaque handle to a diagram rooted in a manager's node store.

    Handles compare equal exactly when they come from the same manager and
    denote the same function.  The bitwise operators build new diagrams
    through the owning manager.
    """

    __slots__ = ("manager", "i")

    def __init__(self, manager: "Manager", i: int):
        self.manager = manager
        self.i = i

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, NodeRef)
            and self.manager is other.manager
            and self.i == other.i
        )

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def __hash__(self) -> int:
        return hash((id(self.manager), self.i))

    def __and__(self, other: "NodeRef") -> "NodeRef":
        return self.manager.apply("and", self, other)

    def __or__(self, other: "NodeRef") -> "NodeRef":
        return self.manager.apply("or", self, other)

    def __xor__(self, other: "NodeRef") -> "NodeRef":
        return self.manager.apply("xor", self, other)

    def __invert__(self) -> "NodeRef":
        return self.manager.negate(self)

    @property
    def is_false(self) -> bool:
        return self.i == 0

    @property
    def is_true(self) -> bool:
        return self.i == 1

    @property
    def is_terminal(self) -> bool:
        return self.i <= 1

    def __repr__(self) -> str:
        if self.i == 0:
            return "<NodeRef FALSE>"
        if self.i == 1:
            return "<NodeRef TRUE>"
        var = self.manager._nodes[self.i][0]
        return "<NodeRef %d var=%d>" % (self.i, var)


class Manager:
    """Node store plus operation caches for diagrams over a fixed variable order.

    Variables are the integers ``0 .. num_vars-1``; every edge goes from a
    variable to a strictly larger variable or to a terminal.  ``node_budget``,
    when set, caps the total number of nodes ever allocated (terminals
    included).
    """

    def __init__(self, num_vars: int, node_budget: int | None = None):
        if num_vars < 0:
            raise ValueError("variable count must be nonnegative")
        if node_budget is not None and node_budget < 2:
            raise ValueError("node budget must allow at least the terminals")
        self.num_vars = num_vars
        self.node_budget = node_budget
        # id 0 is FALSE, id 1 is TRUE; terminals sit at sentinel level num_vars
        self._nodes: list[tuple[int, int, int]] = [
            (num_vars, 0, 0),
            (num_vars, 1, 1),
        ]
        self._unique: dict[tuple[int, int, int], int] = {}
        self._apply_cache: dict[tuple[str, int, int], int] = {}
        self._ite_cache: dict[tuple[int, int, int], int] = {}
        self._neg_cache: dict[int, int] = {}
        self._cond_cache: dict[tuple[int, int, int], int] = {}
        self._count_cache: dict[int, int] = {}
        self.false = NodeRef(self, 0)
        self.true = NodeRef(self, 1)

    def __repr__(self) -> str:
        return "<Manager vars=%d nodes=%d>" % (self.num_vars, len(self._nodes))

    @property
    def allocated(self) -> int:
        """Total nodes ever created, terminals included."""
        return len(self._nodes)

    # ---------------------------------------------------------------- core

    def _own(self, f: NodeRef) -> NodeRef:
        if not isinstance(f, NodeRef) or f.manager is not self:
            raise ValueError("handle does not belong to this manager")
        return f

    def _level(self, u: int) -> int:
        return self._nodes[u][0]

    def _mk_id(self, var: int, lo: int, hi: int) -> int:
        """Hash-consed, reduced node constructor (internal id form)."""
        if lo == hi:
            return lo
        nodes = self._nodes
        if var >= nodes[lo][0] or var >= nodes[hi][0]:
            raise OBDDError("ordering violation at variable %d" % var)
        key = (var, lo, hi)
        u = self._unique.get(key)
        if u is None:
            u = len(nodes)
            if self.node_budget is not None and u >= self.node_budget:
                raise BudgetExceededError(
                    "node budget of %d exhausted" % self.node_budget
                )
            nodes.append(key)
            self._unique[key] = u
        return u

    def charge_cells(self, count: int) -> None:
        """Raise if ``count`` work items already exceed the node budget.

        Construction algorithms that build tables before allocating nodes
        use this so the budget also bounds their intermediate state.
        """
        if self.node_budget is not None and count > self.node_budget:
            raise BudgetExceededError(
                "node budget of %d exhausted (%d cells)" % (self.node_budget, count)
            )

    # ------------------------------------------------------------ building

    def literal(self, var: int, positive: bool = True) -> NodeRef:
        """Diagram of a single variable or its negation."""
        if not 0 <= var < self.num_vars:
            raise ValueError(
                "variable %d out of range for %d variables" % (var, self.num_vars)
            )
        if positive:
            return NodeRef(self, self._mk_id(var, 0, 1))
        return NodeRef(self, self._mk_id(var, 1, 0))

    def apply(self, op: str, f: NodeRef, g: NodeRef) -> NodeRef:
        """Combine two diagrams with a binary Boolean connective."""
        op = op.lower()
        if op not in _OPS:
            raise ValueError("unsupported operation %r" % op)
        self._own(f)
        self._own(g)
        return NodeRef(self, self._apply_id(op, f.i, g.i))

    def _apply_id(self, op: str, a: int, b: int) -> int:
        if op == "and":
            if a == 0 or b == 0:
                return 0
            if a == 1:
                return b
            if b == 1:
                return a
            if a == b:
                return a
        elif op == "or":
            if a == 1 or b == 1:
                return 1
            if a == 0:
                return b
            if b == 0:
                return a
            if a == b:
                return a
        else:  # xor
            if a == b:
                return 0
            if a == 0:
                return b
            if b == 0:
                return a
            if a == 1:
                return self._neg_id(b)
            if b == 1:
                return self._neg_id(a)
        if a > b:
            a, b = b, a
        key = (op, a, b)
        r = self._apply_cache.get(key)
        if r is None:
            nodes = self._nodes
            va, la, ha = nodes[a]
            vb, lb, hb = nodes[b]
            v = va if va <= vb else vb
            a0, a1 = (la, ha) if va == v else (a, a)
            b0, b1 = (lb, hb) if vb == v else (b, b)
            r = self._mk_id(
                v, self._apply_id(op, a0, b0), self._apply_id(op, a1, b1)
            )
            self._apply_cache[key] = r
        return r

    def negate(self, f: NodeRef) -> NodeRef:
        """Complement a diagram; an involution on handles."""
        self._own(f)
        return NodeRef(self, self._neg_id(f.i))

    def _neg_id(self, u: int) -> int:
        if u <= 1:
            return 1 - u
        r = self._neg_cache.get(u)
        if r is None:
            var, lo, hi = self._nodes[u]
            r = self._mk_id(var, self._neg_id(lo), self._neg_id(hi))
            self._neg_cache[u] = r
            self._neg_cache[r] = u
        return r

    def ite(self, i: NodeRef, t: NodeRef, e: NodeRef) -> NodeRef:
        """If-then-else: ``(i and t) or (not i and e)``."""
        self._own(i)
        self._own(t)
        self._own(e)
        return NodeRef(self, self._ite_id(i.i, t.i, e.i))

    def _ite_id(self, i: int, t: int, e: int) -> int:
        if i == 1:
            return t
        if i == 0:
            return e
        if t == e:
            return t
        if t == 1 and e == 0:
            return i
        if t == 0 and e == 1:
            return self._neg_id(i)
        key = (i, t, e)
        r = self._ite_cache.get(key)
        if r is None:
            nodes = self._nodes
            v = min(nodes[i][0], nodes[t][0], nodes[e][0])

            def cof(u: int, b: int) -> int:
                var, lo, hi = nodes[u]
                if var != v:
                    return u
                return hi if b else lo

            r = self._mk_id(
                v,
                self._ite_id(cof(i, 0), cof(t, 0), cof(e, 0)),
                self._ite_id(cof(i, 1), cof(t, 1), cof(e, 1)),
            )
            self._ite_cache[key] = r
        return r

    def condition(self, f: NodeRef, var: int, value: int) -> NodeRef:
        """Restrict ``f`` by fixing one variable; the result never mentions it."""
        self._own(f)
        if not 0 <= var < self.num_vars:
            raise ValueError("variable %d out of range" % var)
        if value not in (0, 1):
            raise ValueError("value must be 0 or 1")
        return NodeRef(self, self._cond_id(f.i, var, value))

    def _cond_id(self, u: int, var: int, value: int) -> int:
        nodes = self._nodes
        v, lo, hi = nodes[u]
        if v > var:
            return u
        if v == var:
            return hi if value else lo
        key = (u, var, value)
        r = self._cond_cache.get(key)
        if r is None:
            r = self._mk_id(
                v, self._cond_id(lo, var, value), self._cond_id(hi, var, value)
            )
            self._cond_cache[key] = r
        return r

    def compose(self, f: NodeRef, subs: Sequence[NodeRef]) -> NodeRef:
        """Substitute a diagram of this manager for every variable of ``f``.

        ``f`` may come from a different (placeholder) manager; ``subs[k]``
        replaces its variable ``k``.  For every instance x of this manager,
        the result evaluates to f applied to the evaluations of the
        substituents at x.
        """
        src = f.manager
        if not isinstance(f, NodeRef):
            raise ValueError("expected a NodeRef")
        if len(subs) != src.num_vars:
            raise ValueError(
                "arity mismatch: %d substituents for %d variables"
                % (len(subs), src.num_vars)
            )
        for s in subs:
            self._own(s)
        sub_ids = [s.i for s in subs]
        src_nodes = src._nodes
        memo = {0: 0, 1: 1}

        def walk(u: int) -> int:
            r = memo.get(u)
            if r is None:
                var, lo, hi = src_nodes[u]
                r = self._ite_id(sub_ids[var], walk(hi), walk(lo))
                memo[u] = r
            return r

        return NodeRef(self, walk(f.i))

    # ------------------------------------------------------------- queries

    def evaluate(self, f: NodeRef, x: Instance) -> int:
        """Follow the branch selected by each tested variable; 0 or 1."""
        self._own(f)
        if len(x) != self.num_vars:
            raise ValueError(
                "instance has %d bits, expected %d" % (len(x), self.num_vars)
            )
        nodes = self._nodes
        u = f.i
        while u > 1:
            var, lo, hi = nodes[u]
            bit = x[var]
            if bit == 1:
                u = hi
            elif bit == 0:
                u = lo
            else:
                raise ValueError("instance bits must be 0 or 1")
        return u

    def model_count(self, f: NodeRef, n: int | None = None) -> int:
        """Exact number of satisfying assignments over the first ``n`` variables.

        Variables skipped by reduction are counted as free.  Arbitrary
        precision: the result may be as large as ``2**n``.
        """
        self._own(f)
        if n is None:
            n = self.num_vars
        if not 0 <= n <= self.num_vars:
            raise ValueError("n must be between 0 and the variable count")
        if n < self.num_vars:
            sup = self.support(f)
            if sup and max(sup) >= n:
                raise ValueError(
                    "function depends on variable %d, beyond n=%d" % (max(sup), n)
                )
        total = self._count_id(f.i) << self._level(f.i)
        return total >> (self.num_vars - n)

    def _count_id(self, u: int) -> int:
        # models over the variables from this node's level to the end
        if u == 0:
            return 0
        if u == 1:
            return 1
        r = self._count_cache.get(u)
        if r is None:
            nodes = self._nodes
            var, lo, hi = nodes[u]
            r = (self._count_id(lo) << (nodes[lo][0] - var - 1)) + (
                self._count_id(hi) << (nodes[hi][0] - var - 1)
            )
            self._count_cache[u] = r
        return r

    def is_valid(self, f: NodeRef) -> bool:
        return self._own(f).i == 1

    def is_sat(self, f: NodeRef) -> bool:
        return self._own(f).i != 0

    def node_count(self, f: NodeRef) -> int:
        """Distinct nonterminal nodes reachable from ``f``."""
        self._own(f)
        seen = {0, 1}
        stack = [f.i]
        count = 0
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            count += 1
            _, lo, hi = self._nodes[u]
            stack.append(lo)
            stack.append(hi)
        return count

    def support(self, f: NodeRef) -> set[int]:
        """Variables actually tested somewhere in the diagram."""
        self._own(f)
        seen = {0, 1}
        stack = [f.i]
        sup: set[int] = set()
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            var, lo, hi = self._nodes[u]
            sup.add(var)
            stack.append(lo)
            stack.append(hi)
        return sup

    def audit(self, f: NodeRef) -> None:
        """Verify ordering, reducedness and hash-consing for all reachable nodes."""
        self._own(f)
        seen = {0, 1}
        stack = [f.i]
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            var, lo, hi = self._nodes[u]
            if not 0 <= var < self.num_vars:
                raise OBDDError("node %d labeled with bad variable %d" % (u, var))
            if lo == hi:
                raise OBDDError("node %d is not reduced" % u)
            if var >= self._nodes[lo][0] or var >= self._nodes[hi][0]:
                raise OBDDError("node %d violates the variable order" % u)
            if self._unique.get((var, lo, hi)) != u:
                raise OBDDError("node %d is not hash-consed" % u)
            stack.append(lo)
            stack.append(hi)


# ------------------------------------------------------------- text format
#
# Header line `obdd n=<vars> root=<id>`, then one line `<id> <var> <lo> <hi>`
# per nonterminal node.  Terminals are fixed as ids 0 (FALSE) and 1 (TRUE)
# and are never listed.  Nodes appear in a deterministic topological order
# (children first), so identical functions serialize to identical files.

_HEADER = re.compile(r"^obdd\s+n=(\d+)\s+root=(\d+)\s*$")

PathOrFile = Union[str, "IO[str]"]


def _writing(dest: PathOrFile) -> tuple[IO[str], bool]:
    if hasattr(dest, "write"):
        return dest, False  # type: ignore[return-value]
    return open(dest, "w"), True


def _reading(src: PathOrFile) -> tuple[IO[str], bool]:
    if hasattr(src, "read"):
        return src, False  # type: ignore[return-value]
    return open(src, "r"), True


def write_obdd(f: NodeRef, dest: PathOrFile) -> None:
    """Serialize a diagram to the diffable text format."""
    mgr = f.manager
    order: list[int] = []
    seen = {0, 1}
    stack: list[tuple[int, bool]] = [(f.i, False)]
    while stack:
        u, expanded = stack.pop()
        if u in seen:
            continue
        if expanded:
            seen.add(u)
            order.append(u)
            continue
        _, lo, hi = mgr._nodes[u]
        stack.append((u, True))
        stack.append((hi, False))
        stack.append((lo, False))
    ids = {0: 0, 1: 1}
    for k, u in enumerate(order):
        ids[u] = k + 2
    fp, close = _writing(dest)
    try:
        fp.write("obdd n=%d root=%d\n" % (mgr.num_vars, ids[f.i]))
        for u in order:
            var, lo, hi = mgr._nodes[u]
            fp.write("%d %d %d %d\n" % (ids[u], var, ids[lo], ids[hi]))
    finally:
        if close:
            fp.close()


def read_obdd(src: PathOrFile, manager: Manager | None = None) -> NodeRef:
    """Parse the text format back into a canonical diagram.

    When ``manager`` is given its variable count must match the file; this
    allows round-trip comparisons against handles built in that manager.
    """
    fp, close = _reading(src)
    try:
        lines = [ln.strip() for ln in fp]
    finally:
        if close:
            fp.close()
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty diagram file")
    m = _HEADER.match(lines[0])
    if m is None:
        raise ValueError("bad header: %r" % lines[0])
    n, root = int(m.group(1)), int(m.group(2))
    if manager is None:
        manager = Manager(n)
    elif manager.num_vars != n:
        raise ValueError(
            "file has %d variables, manager has %d" % (n, manager.num_vars)
        )
    refs = {0: 0, 1: 1}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 4:
            raise ValueError("bad node line: %r" % ln)
        ident, var, lo, hi = (int(p) for p in parts)
        if ident in refs:
            raise ValueError("duplicate node id %d" % ident)
        if lo not in refs or hi not in refs:
            raise ValueError("node %d references an undefined child" % ident)
        if not 0 <= var < n:
            raise ValueError("node %d labeled with bad variable %d" % (ident, var))
        refs[ident] = manager._mk_id(var, refs[lo], refs[hi])
    if root not in refs:
        raise ValueError("root id %d is not defined" % root)
    return NodeRef(manager, refs[root])
