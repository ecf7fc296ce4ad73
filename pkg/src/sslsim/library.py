"""Builders for primitive cells and the five full-adder layouts.

The adders are produced by a small netlist compiler.  Every logic cell gets
a *level*; its clock zone is ``level % 3`` and each of its upstream cells sits
one or two levels earlier, so a vector clamped at macro-cycle ``k`` reaches
level ``l`` during macro-cycle ``k + l // 3`` and the array pipelines.
Literals needed at a level where they do not exist yet are delivered by
chains of inverting cells.

Exchange is symmetric, so a frozen downstream cell pushes back on the cell
that drives it.  Couplings are therefore sized from the outputs backwards:
each cell's worst-case upstream margin exceeds the total coupling it has to
cells downstream of it (including gate pads it controls), which makes the
relaxed value depend on upstream cells only.  All couplings are multiples of
0.5 and the bias is 0.5, so energies are exact in floating point.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .core import Cell, CellKind, ExchangeEdge, GatePad, Layout, PhysicsParams, Spin

BIAS = 0.5
_ASCII = {"Φ": "Phi"}
MARGIN = 0.5
# levels past the earliest feasible one considered when placing a cell
_SEARCH = 3

Literal = Tuple[str, bool]        # (signal, positive?)
Target = Union[Literal, int]      # a literal or a constant logic level


class AdderKind(str, enum.Enum):
    COMPLEMENTARY = "complementary"
    MIRROR = "mirror"
    TRANSMISSION_GATE = "transmission_gate"
    STATIC_MANCHESTER = "static_manchester"
    DYNAMIC_MANCHESTER = "dynamic_manchester"


def build_nand(bias: float = BIAS, coupling: float = 1.0) -> Layout:
    """Two clamped inputs coupled to one free centre; the centre relaxes to NAND."""
    cells = (
        Cell("A", (0, 0), CellKind.INPUT, 0),
        Cell("B", (0, 2), CellKind.INPUT, 0),
        Cell("Y", (1, 1), CellKind.OUTPUT, 1),
    )
    edges = (ExchangeEdge("A", "Y", coupling), ExchangeEdge("B", "Y", coupling))
    return Layout(cells, edges, (), (("A", "A"), ("B", "B")), (("Y", "Y"),), PhysicsParams(bias))


def build_wire(n: int) -> Layout:
    """Inverter chain of ``n`` cells after the input, zones cycling 0, 1, 2."""
    if n < 1:
        raise ValueError("wire needs at least one cell after the input")
    nl = _Netlist()
    prev = nl.add_input("IN", "c0")
    for k in range(1, n + 1):
        prev = nl.add_node(f"c{k}", k, "inv", srcs=[prev])
    nl.nodes[prev].kind = CellKind.OUTPUT
    nl.output_pairs.append(("OUT", prev))
    return nl.compile()


def build_adder(kind) -> Layout:
    kind = AdderKind(kind)
    return _BUILDERS[kind]()


@dataclass
class _Node:
    id: str
    level: int
    op: str                               # input | inv | nand | mux
    srcs: List[str] = field(default_factory=list)
    # gated inputs: (source id or None for a constant, constant value, controller id, enable)
    paths: List[Tuple[Optional[str], int, str, Spin]] = field(default_factory=list)
    default_const: Optional[int] = None   # constant pull through an ungated edge
    kind: CellKind = CellKind.INTERNAL


class _Netlist:
    def __init__(self):
        self.nodes: Dict[str, _Node] = {}
        self.copies: Dict[str, Dict[Tuple[int, bool], str]] = defaultdict(dict)
        self.input_pairs: List[Tuple[str, str]] = []
        self.output_pairs: List[Tuple[str, str]] = []

    # -- construction -------------------------------------------------------

    def add_input(self, name: str, cid: Optional[str] = None) -> str:
        cid = cid or name
        self.nodes[cid] = _Node(cid, 0, "input", kind=CellKind.INPUT)
        self.copies[name][(0, True)] = cid
        self.input_pairs.append((name, cid))
        return cid

    def add_node(self, cid: str, level: int, op: str, **kw) -> str:
        if cid in self.nodes:
            raise ValueError(f"duplicate node {cid!r}")
        node = _Node(cid, level, op, **kw)
        for up in node.srcs + [p[0] for p in node.paths if p[0]] + [p[2] for p in node.paths]:
            gap = level - self.nodes[up].level
            if gap not in (1, 2):
                raise ValueError(f"{cid}: upstream {up} is {gap} levels back")
        self.nodes[cid] = node
        return cid

    def min_level(self, sig: str) -> int:
        return min(lv for lv, _ in self.copies[sig])

    def _plan(self, sig: str, pol: bool, level: int):
        """Cheapest inverter chain delivering ``(sig, pol)`` at ``level``."""
        have = self.copies[sig]
        lo = self.min_level(sig)
        if level < lo:
            return math.inf, []
        cost, prev = {}, {}
        for lv in range(lo, level + 1):
            for q in (True, False):
                if (lv, q) in have:
                    cost[lv, q] = 0
                    continue
                best = math.inf
                for back in (1, 2):
                    c = cost.get((lv - back, not q), math.inf) + 1
                    if c < best:
                        best, prev[lv, q] = c, (lv - back, not q)
                cost[lv, q] = best
        if cost[level, pol] == math.inf:
            return math.inf, []
        chain, cur = [], (level, pol)
        while cur not in have:
            chain.append(cur)
            cur = prev[cur]
        return cost[level, pol], chain[::-1]

    def fetch(self, sig: str, pol: bool, level: int) -> str:
        cost, chain = self._plan(sig, pol, level)
        if cost == math.inf:
            raise ValueError(f"{sig} ({'+' if pol else '-'}) cannot be delivered at level {level}")
        for lv, q in chain:
            src = self.copies[sig][(lv - 1, not q)] if (lv - 1, not q) in self.copies[sig] \
                else self.copies[sig][(lv - 2, not q)]
            cid = f"{_ASCII.get(sig, sig)}_{'p' if q else 'n'}{lv}"
            self.add_node(cid, lv, "inv", srcs=[src])
            self.copies[sig][(lv, q)] = cid
        return self.copies[sig][(level, pol)]

    def _cheapest(self, lit: Literal, levels: Sequence[int], either_polarity=False):
        best = (math.inf, None, None)
        pols = (lit[1], not lit[1]) if either_polarity else (lit[1],)
        for lv in levels:
            for pol in pols:
                cost = self._plan(lit[0], pol, lv)[0]
                if cost < best[0]:
                    best = (cost, lv, pol)
        return best

    def _define(self, name: str, level: int):
        self.copies[name][(level, True)] = name

    def nand(self, name: str, lits: Sequence[Literal]) -> str:
        def plan(level):
            picks = [self._cheapest(lit, (level - 1, level - 2)) for lit in lits]
            cost = sum(p[0] for p in picks)
            return (cost, level, picks) if cost < math.inf else None

        level = max(self.min_level(s) for s, _ in lits) + 1
        while plan(level) is None:
            level += 1
        candidates = [plan(lv) for lv in range(level, level + _SEARCH)]
        _, level, picks = min((c for c in candidates if c), key=lambda c: (c[0], c[1]))
        srcs = [self.fetch(lit[0], lit[1], p[1]) for lit, p in zip(lits, picks)]
        self.add_node(name, level, "nand", srcs=srcs)
        self._define(name, level)
        return name

    def mux(self, name: str, paths: Sequence[Tuple[str, int, Target]],
            default: Optional[Target] = None) -> str:
        """Cell driven through gate pads, one per ``(controller, enabling level, value)``.

        The cell takes ``value`` while the controller holds the enabling
        level.  ``default`` is applied through an ungated, weaker edge and
        wins only while no gate pad is active.  Controllers sit in zone 0
        and data sources between them and the cell, so every controller is
        settled before the edges it switches are used.
        """
        ups = {c for c, _, _ in paths} | {t[0] for _, _, t in paths if not isinstance(t, int)}
        if default is not None and not isinstance(default, int):
            ups.add(default[0])
        def plan(level):
            if level % 3 == 0:
                return None
            ctrl_lv, src_lv = (level - 1, level - 2) if level % 3 == 1 else (level - 2, level - 1)
            ctrl_picks = [self._cheapest((c, True), (ctrl_lv,), either_polarity=True)
                          for c, _, _ in paths]
            src_picks = [self._cheapest((t[0], not t[1]), (src_lv,))
                         for _, _, t in paths if not isinstance(t, int)]
            dflt = None
            if default is not None and not isinstance(default, int):
                dflt = self._cheapest((default[0], not default[1]), (level - 1, level - 2))
                src_picks.append(dflt)
            cost = sum(p[0] for p in ctrl_picks + src_picks)
            if cost == math.inf:
                return None
            return cost, level, ctrl_lv, src_lv, ctrl_picks, dflt

        level = max(self.min_level(s) for s in ups) + 1
        while plan(level) is None:
            level += 1
        candidates = [plan(lv) for lv in range(level, level + _SEARCH)]
        _, level, ctrl_lv, src_lv, ctrl_picks, dflt = min(
            (c for c in candidates if c), key=lambda c: (c[0], c[1]))
        gated = []
        for (ctrl, when, target), (_, _, cpol) in zip(paths, ctrl_picks):
            cid = self.fetch(ctrl, cpol, ctrl_lv)
            enable = Spin.from_bit(when if cpol else 1 - when)
            if isinstance(target, int):
                gated.append((None, target, cid, enable))
            else:
                src = self.fetch(target[0], not target[1], src_lv)
                gated.append((src, 0, cid, enable))
        srcs, default_const = [], None
        if isinstance(default, int):
            default_const = default
        elif default is not None:
            srcs.append(self.fetch(default[0], not default[1], dflt[1]))
        self.add_node(name, level, "mux", srcs=srcs, paths=gated, default_const=default_const)
        self._define(name, level)
        return name

    def finish(self, outputs: Sequence[Tuple[str, Literal]], pad: int = 0) -> Layout:
        """Deliver every output literal at one common level (plus ``pad``)."""
        def blocked(lv):
            return any(self._plan(lit[0], lit[1], lv)[0] == math.inf for _, lit in outputs)

        level = max(self.min_level(lit[0]) for _, lit in outputs)
        while blocked(level):
            level += 1
        level += pad
        while blocked(level):
            level += 1
        for name, lit in outputs:
            cid = self.fetch(lit[0], lit[1], level)
            if self.nodes[cid].kind == CellKind.OUTPUT:
                raise ValueError(f"output {name} shares a cell with another output")
            self.nodes[cid].kind = CellKind.OUTPUT
            self.output_pairs.append((name, cid))
        return self.compile()

    # -- coupling sizing and emission --------------------------------------

    def compile(self) -> Layout:
        load: Dict[str, float] = defaultdict(float)   # coupling to downstream / switched edges
        cells: List[Cell] = []
        edges: List[ExchangeEdge] = []
        gates: List[GatePad] = []
        rows: Dict[int, int] = defaultdict(int)

        def place(cid, level, kind, fixed=None):
            cells.append(Cell(cid, (level, rows[level]), kind, level % 3, fixed))
            rows[level] += 1

        for node in sorted(self.nodes.values(), key=lambda n: (-n.level, n.id)):
            place(node.id, node.level, node.kind)
            if node.op == "input":
                continue
            d = load[node.id]
            if node.op == "inv":
                w = d + BIAS + MARGIN
                for s in node.srcs:
                    edges.append(ExchangeEdge(s, node.id, w))
                    load[s] += w
            elif node.op == "nand":
                k = len(node.srcs)
                if d == 0 and k == 2:
                    w, offset = 1.0, 0.0   # bias alone breaks the mixed-input tie
                else:
                    w = max(d + MARGIN, 1.0)
                    offset = (k - 1) * w - BIAS
                for s in node.srcs:
                    edges.append(ExchangeEdge(s, node.id, w))
                    load[s] += w
                if offset:
                    dot = f"{node.id}_bias"
                    place(dot, node.level, CellKind.FIXED, Spin.DOWN)
                    edges.append(ExchangeEdge(dot, node.id, offset))
            elif node.op == "mux":
                w_default = d + BIAS + MARGIN
                has_default = bool(node.srcs) or node.default_const is not None
                w = w_default + d + BIAS + MARGIN if has_default else w_default
                for s in node.srcs:
                    edges.append(ExchangeEdge(s, node.id, w_default))
                    load[s] += w_default
                if node.default_const is not None:
                    dot = f"{node.id}_hold"
                    place(dot, node.level, CellKind.FIXED, Spin.from_bit(1 - node.default_const))
                    edges.append(ExchangeEdge(dot, node.id, w_default))
                for i, (src, const, ctrl, enable) in enumerate(node.paths):
                    if src is None:
                        src = f"{node.id}_k{i}"
                        place(src, node.level, CellKind.FIXED, Spin.from_bit(1 - const))
                    else:
                        load[src] += w
                    gates.append(GatePad(ExchangeEdge(src, node.id, w), ctrl, enable))
                    load[ctrl] += w
            else:
                raise ValueError(f"unknown op {node.op!r}")
        return Layout(tuple(cells), tuple(edges), tuple(gates), tuple(self.input_pairs),
                      tuple(self.output_pairs), PhysicsParams(BIAS))


A, B, CI, PHI = ("A", True), ("B", True), ("Ci", True), ("Φ", True)


def _neg(lit: Literal) -> Literal:
    return (lit[0], not lit[1])


def _adder_inputs(clocked=False) -> _Netlist:
    nl = _Netlist()
    nl.add_input("A")
    nl.add_input("B")
    nl.add_input("Ci")
    if clocked:
        nl.add_input("Φ", "Phi")
    return nl


def _xor3(nl: _Netlist, prefix: str, out: str) -> str:
    """Eight-NAND A xor B xor Ci; the first NAND (A nand B) is named ``prefix + '1'``."""
    n1 = nl.nand(prefix + "1", [A, B])
    n2 = nl.nand(prefix + "2", [A, (n1, True)])
    n3 = nl.nand(prefix + "3", [B, (n1, True)])
    x = nl.nand(prefix + "x", [(n2, True), (n3, True)])
    n5 = nl.nand(prefix + "5", [(x, True), CI])
    n6 = nl.nand(prefix + "6", [(x, True), (n5, True)])
    n7 = nl.nand(prefix + "7", [CI, (n5, True)])
    return nl.nand(out, [(n6, True), (n7, True)])


def _complementary() -> Layout:
    nl = _adder_inputs()
    s = _xor3(nl, "n", "s")
    co = nl.nand("co", [("n5", True), ("n1", True)])
    return nl.finish([("S", (s, True)), ("Co", (co, True))], pad=_PAD[AdderKind.COMPLEMENTARY])


def _mirror() -> Layout:
    nl = _adder_inputs()
    ab = nl.nand("ab", [A, B])                   # low iff A = B = 1
    nab = nl.nand("nab", [_neg(A), _neg(B)])     # low iff A = B = 0
    g1 = nl.nand("g1", [A, B, CI])               # low iff A = B = Ci = 1
    g2 = nl.nand("g2", [_neg(A), _neg(B), _neg(CI)])
    nl.mux("Co", [(ab, 0, 1), (nab, 0, 0)], default=CI)
    # the sum dot: not Co unless the g1 / g2 pads override it
    x = nl.mux("X", [(g1, 0, 1), (g2, 0, 0)], default=("Co", False))
    # S copies the sum dot while it is high and is pulled low otherwise
    nl.mux("S", [(x, 1, (x, True)), (x, 0, 0)])
    return nl.finish([("S", ("S", True)), ("Co", ("Co", True))], pad=_PAD[AdderKind.MIRROR])


def _propagate(nl: _Netlist) -> str:
    # setup circuit: P = B while A = 0, P = not B while A = 1
    return nl.mux("P", [("A", 0, B), ("A", 1, _neg(B))])


def _tg_sum(nl: _Netlist) -> str:
    return nl.mux("S", [("P", 0, CI), ("P", 1, _neg(CI))])


def _transmission_gate() -> Layout:
    nl = _adder_inputs()
    _propagate(nl)
    _tg_sum(nl)
    nl.mux("Co", [("P", 0, A), ("P", 1, CI)])
    return nl.finish([("S", ("S", True)), ("Co", ("Co", True))],
                     pad=_PAD[AdderKind.TRANSMISSION_GATE])


def _static_manchester() -> Layout:
    nl = _adder_inputs()
    _propagate(nl)
    _tg_sum(nl)
    nl.nand("G", [A, B])                 # generate, active low
    nl.nand("D", [_neg(A), _neg(B)])     # delete, active low
    nl.mux("Co", [("P", 1, CI), ("G", 0, 1), ("D", 0, 0)])
    return nl.finish([("S", ("S", True)), ("Co", ("Co", True))],
                     pad=_PAD[AdderKind.STATIC_MANCHESTER])


def _dynamic_manchester() -> Layout:
    nl = _adder_inputs(clocked=True)
    _propagate(nl)
    nl.nand("Pe", [PHI, ("P", True)])    # propagate during evaluate, active low
    nl.nand("Ge", [PHI, A, B])           # generate during evaluate, active low
    # carry node holds not Co; precharged high while the clock is low and kept
    # there by a weak pull when no path conducts
    nl.mux("Cn", [("Pe", 0, _neg(CI)), ("Ge", 0, 0), ("Φ", 0, 1)], default=1)
    return nl.finish([("Co", ("Cn", False))], pad=_PAD[AdderKind.DYNAMIC_MANCHESTER])


# Output delay padding (levels) per kind; complementary is padded so its dot
# count matches the mirror layout.
_PAD = {kind: 0 for kind in AdderKind}
_PAD[AdderKind.COMPLEMENTARY] = 2

_BUILDERS = {
    AdderKind.COMPLEMENTARY: _complementary,
    AdderKind.MIRROR: _mirror,
    AdderKind.TRANSMISSION_GATE: _transmission_gate,
    AdderKind.STATIC_MANCHESTER: _static_manchester,
    AdderKind.DYNAMIC_MANCHESTER: _dynamic_manchester,
}


def build_all() -> Dict[str, Layout]:
    return {k.value: build_adder(k) for k in AdderKind}
