"""Circuit model for single-spin quantum-dot logic.

A :class:`Layout` is an immutable description of a dot array: cells, exchange
edges between them, gate pads (edges switched on or off by the spin of a
controlling dot), the 3-phase clock-zone assignment, named inputs and outputs,
and the global bias field.

The energy of a spin assignment ``s`` is::

    E(s) = sum_e J_e * g_e(s) * s_a * s_b  -  h * sum_i s_i

with ``J_e > 0`` antiferromagnetic and ``g_e`` the gate activation (1 for
plain edges).  Up-spin is logic 1.
"""

from __future__ import annotations

import enum
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

N_PHASES = 3


class Spin(enum.IntEnum):
    UP = 1
    DOWN = -1

    @property
    def bit(self) -> int:
        return 1 if self is Spin.UP else 0

    @classmethod
    def from_bit(cls, bit) -> "Spin":
        if bit in (1, True):
            return cls.UP
        if bit in (0, False):
            return cls.DOWN
        raise ValueError(f"not a logic level: {bit!r}")

    @classmethod
    def parse(cls, token: str) -> "Spin":
        if token in ("+1", "+", "1"):
            return cls.UP
        if token in ("-1", "-"):
            return cls.DOWN
        raise ValueError(f"bad spin token {token!r} (expected +1 or -1)")

    def flipped(self) -> "Spin":
        return Spin(-self.value)

    def token(self) -> str:
        return "+1" if self is Spin.UP else "-1"

    def __str__(self):
        return self.token()


class CellKind(str, enum.Enum):
    INPUT = "input"
    OUTPUT = "output"
    INTERNAL = "internal"
    FIXED = "fixed"


@dataclass(frozen=True)
class Cell:
    id: str
    pos: Tuple[int, int]
    kind: CellKind = CellKind.INTERNAL
    zone: int = 0
    fixed_value: Optional[Spin] = None


@dataclass(frozen=True, order=True)
class ExchangeEdge:
    a: str
    b: str
    coupling: float = 1.0

    @property
    def pair(self) -> frozenset:
        return frozenset((self.a, self.b))


@dataclass(frozen=True, order=True)
class GatePad:
    """An exchange edge that couples only while ``controller`` holds ``enable_when``."""

    edge: ExchangeEdge
    controller: str
    enable_when: Spin = Spin.UP


@dataclass(frozen=True)
class PhysicsParams:
    bias: float = 0.5


@dataclass(frozen=True)
class Term:
    """One pairwise energy contribution; ``ctrl`` is None for ungated edges."""

    a: str
    b: str
    coupling: float
    ctrl: Optional[str] = None
    enable: Spin = Spin.UP

    def active(self, state: Mapping[str, int]) -> bool:
        return self.ctrl is None or state[self.ctrl] == self.enable


@dataclass(frozen=True)
class Layout:
    cells: Tuple[Cell, ...]
    edges: Tuple[ExchangeEdge, ...] = ()
    gates: Tuple[GatePad, ...] = ()
    inputs: Tuple[Tuple[str, str], ...] = ()
    outputs: Tuple[Tuple[str, str], ...] = ()
    params: PhysicsParams = field(default_factory=PhysicsParams)

    def __post_init__(self):
        # canonical ordering so structurally equal layouts compare equal
        object.__setattr__(self, "cells", tuple(sorted(self.cells, key=lambda c: c.id)))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        object.__setattr__(self, "gates", tuple(sorted(self.gates)))
        object.__setattr__(self, "inputs", tuple(tuple(p) for p in self.inputs))
        object.__setattr__(self, "outputs", tuple(tuple(p) for p in self.outputs))

    @cached_property
    def cell_map(self) -> Dict[str, Cell]:
        return {c.id: c for c in self.cells}

    @cached_property
    def ids(self) -> Tuple[str, ...]:
        return tuple(c.id for c in self.cells)

    @property
    def input_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.inputs)

    @property
    def output_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.outputs)

    @cached_property
    def input_map(self) -> Dict[str, str]:
        return dict(self.inputs)

    @cached_property
    def output_map(self) -> Dict[str, str]:
        return dict(self.outputs)

    @cached_property
    def terms(self) -> Tuple[Term, ...]:
        out = [Term(e.a, e.b, e.coupling) for e in self.edges]
        out += [Term(g.edge.a, g.edge.b, g.edge.coupling, g.controller, g.enable_when)
                for g in self.gates]
        return tuple(out)

    @cached_property
    def incident(self) -> Dict[str, Tuple[Term, ...]]:
        """Terms in which the cell is an endpoint."""
        acc = defaultdict(list)
        for t in self.terms:
            acc[t.a].append(t)
            acc[t.b].append(t)
        return {k: tuple(v) for k, v in acc.items()}

    @cached_property
    def controlled(self) -> Dict[str, Tuple[Term, ...]]:
        """Gated terms switched by the cell."""
        acc = defaultdict(list)
        for t in self.terms:
            if t.ctrl is not None:
                acc[t.ctrl].append(t)
        return {k: tuple(v) for k, v in acc.items()}

    @cached_property
    def neighbours(self) -> Dict[str, Tuple[str, ...]]:
        """Exchange neighbours, counting gated edges as edges."""
        acc = defaultdict(set)
        for t in self.terms:
            acc[t.a].add(t.b)
            acc[t.b].add(t.a)
        return {k: tuple(sorted(v)) for k, v in acc.items()}

    def zone_members(self, zone: int) -> Tuple[str, ...]:
        return tuple(c.id for c in self.cells if c.zone == zone)

    def replace(self, **changes) -> "Layout":
        fields_ = dict(cells=self.cells, edges=self.edges, gates=self.gates,
                       inputs=self.inputs, outputs=self.outputs, params=self.params)
        fields_.update(changes)
        return Layout(**fields_)

    def hop_distances(self) -> Dict[str, int]:
        """BFS hop count from the nearest input cell, ignoring gating."""
        dist = {cid: 0 for cid in self.input_map.values() if cid in self.cell_map}
        queue = deque(dist)
        while queue:
            cur = queue.popleft()
            for nb in self.neighbours.get(cur, ()):
                if nb not in dist:
                    dist[nb] = dist[cur] + 1
                    queue.append(nb)
        return dist


SpinState = Dict[str, Spin]


@dataclass
class ValidationReport:
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self):
        lines = [f"error: {e}" for e in self.errors] + [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) if lines else "ok"


def validate_layout(layout: Layout) -> ValidationReport:
    rep = ValidationReport()
    err, warn = rep.errors.append, rep.warnings.append

    seen_ids, seen_pos = set(), {}
    for c in layout.cells:
        if c.id in seen_ids:
            err(f"duplicate cell id {c.id!r}")
        seen_ids.add(c.id)
        if c.pos in seen_pos:
            err(f"position collision: {c.id!r} and {seen_pos[c.pos]!r} at {c.pos}")
        else:
            seen_pos[c.pos] = c.id
        if not isinstance(c.kind, CellKind):
            err(f"cell {c.id!r}: unknown kind {c.kind!r}")
        if c.zone not in range(N_PHASES):
            err(f"cell {c.id!r}: clock zone {c.zone} outside 0..{N_PHASES - 1}")
        if (c.kind == CellKind.FIXED) != (c.fixed_value is not None):
            err(f"cell {c.id!r}: fixed_value must be given iff kind is fixed")

    cells = layout.cell_map
    pairs = set()

    def check_edge(e: ExchangeEdge, what: str):
        for end in (e.a, e.b):
            if end not in cells:
                err(f"{what} {e.a}-{e.b}: dangling reference to {end!r}")
        if e.a == e.b:
            err(f"{what} {e.a}-{e.b}: self-loop")
        if e.pair in pairs:
            err(f"{what} {e.a}-{e.b}: more than one edge between the pair")
        pairs.add(e.pair)

    for e in layout.edges:
        check_edge(e, "edge")
    for g in layout.gates:
        check_edge(g.edge, "gate")
        if g.controller not in cells:
            err(f"gate {g.edge.a}-{g.edge.b}: dangling controller {g.controller!r}")
            continue
        if g.controller in (g.edge.a, g.edge.b):
            err(f"gate {g.edge.a}-{g.edge.b}: controller is an endpoint")
            continue
        ends = [cells[x].zone for x in (g.edge.a, g.edge.b) if x in cells]
        if ends and cells[g.controller].zone >= min(ends):
            warn(f"gate {g.edge.a}-{g.edge.b}: controller {g.controller!r} (zone "
                 f"{cells[g.controller].zone}) does not settle before zone {min(ends)}")

    for label, pairs_ in (("input", layout.inputs), ("output", layout.outputs)):
        names = [n for n, _ in pairs_]
        for n in set(names):
            if names.count(n) > 1:
                err(f"duplicate {label} name {n!r}")
        for name, cid in pairs_:
            if cid not in cells:
                err(f"{label} {name!r}: dangling reference to {cid!r}")
            elif label == "input" and cells[cid].kind != CellKind.INPUT:
                err(f"input {name!r}: cell {cid!r} is not of kind input")
    in_ids = [cid for _, cid in layout.inputs]
    for c in layout.cells:
        if c.kind == CellKind.INPUT and c.id not in in_ids:
            err(f"cell {c.id!r} is of kind input but not declared in [io]")
    if len(set(in_ids)) != len(in_ids):
        err("an input cell is declared under more than one name")

    h = layout.params.bias
    if not h > 0:
        err(f"bias must be positive, got {h}")
    if layout.terms:
        jmin = min(abs(t.coupling) for t in layout.terms)
        if not h < 2 * jmin:
            err(f"bias {h} must be below 2*min|J| = {2 * jmin}")

    if rep.ok:
        reach = layout.hop_distances()
        for c in layout.cells:
            if c.kind not in (CellKind.FIXED, CellKind.INPUT) and c.id not in reach:
                err(f"cell {c.id!r} is unreachable from every input")
    return rep


class LayoutError(ValueError):
    """Raised for layouts that cannot be parsed or fail validation."""


class LayoutSyntaxError(LayoutError):
    def __init__(self, msg: str, line: int, col: int = 1):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line, self.col = line, col


SECTIONS = ("params", "cells", "edges", "gates", "io")
REQUIRED_SECTIONS = ("params", "cells", "edges", "io")


def _tokens(line: str) -> List[Tuple[str, int]]:
    out, i = [], 0
    while i < len(line):
        if line[i].isspace():
            i += 1
            continue
        j = i
        while j < len(line) and not line[j].isspace():
            j += 1
        out.append((line[i:j], i + 1))
        i = j
    return out


def parse_layout(text: str) -> Layout:
    """Parse a layout document; the result is guaranteed to validate."""
    section = None
    seen = set()
    bias = None
    cells, edges, gates, inputs, outputs = [], [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("["):
            name = stripped[1:-1].strip() if stripped.endswith("]") else None
            if name not in SECTIONS:
                raise LayoutSyntaxError(f"unknown section header {stripped!r}", lineno,
                                        line.index("[") + 1)
            if name in seen:
                raise LayoutSyntaxError(f"section [{name}] repeated", lineno)
            section = name
            seen.add(name)
            continue
        toks = _tokens(line)
        if section is None:
            raise LayoutSyntaxError("content before the first section header", lineno, toks[0][1])
        if section == "params":
            bias = _parse_param(toks, lineno, bias)
        elif section == "cells":
            cells.append(_parse_cell(toks, lineno))
        elif section == "edges":
            if len(toks) != 3:
                raise LayoutSyntaxError("edge needs '<idA> <idB> <J>'", lineno, toks[0][1])
            edges.append(ExchangeEdge(toks[0][0], toks[1][0], _float(toks[2], lineno)))
        elif section == "gates":
            gates.append(_parse_gate(toks, lineno))
        elif section == "io":
            _parse_io(toks, lineno, inputs, outputs)
    missing = [s for s in REQUIRED_SECTIONS if s not in seen]
    if missing:
        raise LayoutError(f"missing section(s): {', '.join('[' + s + ']' for s in missing)}")
    if bias is None:
        raise LayoutError("[params] must set bias")
    layout = Layout(tuple(cells), tuple(edges), tuple(gates), tuple(inputs), tuple(outputs),
                    PhysicsParams(bias))
    rep = validate_layout(layout)
    if not rep.ok:
        raise LayoutError("invalid layout:\n" + "\n".join(rep.errors))
    return layout


def _float(tok, lineno) -> float:
    try:
        return float(tok[0])
    except ValueError:
        raise LayoutSyntaxError(f"expected a number, got {tok[0]!r}", lineno, tok[1]) from None


def _int(tok, lineno) -> int:
    try:
        return int(tok[0])
    except ValueError:
        raise LayoutSyntaxError(f"expected an integer, got {tok[0]!r}", lineno, tok[1]) from None


def _spin(tok, lineno) -> Spin:
    if tok[0] not in ("+1", "-1"):
        raise LayoutSyntaxError(f"expected +1 or -1, got {tok[0]!r}", lineno, tok[1])
    return Spin.parse(tok[0])


def _parse_param(toks, lineno, bias):
    if len(toks) != 3 or toks[1][0] != "=":
        raise LayoutSyntaxError("parameter lines look like 'bias = <float>'", lineno, toks[0][1])
    if toks[0][0] != "bias":
        raise LayoutSyntaxError(f"unknown parameter {toks[0][0]!r}", lineno, toks[0][1])
    if bias is not None:
        raise LayoutSyntaxError("bias set twice", lineno, toks[0][1])
    return _float(toks[2], lineno)


def _parse_cell(toks, lineno) -> Cell:
    if len(toks) not in (5, 6):
        raise LayoutSyntaxError("cell needs '<id> <x> <y> <kind> <zone> [<spin>]'", lineno,
                                toks[0][1])
    cid = toks[0][0]
    x, y = _int(toks[1], lineno), _int(toks[2], lineno)
    try:
        kind = CellKind(toks[3][0])
    except ValueError:
        raise LayoutSyntaxError(f"unknown cell kind {toks[3][0]!r}", lineno, toks[3][1]) from None
    zone = _int(toks[4], lineno)
    fixed = None
    if len(toks) == 6:
        fixed = _spin(toks[5], lineno)
    return Cell(cid, (x, y), kind, zone, fixed)


def _parse_gate(toks, lineno) -> GatePad:
    if len(toks) != 5:
        raise LayoutSyntaxError("gate needs '<idA> <idB> <J> ctrl=<id> when=<spin>'", lineno,
                                toks[0][1])
    ctrl_tok, when_tok = toks[3], toks[4]
    if not ctrl_tok[0].startswith("ctrl=") or len(ctrl_tok[0]) == 5:
        raise LayoutSyntaxError("expected ctrl=<id>", lineno, ctrl_tok[1])
    if not when_tok[0].startswith("when="):
        raise LayoutSyntaxError("expected when=<+1|-1>", lineno, when_tok[1])
    edge = ExchangeEdge(toks[0][0], toks[1][0], _float(toks[2], lineno))
    return GatePad(edge, ctrl_tok[0][5:], _spin((when_tok[0][5:], when_tok[1] + 5), lineno))


def _parse_io(toks, lineno, inputs, outputs):
    if len(toks) != 4 or toks[2][0] != "=" or toks[0][0] not in ("input", "output"):
        raise LayoutSyntaxError("io lines look like 'input <name> = <id>'", lineno, toks[0][1])
    (inputs if toks[0][0] == "input" else outputs).append((toks[1][0], toks[3][0]))


def serialize_layout(layout: Layout) -> str:
    out = ["[params]", f"bias = {layout.params.bias!r}", "", "[cells]"]
    for c in sorted(layout.cells, key=lambda c: c.id):
        line = f"{c.id} {c.pos[0]} {c.pos[1]} {c.kind.value} {c.zone}"
        if c.fixed_value is not None:
            line += f" {c.fixed_value.token()}"
        out.append(line)
    out += ["", "[edges]"]
    out += [f"{e.a} {e.b} {e.coupling!r}" for e in layout.edges]
    out += ["", "[gates]"]
    out += [f"{g.edge.a} {g.edge.b} {g.edge.coupling!r} ctrl={g.controller} "
            f"when={g.enable_when.token()}" for g in layout.gates]
    out += ["", "[io]"]
    out += [f"input {n} = {cid}" for n, cid in layout.inputs]
    out += [f"output {n} = {cid}" for n, cid in layout.outputs]
    return "\n".join(out) + "\n"


def load_layout(path) -> Layout:
    with open(path, encoding="utf-8") as fh:
        return parse_layout(fh.read())


def all_up_state(layout: Layout) -> SpinState:
    """Bias-aligned start: every cell up except fixed cells."""
    return {c.id: (c.fixed_value if c.kind == CellKind.FIXED else Spin.UP) for c in layout.cells}


def state_string(layout: Layout, state: Mapping[str, int]) -> str:
    return "".join("+" if state[cid] > 0 else "-" for cid in layout.ids)


def cells_of_kind(layout: Layout, kind: CellKind) -> Iterable[Cell]:
    return (c for c in layout.cells if c.kind == kind)
