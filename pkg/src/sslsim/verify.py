"""Truth-table verification, layout metrics and the adder comparison."""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

from .clocked import (CLOCK_INPUT, DEFAULT_CONFIG, FULL_ADDER_INPUTS, NonConvergenceError,
                      SolverConfig, evaluate, measure_latency, standard_vectors)
from .core import Layout, Spin
from .library import AdderKind, build_nand
from .solver import SolverError

ADDER_OUTPUTS = ("S", "Co")


def reference_full_adder(a: int, b: int, ci: int) -> Tuple[int, int]:
    """(sum, carry) for one bit."""
    return a ^ b ^ ci, int(a + b + ci >= 2)


@dataclass
class TruthRow:
    inputs: Dict[str, int]
    expected: Dict[str, int]
    observed: Dict[str, int]
    passed: bool
    diagnostic: str = ""


@dataclass
class TruthReport:
    name: str
    rows: List[TruthRow] = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(r.passed for r in self.rows)

    @property
    def total(self) -> int:
        return len(self.rows)

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def format(self) -> str:
        lines = [f"{self.name}: {self.passed}/{self.total}"]
        for r in self.rows:
            ins = " ".join(f"{k}={v}" for k, v in r.inputs.items())
            exp = " ".join(f"{k}={v}" for k, v in r.expected.items())
            obs = " ".join(f"{k}={v}" for k, v in r.observed.items()) or "-"
            flag = "ok  " if r.passed else "FAIL"
            line = f"  {flag} {ins} | expected {exp} | observed {obs}"
            if r.diagnostic:
                line += f"  ({r.diagnostic})"
            lines.append(line)
        return "\n".join(lines)


def _check_adder_interface(layout: Layout):
    ins = set(layout.input_names)
    if not set(FULL_ADDER_INPUTS) <= ins or ins - set(FULL_ADDER_INPUTS) - {CLOCK_INPUT}:
        raise ValueError(f"expected inputs A, B, Ci (and optionally {CLOCK_INPUT}), got {sorted(ins)}")
    outs = set(layout.output_names)
    if not outs or outs - set(ADDER_OUTPUTS):
        raise ValueError(f"expected outputs among S, Co, got {sorted(outs)}")


def truth_table_check(layout: Layout, name: str = "layout",
                      config: SolverConfig = DEFAULT_CONFIG) -> TruthReport:
    """Compare every input vector against the full-adder reference.

    Each vector is settled from the all-up start and again from the settled
    state of every other vector, since an array is driven one vector after
    another; a row passes only if all of these agree with the reference.
    Only the outputs the layout declares are compared.
    """
    _check_adder_interface(layout)
    vectors = standard_vectors(layout)
    settled = []
    for i, vec in enumerate(vectors):
        try:
            settled.append(evaluate(layout, vec, config, salt=(i,)).state)
        except (NonConvergenceError, SolverError):
            settled.append(None)
    report = TruthReport(name)
    for i, vec in enumerate(vectors):
        bits = {k: vec[k].bit for k in FULL_ADDER_INPUTS}
        s, co = reference_full_adder(bits["A"], bits["B"], bits["Ci"])
        expected = {k: v for k, v in (("S", s), ("Co", co)) if k in layout.output_names}
        if CLOCK_INPUT in vec:
            bits[CLOCK_INPUT] = vec[CLOCK_INPUT].bit
        observed, diag = {}, ""
        starts = [(None, "all-up start")] + [(st, f"after vector {j}") for j, st in
                                             enumerate(settled) if j != i and st is not None]
        for k, (start, label) in enumerate(starts):
            try:
                out = evaluate(layout, vec, config, initial=start, salt=(i, k)).outputs
            except (NonConvergenceError, SolverError) as exc:
                diag = f"{label}: {exc}"
                break
            out = {n: out[n] for n in expected}
            if k == 0:
                observed = out
            if out != expected:
                diag = f"{label}: got " + " ".join(f"{n}={v}" for n, v in out.items())
                break
        report.rows.append(TruthRow(bits, expected, observed, not diag, diag))
    return report


@dataclass(frozen=True)
class MetricsReport:
    dot_count: int
    gate_pad_count: int
    clock_zone_span: int
    pipeline_latency: int


def _longest_io_path(layout: Layout) -> List[str]:
    """Shortest input-to-output path to the output farthest from the inputs."""
    starts = [cid for _, cid in layout.inputs]
    prev = {cid: None for cid in starts}
    dist = {cid: 0 for cid in starts}
    queue = deque(starts)
    while queue:
        cur = queue.popleft()
        for nb in layout.neighbours.get(cur, ()):
            if nb not in dist:
                dist[nb], prev[nb] = dist[cur] + 1, cur
                queue.append(nb)
    reachable = [cid for _, cid in layout.outputs if cid in dist]
    if not reachable:
        return []
    node = max(reachable, key=lambda c: (dist[c], c))
    path = []
    while node is not None:
        path.append(node)
        node = prev[node]
    return path[::-1]


def metrics(layout: Layout, config: SolverConfig = DEFAULT_CONFIG) -> MetricsReport:
    path = _longest_io_path(layout)
    span = len({layout.cell_map[c].zone for c in path})
    return MetricsReport(len(layout.cells), len(layout.gates), span,
                         measure_latency(layout, config=config))


CSV_FIELDS = ("name", "dot_count", "gate_pad_count", "clock_zone_span", "pipeline_latency")


@dataclass
class ComparisonVerdict:
    passed: bool
    violations: List[str]
    rows: List[Tuple[str, MetricsReport]]

    def table(self) -> str:
        head = f"{'name':<20} {'dots':>5} {'gate pads':>9} {'zone span':>9} {'latency':>7}"
        lines = [head]
        for name, m in self.rows:
            lines.append(f"{name:<20} {m.dot_count:>5} {m.gate_pad_count:>9} "
                         f"{m.clock_zone_span:>9} {m.pipeline_latency:>7}")
        lines.append("verdict: " + ("PASS" if self.passed else "FAIL"))
        lines += [f"  violated: {v}" for v in self.violations]
        return "\n".join(lines) + "\n"

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for name, m in self.rows:
            w.writerow([name, m.dot_count, m.gate_pad_count, m.clock_zone_span, m.pipeline_latency])
        return buf.getvalue()


def compare_metrics(reports: Iterable[Tuple[str, MetricsReport]]) -> ComparisonVerdict:
    """Check the dot-count claims across the five adders.

    Mirror must match the complementary dot count while using more gate
    pads; the transmission-gate and both Manchester adders must use fewer
    dots than the complementary one.
    """
    rows = list(reports)
    names = [n for n, _ in rows]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ValueError(f"duplicate adder kind(s): {dupes}")
    missing = [k.value for k in AdderKind if k.value not in names]
    if missing:
        raise ValueError(f"missing adder kind(s): {missing}")
    by = dict(rows)
    comp = by[AdderKind.COMPLEMENTARY.value]
    mirror = by[AdderKind.MIRROR.value]
    bad = []
    if mirror.dot_count != comp.dot_count:
        bad.append(f"mirror dot_count {mirror.dot_count} != complementary {comp.dot_count}")
    if not mirror.gate_pad_count > comp.gate_pad_count:
        bad.append(f"mirror gate_pad_count {mirror.gate_pad_count} not above "
                   f"complementary {comp.gate_pad_count}")
    for kind in (AdderKind.TRANSMISSION_GATE, AdderKind.STATIC_MANCHESTER,
                 AdderKind.DYNAMIC_MANCHESTER):
        m = by[kind.value]
        if not m.dot_count < comp.dot_count:
            bad.append(f"{kind.value} dot_count {m.dot_count} not below complementary "
                       f"{comp.dot_count}")
    order = {k.value: i for i, k in enumerate(AdderKind)}
    rows.sort(key=lambda r: order.get(r[0], len(order)))
    return ComparisonVerdict(not bad, bad, rows)


def nand_sweep(biases: Sequence[float], config: SolverConfig = DEFAULT_CONFIG):
    """Relaxed NAND output for the four input pairs at each bias value.

    Returns ``[(bias, {(a, b): y}, all_correct)]``.
    """
    out = []
    for h in biases:
        layout = build_nand(bias=h)
        table = {}
        for a in (0, 1):
            for b in (0, 1):
                res = evaluate(layout, {"A": Spin.from_bit(a), "B": Spin.from_bit(b)}, config)
                table[a, b] = res.outputs["Y"]
        ok = all(y == 1 - (a & b) for (a, b), y in table.items())
        out.append((h, table, ok))
    return out
