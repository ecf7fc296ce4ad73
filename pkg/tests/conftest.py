import random

import pytest
from hypothesis import strategies as st

from sslsim.core import Cell, CellKind, ExchangeEdge, GatePad, Layout, PhysicsParams, Spin, validate_layout
from sslsim.library import build_all, build_nand

# dyadic values keep every energy sum exact in floating point
COUPLINGS = (0.75, 1.0, 1.25, 1.5, 2.0, -1.0)
BIASES = (0.25, 0.5, 0.75, 1.0)


def random_layout(rng: random.Random, max_free: int = 12, gate_frac: float = 0.3) -> Layout:
    """A valid random layout with between 1 and ``max_free`` relaxable cells."""
    n_in = rng.randint(1, 3)
    n_free = rng.randint(1, max_free)
    n_fixed = rng.randint(0, 2)
    cells, inputs, outputs = [], [], []
    for i in range(n_in):
        cells.append(Cell(f"i{i}", (0, i), CellKind.INPUT, 0))
        inputs.append((f"IN{i}", f"i{i}"))
    for i in range(n_free):
        kind = CellKind.OUTPUT if i == n_free - 1 or rng.random() < 0.15 else CellKind.INTERNAL
        cells.append(Cell(f"c{i:02d}", (1 + i, rng.randint(0, 3)), kind, rng.randrange(3)))
        if kind == CellKind.OUTPUT:
            outputs.append((f"OUT{i}", f"c{i:02d}"))
    for i in range(n_fixed):
        cells.append(Cell(f"f{i}", (-1, i), CellKind.FIXED, rng.randrange(3),
                          rng.choice((Spin.UP, Spin.DOWN))))
    ids = [c.id for c in cells]
    free_ids = [c.id for c in cells if c.kind in (CellKind.OUTPUT, CellKind.INTERNAL)]
    pairs, edges, gates = set(), [], []

    def add(a, b, gated):
        if a == b or frozenset((a, b)) in pairs:
            return
        pairs.add(frozenset((a, b)))
        e = ExchangeEdge(a, b, rng.choice(COUPLINGS))
        ctrls = [c for c in ids if c not in (a, b)]
        if gated and ctrls:
            gates.append(GatePad(e, rng.choice(ctrls), rng.choice((Spin.UP, Spin.DOWN))))
        else:
            edges.append(e)

    # tree edges from earlier cells keep each free cell reachable
    reached = [c.id for c in cells if c.kind == CellKind.INPUT]
    for cid in free_ids:
        add(rng.choice(reached), cid, rng.random() < gate_frac)
        reached.append(cid)
    for c in cells:
        if c.kind == CellKind.FIXED:
            add(c.id, rng.choice(free_ids), False)
    for _ in range(rng.randint(0, n_free)):
        add(rng.choice(ids), rng.choice(free_ids), rng.random() < gate_frac)
    jmin = min(abs(e.coupling) for e in [*edges, *(g.edge for g in gates)])
    bias = rng.choice([h for h in BIASES if h < 2 * jmin])
    layout = Layout(tuple(cells), tuple(edges), tuple(gates), tuple(inputs), tuple(outputs),
                    PhysicsParams(bias))
    rep = validate_layout(layout)
    assert rep.ok, rep.errors
    return layout


def random_layouts(n: int, seed: int, **kw):
    rng = random.Random(seed)
    return [random_layout(rng, **kw) for _ in range(n)]


layouts_st = st.integers(0, 2**32 - 1).map(lambda s: random_layout(random.Random(s)))


@pytest.fixture(scope="session")
def adders():
    return build_all()


@pytest.fixture(scope="session")
def nand():
    return build_nand()


# acceptance criteria report one line each in the terminal summary
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number: int, title: str, ok: bool, detail: str = ""):
        ACCEPTANCE[number] = (title, ok, detail)
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
        print(line + (f" ({detail})" if detail else ""))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        extra = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"criterion {n} {'PASS' if ok else 'FAIL'}: {title}{extra}")
