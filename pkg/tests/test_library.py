import itertools
from importlib import resources

import pytest

from sslsim.clocked import CLOCK_INPUT, evaluate, run_to_fixpoint, standard_vectors
from sslsim.core import CellKind, Spin, serialize_layout, validate_layout
from sslsim.library import AdderKind, build_adder, build_all, build_nand, build_wire
from sslsim.verify import metrics, reference_full_adder


def bits_of(v):
    return tuple(v[k].bit for k in ("A", "B", "Ci"))


def gate_active(g, state):
    return state[g.controller] == g.enable_when


def test_five_kinds():
    assert [k.value for k in AdderKind] == ["complementary", "mirror", "transmission_gate",
                                           "static_manchester", "dynamic_manchester"]
    assert list(build_all()) == [k.value for k in AdderKind]
    assert build_adder("mirror") == build_adder(AdderKind.MIRROR)


@pytest.mark.parametrize("n", range(1, 9))
def test_wire_parity(n):
    lay = build_wire(n)
    assert len(lay.cells) == n + 1
    for x in (0, 1):
        out = run_to_fixpoint(lay, {"IN": Spin.from_bit(x)}).outputs["OUT"]
        assert out == x ^ (n % 2)


def test_wire_examples():
    assert run_to_fixpoint(build_wire(1), {"IN": Spin.UP}).outputs["OUT"] == 0
    assert run_to_fixpoint(build_wire(2), {"IN": Spin.UP}).outputs["OUT"] == 1
    assert run_to_fixpoint(build_wire(7), {"IN": Spin.DOWN}).outputs["OUT"] == 1
    zones = [c.zone for c in sorted(build_wire(5).cells, key=lambda c: c.pos)]
    assert zones == [0, 1, 2, 0, 1, 2]
    with pytest.raises(ValueError):
        build_wire(0)


def test_nand_structure_and_truth():
    lay = build_nand()
    assert sorted(c.kind.value for c in lay.cells) == ["input", "input", "output"]
    assert all(e.coupling > 0 for e in lay.edges) and len(lay.edges) == 2
    for a, b in itertools.product((0, 1), repeat=2):
        y = run_to_fixpoint(lay, {"A": Spin.from_bit(a), "B": Spin.from_bit(b)}).outputs["Y"]
        assert y == 1 - (a & b)


def test_fixtures_validate_clean_and_interfaces():
    for name, lay in build_all().items():
        rep = validate_layout(lay)
        assert rep.errors == [] and rep.warnings == [], name
        extra = (CLOCK_INPUT,) if name == "dynamic_manchester" else ()
        assert lay.input_names == ("A", "B", "Ci") + extra
        assert set(lay.output_names) <= {"S", "Co"} and "Co" in lay.output_names


def test_golden_fixture_files():
    for name, lay in {**build_all(), "nand": build_nand()}.items():
        text = resources.files("sslsim").joinpath("fixtures", f"{name}.ssl").read_text(encoding="utf-8")
        assert text == serialize_layout(lay), name


@pytest.mark.parametrize("kind", [k.value for k in AdderKind])
def test_truth_table(kind):
    lay = build_adder(kind)
    for v in standard_vectors(lay):
        s, co = reference_full_adder(*bits_of(v))
        out = evaluate(lay, v).outputs
        assert out["Co"] == co
        if "S" in out:
            assert out["S"] == s


def test_complementary_has_no_gate_pads():
    assert build_adder("complementary").gates == ()


def test_mirror_controllers_compute_products():
    lay = build_adder("mirror")
    for v in standard_vectors(lay):
        a, b, ci = bits_of(v)
        st = evaluate(lay, v).state
        # the controller dots are NAND(A,B) and NAND(not A, not B)
        assert st["ab"].bit == 1 - (a & b)
        assert st["nab"].bit == 1 - ((1 - a) & (1 - b))


def test_mirror_redundancy_witness():
    lay = build_adder("mirror")
    for v in standard_vectors(lay):
        res = evaluate(lay, v)
        assert res.state["X"].bit == res.outputs["S"]


@pytest.mark.parametrize("kind", ["transmission_gate", "static_manchester", "dynamic_manchester"])
def test_setup_circuit_propagate(kind):
    lay = build_adder(kind)
    for v in standard_vectors(lay):
        a, b, _ = bits_of(v)
        p = evaluate(lay, v).state["P"].bit
        assert p == (1 - b if a else b)


def _mux_gates(lay, node):
    return [g for g in lay.gates if node in (g.edge.a, g.edge.b)]


def test_static_manchester_paths_exclusive():
    lay = build_adder("static_manchester")
    paths = _mux_gates(lay, "Co")
    assert len(paths) == 3
    for v in standard_vectors(lay):
        st = evaluate(lay, v).state
        assert sum(gate_active(g, st) for g in paths) == 1


def test_dynamic_manchester_paths_exclusive():
    lay = build_adder("dynamic_manchester")
    paths = _mux_gates(lay, "Cn")
    assert len(paths) == 3
    controllers = {g.controller for g in paths}
    assert any(c.startswith("Phi") for c in controllers)
    for v in standard_vectors(lay):
        evaluated = evaluate(lay, v).state
        assert sum(gate_active(g, evaluated) for g in paths) <= 1
        pre = dict(v)
        pre[CLOCK_INPUT] = Spin.DOWN
        precharged = run_to_fixpoint(lay, pre).state
        active = [g for g in paths if gate_active(g, precharged)]
        assert len(active) == 1 and active[0].controller.startswith("Phi")


def test_dot_count_ordering():
    counts = {n: len(l.cells) for n, l in build_all().items()}
    gates = {n: len(l.gates) for n, l in build_all().items()}
    comp = counts["complementary"]
    assert counts["mirror"] == comp
    assert gates["mirror"] > gates["complementary"] == 0
    for n in ("transmission_gate", "static_manchester", "dynamic_manchester"):
        assert counts[n] < comp, n


def test_metrics_examples():
    w = metrics(build_wire(3))
    assert (w.dot_count, w.gate_pad_count) == (4, 0)
    assert metrics(build_nand()).dot_count == len(build_nand().cells) == 3
    assert metrics(build_adder("mirror")).gate_pad_count >= 3


def test_fixed_dots_hold_value_after_settle():
    for lay in build_all().values():
        fixed = [c for c in lay.cells if c.kind == CellKind.FIXED]
        for v in standard_vectors(lay)[:2]:
            st = evaluate(lay, v).state
            assert all(st[c.id] == c.fixed_value for c in fixed)
