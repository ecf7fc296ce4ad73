import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import layouts_st, random_layouts
from sslsim.clocked import (CLOCK_INPUT, NonConvergenceError, SolverConfig, clamp_inputs, evaluate,
                            format_trace, macro_cycle, make_vector, measure_latency, phase_members,
                            read_outputs, run_stream, run_to_fixpoint, standard_vectors, step_phase)
from sslsim.core import Cell, CellKind, ExchangeEdge, Layout, Spin, all_up_state
from sslsim.solver import energy
from sslsim.verify import reference_full_adder


def vec(lay, **bits):
    return make_vector(lay, **bits)


def test_clamp_writes_inputs(adders):
    lay = adders["complementary"]
    st_ = clamp_inputs(lay, all_up_state(lay), vec(lay, A=1, B=0, Ci=1))
    assert [st_[lay.input_map[n]] for n in ("A", "B", "Ci")] == [1, -1, 1]
    assert clamp_inputs(lay, st_, vec(lay, A=1, B=0, Ci=1)) == st_
    others = {k: v for k, v in st_.items() if k not in lay.input_map.values()}
    assert others == {k: v for k, v in all_up_state(lay).items() if k not in lay.input_map.values()}


def test_clamp_rejects_name_mismatch(adders):
    lay = adders["complementary"]
    with pytest.raises(KeyError, match="missing"):
        clamp_inputs(lay, all_up_state(lay), vec(lay, A=1, B=0))
    with pytest.raises(KeyError, match="unknown"):
        clamp_inputs(lay, all_up_state(lay), vec(lay, A=1, B=0, Ci=1, D=0))


def test_empty_phase_is_identity(nand):
    st_ = clamp_inputs(nand, all_up_state(nand), vec(nand, A=1, B=1))
    assert phase_members(nand, 2) == []
    assert step_phase(nand, st_, 2) == st_
    with pytest.raises(ValueError):
        step_phase(nand, st_, 3)


def test_nand_phase_one(nand):
    st_ = clamp_inputs(nand, all_up_state(nand), vec(nand, A=1, B=1))
    assert step_phase(nand, st_, 1)["Y"] == Spin.DOWN


@pytest.mark.parametrize("kind, bits, expected", [
    ("complementary", dict(A=1, B=0, Ci=1), {"S": 0, "Co": 1}),
    ("mirror", dict(A=1, B=0, Ci=0), {"S": 1, "Co": 0}),
    ("transmission_gate", dict(A=1, B=0, Ci=0), {"S": 1, "Co": 0}),
    ("static_manchester", dict(A=1, B=0, Ci=0), {"Co": 0}),
    ("dynamic_manchester", dict(A=1, B=1, Ci=0, Phi=1), {"Co": 1}),
])
def test_worked_examples(adders, kind, bits, expected):
    lay = adders[kind]
    res = evaluate(lay, vec(lay, **bits))
    assert {k: res.outputs[k] for k in expected} == expected
    assert res.macro_cycles >= 1


def test_phi_alias(adders):
    lay = adders["dynamic_manchester"]
    assert set(vec(lay, A=1, B=1, Ci=0, Phi=1)) == {"A", "B", "Ci", CLOCK_INPUT}


def test_precharge_drives_carry_node(adders):
    lay = adders["dynamic_manchester"]
    # clock low: the carry node is precharged regardless of data
    for bits in ((0, 0, 0), (1, 1, 1)):
        res = run_to_fixpoint(lay, vec(lay, A=bits[0], B=bits[1], Ci=bits[2], Phi=0))
        assert res.outputs["Co"] == 0


def test_all_fixed_layout_reads_verbatim():
    cells = (Cell("i", (0, 0), CellKind.INPUT, 0),
             Cell("u", (1, 0), CellKind.FIXED, 1, Spin.UP),
             Cell("d", (2, 0), CellKind.FIXED, 2, Spin.DOWN))
    lay = Layout(cells, (ExchangeEdge("i", "u"), ExchangeEdge("u", "d")), (), (("I", "i"),),
                 (("U", "u"), ("D", "d")))
    assert run_to_fixpoint(lay, {"I": Spin.DOWN}).outputs == {"U": 1, "D": 0}


def test_trace_ends_at_read_state(adders):
    lay = adders["mirror"]
    res = run_to_fixpoint(lay, vec(lay, A=0, B=1, Ci=1), record_trace=True)
    assert res.trace[-1][2] == res.state
    assert len(res.trace) == 3 * res.macro_cycles
    assert read_outputs(lay, res.trace[-1][2]) == res.outputs


def test_trace_format(nand):
    res = run_to_fixpoint(nand, vec(nand, A=1, B=1), record_trace=True)
    text = format_trace(nand, res.trace)
    lines = text.splitlines()
    assert lines[0] == "# cells: A B Y"
    assert lines[1:4] == ["0 0 +++", "0 1 ++-", "0 2 ++-"]
    assert text.endswith("\n")


def test_fixed_point_is_fixed(adders):
    for lay in adders.values():
        for v in standard_vectors(lay):
            res = evaluate(lay, v)
            assert macro_cycle(lay, res.state) == res.state


def test_budget_exhaustion_reports_last_state(adders):
    lay = adders["complementary"]
    v = vec(lay, A=1, B=1, Ci=1)
    with pytest.raises(ValueError):
        run_to_fixpoint(lay, v, max_cycles=0)
    # one cycle changes the all-up start, so a confirming cycle never happens
    with pytest.raises(NonConvergenceError) as info:
        run_to_fixpoint(lay, v, max_cycles=1)
    assert info.value.cycles == 1
    assert info.value.state == macro_cycle(lay, clamp_inputs(lay, all_up_state(lay), v))


def test_cfg_determinism_with_anneal(adders):
    lay = adders["transmission_gate"]
    cfg = SolverConfig(anneal=True, seed=123)
    v = vec(lay, A=1, B=1, Ci=0)
    a = evaluate(lay, v, cfg, record_trace=True)
    b = evaluate(lay, v, cfg, record_trace=True)
    assert format_trace(lay, a.trace) == format_trace(lay, b.trace)
    assert a.outputs == b.outputs


def test_stream_single_vector(adders):
    lay = adders["complementary"]
    v = vec(lay, A=0, B=1, Ci=1)
    assert run_stream(lay, [v]) == [run_to_fixpoint(lay, v).outputs]
    with pytest.raises(ValueError):
        run_stream(lay, [])


def test_stream_complementary_gives_adder_rows(adders):
    lay = adders["complementary"]
    vs = standard_vectors(lay)
    out = run_stream(lay, vs)
    rows = [reference_full_adder(v["A"].bit, v["B"].bit, v["Ci"].bit) for v in vs]
    assert [(o["S"], o["Co"]) for o in out] == rows


def test_stream_equals_independent_runs(adders):
    for name, lay in adders.items():
        vs = standard_vectors(lay)
        streamed = run_stream(lay, vs)
        assert streamed == [evaluate(lay, v).outputs for v in vs], name


def test_latency_positive_and_bounded(adders):
    for lay in adders.values():
        assert 1 <= measure_latency(lay) <= 3


@settings(max_examples=50, deadline=None)
@given(layouts_st, st.integers(0, 10_000))
def test_phase_never_raises_energy_and_inputs_hold(lay, seed):
    rng = random.Random(seed)
    st_ = {c.id: (c.fixed_value if c.kind == CellKind.FIXED else rng.choice((Spin.UP, Spin.DOWN)))
           for c in lay.cells}
    ins = {cid: st_[cid] for _, cid in lay.inputs}
    fixed = {c.id: c.fixed_value for c in lay.cells if c.kind == CellKind.FIXED}
    for cycle in range(2):
        for phase in range(3):
            nxt = step_phase(lay, st_, phase)
            assert energy(lay, nxt) <= energy(lay, st_)
            assert {k: nxt[k] for k in ins} == ins
            assert {k: nxt[k] for k in fixed} == fixed
            changed = {k for k in st_ if nxt[k] != st_[k]}
            assert changed <= set(phase_members(lay, phase))
            st_ = nxt


def test_random_layout_runs_are_deterministic():
    for lay in random_layouts(20, seed=77, max_free=8):
        v = {n: Spin.UP for n in lay.input_names}
        try:
            a = run_to_fixpoint(lay, v, record_trace=True)
        except NonConvergenceError as exc:
            with pytest.raises(NonConvergenceError) as again:
                run_to_fixpoint(lay, v)
            assert again.value.state == exc.state
            continue
        b = run_to_fixpoint(lay, v, record_trace=True)
        assert format_trace(lay, a.trace) == format_trace(lay, b.trace)
