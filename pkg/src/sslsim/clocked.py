"""3-phase clocked evaluation of a layout.

During phase ``k`` the cells of clock zone ``k`` relax jointly to their
ground state while every other cell is a frozen boundary.  Inputs are
clamped and never relax; outputs are read as logic levels.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import N_PHASES, CellKind, Layout, Spin, SpinState, all_up_state, state_string
from .solver import (DEFAULT_EXACT_LIMIT, AnnealSchedule, RelaxProblem, relax_anneal,
                     relax_exact)

CLOCK_INPUT = "Φ"
CLOCK_ALIASES = ("Phi", "phi")
FULL_ADDER_INPUTS = ("A", "B", "Ci")

InputVector = Dict[str, Spin]


@dataclass(frozen=True)
class SolverConfig:
    exact_limit: int = DEFAULT_EXACT_LIMIT
    anneal: bool = False
    t_start: Optional[float] = None
    t_end: Optional[float] = None
    sweeps: int = 500
    seed: int = 0
    max_cycles: Optional[int] = None

    def schedule(self, layout: Layout, salt=()) -> AnnealSchedule:
        seed = int(np.random.SeedSequence([self.seed, *salt]).generate_state(1)[0])
        return AnnealSchedule.default_for(layout, seed=seed, sweeps=self.sweeps,
                                          t_start=self.t_start, t_end=self.t_end)


DEFAULT_CONFIG = SolverConfig()


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, state: SpinState, cycles: int):
        super().__init__(msg)
        self.state = state
        self.cycles = cycles


@dataclass
class SimResult:
    outputs: Dict[str, int]
    macro_cycles: int
    state: SpinState
    trace: Optional[List[Tuple[int, int, SpinState]]] = None


def as_spin(value) -> Spin:
    if isinstance(value, Spin):
        return value
    if value in (1, True, "1", "+1", "+"):
        return Spin.UP
    if value in (0, -1, False, "0", "-1", "-"):
        return Spin.DOWN
    raise ValueError(f"not a logic level: {value!r}")


def make_vector(layout: Layout, **bits) -> InputVector:
    vec = {}
    for name, v in bits.items():
        if name in CLOCK_ALIASES and CLOCK_INPUT in layout.input_names:
            name = CLOCK_INPUT
        vec[name] = as_spin(v)
    return vec


def clamp_inputs(layout: Layout, state: Mapping[str, Spin], vector: Mapping[str, object]) -> SpinState:
    names = set(layout.input_names)
    given = set(vector)
    if given != names:
        problems = []
        if names - given:
            problems.append(f"missing {sorted(names - given)}")
        if given - names:
            problems.append(f"unknown {sorted(given - names)}")
        raise KeyError("input vector does not match layout inputs: " + ", ".join(problems))
    out = dict(state)
    for name, cid in layout.inputs:
        out[cid] = as_spin(vector[name])
    return out


def read_outputs(layout: Layout, state: Mapping[str, int]) -> Dict[str, int]:
    return {name: 1 if state[cid] > 0 else 0 for name, cid in layout.outputs}


def phase_members(layout: Layout, phase: int) -> List[str]:
    return [c.id for c in layout.cells
            if c.zone == phase and c.kind not in (CellKind.INPUT, CellKind.FIXED)]


def step_phase(layout: Layout, state: Mapping[str, Spin], phase: int,
               config: SolverConfig = DEFAULT_CONFIG, salt=()) -> SpinState:
    if phase not in range(N_PHASES):
        raise ValueError(f"phase must be in 0..{N_PHASES - 1}")
    free = phase_members(layout, phase)
    out = dict(state)
    if not free:
        return out
    problem = RelaxProblem.from_state(layout, state, free)
    if config.anneal:
        relaxed = relax_anneal(problem, config.schedule(layout, (*salt, phase)))
    else:
        relaxed = relax_exact(problem, config.exact_limit)
    out.update(relaxed)
    return out


def macro_cycle(layout: Layout, state: Mapping[str, Spin], config: SolverConfig = DEFAULT_CONFIG,
                cycle: int = 0, trace: Optional[list] = None, salt=()) -> SpinState:
    cur = dict(state)
    for phase in range(N_PHASES):
        cur = step_phase(layout, cur, phase, config, salt=(*salt, cycle))
        if trace is not None:
            trace.append((cycle, phase, dict(cur)))
    return cur


def default_max_cycles(layout: Layout) -> int:
    dist = layout.hop_distances()
    depth = max((dist.get(cid, 0) for _, cid in layout.outputs), default=0) + 1
    return max(4, 4 * depth)


def run_to_fixpoint(layout: Layout, vector: Mapping[str, object], max_cycles: Optional[int] = None,
                    config: SolverConfig = DEFAULT_CONFIG, record_trace: bool = False,
                    initial: Optional[Mapping[str, Spin]] = None, salt=()) -> SimResult:
    """Clamp ``vector`` and run macro-cycles until one of them changes nothing."""
    if max_cycles is None:
        max_cycles = config.max_cycles or default_max_cycles(layout)
    if max_cycles < 1:
        raise ValueError("max_cycles must be at least 1")
    state = clamp_inputs(layout, initial if initial is not None else all_up_state(layout), vector)
    trace = [] if record_trace else None
    for cycle in range(max_cycles):
        nxt = macro_cycle(layout, state, config, cycle, trace, salt)
        if nxt == state:
            return SimResult(read_outputs(layout, nxt), cycle + 1, nxt, trace)
        state = nxt
    raise NonConvergenceError(f"no fixed point after {max_cycles} macro-cycles", state, max_cycles)


def evaluate(layout: Layout, vector: Mapping[str, object], config: SolverConfig = DEFAULT_CONFIG,
             record_trace: bool = False, initial: Optional[Mapping[str, Spin]] = None,
             salt=()) -> SimResult:
    """Settle one vector, applying precharge/evaluate when the layout has a clock input.

    With a clock input held high the layout is first settled with the clock
    low (precharge) and then, from that state, with the clock high.
    """
    if CLOCK_INPUT in layout.input_names and as_spin(vector[CLOCK_INPUT]) is Spin.UP:
        pre = dict(vector)
        pre[CLOCK_INPUT] = Spin.DOWN
        first = run_to_fixpoint(layout, pre, config=config, record_trace=record_trace,
                                initial=initial, salt=(*salt, 0))
        second = run_to_fixpoint(layout, vector, config=config, record_trace=record_trace,
                                 initial=first.state, salt=(*salt, 1))
        if record_trace:
            offset = first.macro_cycles
            second.trace = first.trace + [(c + offset, p, s) for c, p, s in second.trace]
        return second
    return run_to_fixpoint(layout, vector, config=config, record_trace=record_trace,
                           initial=initial, salt=salt)


def standard_vectors(layout: Layout) -> List[InputVector]:
    """All input vectors with A, B, Ci counting up (A most significant), clock held high.

    Layouts without the full-adder inputs count up over their declared inputs.
    """
    names = list(layout.input_names)
    clocked = CLOCK_INPUT in names
    data = [n for n in names if n != CLOCK_INPUT]
    if set(FULL_ADDER_INPUTS) <= set(data):
        data = list(FULL_ADDER_INPUTS) + [n for n in data if n not in FULL_ADDER_INPUTS]
    vectors = []
    for bits in itertools.product((0, 1), repeat=len(data)):
        vec = {n: Spin.from_bit(b) for n, b in zip(data, bits)}
        if clocked:
            vec[CLOCK_INPUT] = Spin.UP
        vectors.append(vec)
    return vectors


def measure_latency(layout: Layout, vectors: Optional[Sequence[Mapping]] = None,
                    config: SolverConfig = DEFAULT_CONFIG) -> int:
    """Macro-cycles from presenting a vector to its outputs being valid for good.

    Measured as a step response: from the settled state of the previous
    vector (the all-up start for the first), the next vector is clamped and
    the cycle index after which the outputs stay at their settled values is
    recorded.  The maximum over the sequence is returned.
    """
    if vectors is None:
        vectors = standard_vectors(layout)
    budget = config.max_cycles or default_max_cycles(layout)
    latency = 0
    prev = all_up_state(layout)
    for vec in vectors:
        target = run_to_fixpoint(layout, vec, config=config).outputs
        state = clamp_inputs(layout, prev, vec)
        seen = []
        for cycle in range(budget):
            nxt = macro_cycle(layout, state, config, cycle)
            seen.append(read_outputs(layout, nxt) == target)
            if nxt == state:
                break
            state = nxt
        else:
            raise NonConvergenceError("latency measurement did not settle", state, budget)
        if not seen[-1]:
            raise NonConvergenceError("step response settled to different outputs", state, budget)
        valid_from = len(seen) - 1
        while valid_from > 0 and seen[valid_from - 1]:
            valid_from -= 1
        latency = max(latency, valid_from)
        prev = state
    return latency


def run_stream(layout: Layout, vectors: Sequence[Mapping[str, object]],
               config: SolverConfig = DEFAULT_CONFIG, latency: Optional[int] = None) -> List[Dict[str, int]]:
    """Present vector ``k`` at macro-cycle ``k``; read its outputs at cycle ``k + latency``."""
    if not vectors:
        raise ValueError("empty vector stream")
    if latency is None:
        latency = measure_latency(layout, vectors, config)
    state = all_up_state(layout)
    results = []
    n = len(vectors)
    for cycle in range(n + latency):
        state = clamp_inputs(layout, state, vectors[min(cycle, n - 1)])
        state = macro_cycle(layout, state, config, cycle)
        if cycle >= latency:
            results.append(read_outputs(layout, state))
    return results


def format_trace(layout: Layout, trace: Sequence[Tuple[int, int, Mapping[str, int]]]) -> str:
    """One line per (macro-cycle, phase): ``<cycle> <phase> <spins>``, spins in id order."""
    lines = ["# cells: " + " ".join(layout.ids)]
    lines += [f"{cycle} {phase} {state_string(layout, st)}" for cycle, phase, st in trace]
    return "\n".join(lines) + "\n"
