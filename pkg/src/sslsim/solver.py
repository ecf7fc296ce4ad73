"""Ground-state relaxation of a set of free cells with the rest clamped.

Two routes: :func:`relax_exact` enumerates every assignment (per independent
component of the free set), :func:`relax_anneal` runs Metropolis single-flip
simulated annealing and returns the best state it visited.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence

import numpy as np

from .core import CellKind, Layout, Spin, SpinState

DEFAULT_EXACT_LIMIT = 20
# Relative tolerance when deciding that two candidate energies are degenerate.
TIE_TOL = 1e-9


class SolverError(RuntimeError):
    pass


class ExactLimitError(SolverError):
    """The free set (one coupled component of it) is too large to enumerate."""


def energy(layout: Layout, state: Mapping[str, int]) -> float:
    missing = [cid for cid in layout.ids if cid not in state]
    if missing:
        raise ValueError(f"state has no spin for {missing[:5]}")
    e = 0.0
    for t in layout.terms:
        if t.active(state):
            e += t.coupling * state[t.a] * state[t.b]
    return e - layout.params.bias * sum(int(state[cid]) for cid in layout.ids)


def effective_field(layout: Layout, state: Mapping[str, int], cell: str) -> float:
    """Energy change caused by flipping ``cell``; equals the full recomputation exactly."""
    if cell not in layout.cell_map:
        raise KeyError(f"unknown cell {cell!r}")
    s = int(state[cell])
    delta = 2.0 * layout.params.bias * s
    for t in layout.incident.get(cell, ()):
        if t.active(state):
            other = t.b if t.a == cell else t.a
            delta -= 2.0 * t.coupling * s * state[other]
    for t in layout.controlled.get(cell, ()):
        # flipping the controller always toggles the gate
        pair = t.coupling * state[t.a] * state[t.b]
        delta += -pair if s == t.enable else pair
    return delta


@dataclass(frozen=True)
class RelaxProblem:
    layout: Layout
    free: FrozenSet[str]
    boundary: Mapping[str, Spin]

    def __post_init__(self):
        object.__setattr__(self, "free", frozenset(self.free))
        ids = set(self.layout.ids)
        if self.free & set(self.boundary):
            raise ValueError("free cells must not appear in the boundary")
        if self.free | set(self.boundary) != ids:
            missing = ids - self.free - set(self.boundary)
            raise ValueError(f"free and boundary must cover every cell; missing {sorted(missing)[:5]}")
        fixed = [c for c in self.free if self.layout.cell_map[c].kind == CellKind.FIXED]
        if fixed:
            raise ValueError(f"fixed cells cannot be relaxed: {sorted(fixed)}")

    @classmethod
    def from_state(cls, layout: Layout, state: Mapping[str, Spin], free) -> "RelaxProblem":
        free = frozenset(free)
        return cls(layout, free, {k: v for k, v in state.items() if k not in free})


@dataclass(frozen=True)
class AnnealSchedule:
    t_start: float
    t_end: float
    sweeps: int = 500
    seed: int = 0

    def __post_init__(self):
        if not (self.t_start > 0 and self.t_end > 0):
            raise ValueError("temperatures must be positive")
        if not self.t_end < self.t_start:
            raise ValueError("t_end must be below t_start")
        if self.sweeps < 1:
            raise ValueError("sweeps must be at least 1")

    @classmethod
    def default_for(cls, layout: Layout, seed: int = 0, sweeps: int = 500,
                    t_start: Optional[float] = None, t_end: Optional[float] = None):
        jmax = max((abs(t.coupling) for t in layout.terms), default=1.0)
        return cls(t_start if t_start is not None else 3.0 * jmax,
                   t_end if t_end is not None else 0.05 * layout.params.bias,
                   sweeps, seed)

    def temperature(self, sweep: int) -> float:
        if self.sweeps == 1:
            return self.t_start
        frac = sweep / (self.sweeps - 1)
        return self.t_start * (self.t_end / self.t_start) ** frac


def free_components(layout: Layout, free) -> List[List[str]]:
    """Split the free set into groups that share no energy term."""
    free = set(free)
    parent = {c: c for c in free}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t in layout.terms:
        members = [x for x in (t.a, t.b, t.ctrl) if x is not None and x in free]
        for other in members[1:]:
            ra, rb = find(members[0]), find(other)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: Dict[str, List[str]] = {}
    for c in sorted(free):
        groups.setdefault(find(c), []).append(c)
    return sorted(groups.values())


def _enumerate_component(layout: Layout, comp: Sequence[str], state: Mapping[str, int]) -> Dict[str, Spin]:
    k = len(comp)
    n = 1 << k
    # row j: bit (k-1-i) == 0 means comp[i] up, so row order is the tie-break order
    bits = (np.arange(n)[:, None] >> np.arange(k - 1, -1, -1)[None, :]) & 1
    spins = 1 - 2 * bits
    col = {cid: i for i, cid in enumerate(comp)}

    def column(cid):
        if cid in col:
            return spins[:, col[cid]]
        return state[cid]

    members = set(comp)
    e = np.zeros(n)
    for t in layout.terms:
        if not ({t.a, t.b} & members or (t.ctrl is not None and t.ctrl in members)):
            continue
        pair = column(t.a) * column(t.b)
        if t.ctrl is not None:
            gate = column(t.ctrl) == int(t.enable)
            pair = pair * gate
        e = e + t.coupling * pair
    e = e - layout.params.bias * spins.sum(axis=1)
    emin = e.min()
    tol = TIE_TOL * max(1.0, abs(emin))
    best = int(np.flatnonzero(e <= emin + tol)[0])
    return {cid: Spin(int(spins[best, i])) for i, cid in enumerate(comp)}


def relax_exact(problem: RelaxProblem, exact_limit: int = DEFAULT_EXACT_LIMIT) -> SpinState:
    """Global minimiser over the free cells with the boundary clamped.

    Degenerate minimisers are resolved by preferring up-spin on the lowest
    free id, then the next, and so on.  The free set is first split into
    components that share no energy term; ``exact_limit`` bounds the size of
    each component.
    """
    layout = problem.layout
    comps = free_components(layout, problem.free)
    big = [c for c in comps if len(c) > exact_limit]
    if big:
        raise ExactLimitError(f"{len(big[0])} coupled free cells exceed exact_limit={exact_limit}")
    state = {k: int(v) for k, v in problem.boundary.items()}
    for cid in problem.free:
        state[cid] = 1
    out: SpinState = {}
    for comp in comps:
        out.update(_enumerate_component(layout, comp, state))
    return out


def relax_anneal(problem: RelaxProblem, schedule: Optional[AnnealSchedule] = None) -> SpinState:
    layout = problem.layout
    if schedule is None:
        schedule = AnnealSchedule.default_for(layout)
    rng = random.Random(schedule.seed)
    free = sorted(problem.free)
    if not free:
        return {}
    state = {k: int(v) for k, v in problem.boundary.items()}
    for cid in free:
        state[cid] = rng.choice((1, -1))
    cur = 0.0  # energy relative to the random start
    best, best_state = 0.0, {cid: state[cid] for cid in free}
    order = list(free)
    for sweep in range(schedule.sweeps):
        temp = schedule.temperature(sweep)
        rng.shuffle(order)
        for cid in order:
            de = effective_field(layout, state, cid)
            if de <= 0 or rng.random() < math.exp(-de / temp):
                state[cid] = -state[cid]
                cur += de
                if cur < best - TIE_TOL * max(1.0, abs(best)):
                    best = cur
                    best_state = {c: state[c] for c in free}
    return {cid: Spin(v) for cid, v in best_state.items()}
