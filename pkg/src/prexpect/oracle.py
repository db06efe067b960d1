"""Explicit-state operational semantics used to cross-check the symbolic
pipeline.

A state picks one enabled guarded command (demonic choice); the command
induces a finite-support sub-probability distribution over successor states
obtained by accumulating branch probabilities on coinciding successors.
Value iteration over these generator distributions computes the horizon-k
demonic expected value of the post-expectation, exactly in rationals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import (
    NonIntegerStateError,
    StateBoxEscapeError,
    StateSpaceTooLargeError,
)
from .expectations import pw_evaluate
from .program import Program

StateKey = tuple[Fraction, ...]

DEFAULT_STATE_CAP = 200_000


@dataclass
class GeneratorSet:
    """One sub-probability distribution per enabled command; when no guard
    holds, the single all-zero distribution."""

    distributions: list[dict[StateKey, Fraction]]

    def __post_init__(self):
        if not self.distributions:
            raise ValueError("a generator set is never empty")
        for dist in self.distributions:
            if sum(dist.values(), Fraction(0)) > 1:
                raise ValueError("sub-probability mass exceeds 1")


def _state_order(program: Program) -> tuple[str, ...]:
    return program.variables + program.consts


def state_key(program: Program, state: Mapping[str, int | Fraction]) -> StateKey:
    return tuple(Fraction(state[v]) for v in _state_order(program))


def key_state(program: Program, key: StateKey) -> dict[str, Fraction]:
    return dict(zip(_state_order(program), key))


def build_generators(program: Program, state: Mapping[str, int | Fraction]) -> GeneratorSet:
    """Generator distributions at one state (exact arithmetic)."""
    dists: list[dict[StateKey, Fraction]] = []
    for command in program.commands:
        if not command.guard.evaluate(state):
            continue
        dist: dict[StateKey, Fraction] = {}
        for branch in command.branches:
            successor = branch.assignment.apply_to_state(state)
            for name, value in successor.items():
                if name in program.variables and Fraction(value).denominator != 1:
                    raise NonIntegerStateError(
                        f"update drives {name} to non-integer value {value}"
                    )
            key = state_key(program, successor)
            dist[key] = dist.get(key, Fraction(0)) + branch.probability
        dists.append(dist)
    if not dists:
        dists.append({})
    return GeneratorSet(dists)


def value_iteration(
    program: Program,
    horizon: int,
    state_box: Mapping[str, tuple[int, int]],
    start_states: Sequence[Mapping[str, int | Fraction]],
    state_cap: int = DEFAULT_STATE_CAP,
) -> dict[StateKey, Fraction]:
    """Demonic expected post-value at the given horizon, per start state.

    ``X_0 = 0``; one step takes the post-expectation on exit states and the
    minimum generator expectation elsewhere. Exploration is confined to
    ``state_box`` (a reachable state outside it is an error, never clamped)
    and to ``state_cap`` distinct states.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    memo: dict[tuple[StateKey, int], Fraction] = {}
    generators: dict[StateKey, GeneratorSet] = {}

    def check_box(state: Mapping[str, Fraction]) -> None:
        for var, (lo, hi) in state_box.items():
            if not lo <= state[var] <= hi:
                raise StateBoxEscapeError(
                    f"state {dict(state)} leaves the box on {var}"
                )

    def gens_at(key: StateKey) -> GeneratorSet:
        if key not in generators:
            if len(generators) >= state_cap:
                raise StateSpaceTooLargeError(
                    f"more than {state_cap} distinct states explored"
                )
            generators[key] = build_generators(program, key_state(program, key))
        return generators[key]

    def value(key: StateKey, depth: int) -> Fraction:
        if depth == 0:
            return Fraction(0)
        cached = memo.get((key, depth))
        if cached is not None:
            return cached
        state = key_state(program, key)
        enabled = [
            cmd for cmd in program.commands if cmd.guard.evaluate(state)
        ]
        if not enabled:
            result = pw_evaluate(program.post, state)
        else:
            gens = gens_at(key)
            best: Fraction | None = None
            for dist in gens.distributions:
                total = Fraction(0)
                for succ, mass in dist.items():
                    check_box(key_state(program, succ))
                    total += mass * value(succ, depth - 1)
                if best is None or total < best:
                    best = total
            result = best if best is not None else Fraction(0)
        memo[(key, depth)] = result
        return result

    out: dict[StateKey, Fraction] = {}
    for raw in start_states:
        state = {v: Fraction(raw[v]) for v in _state_order(program)}
        check_box(state)
        key = state_key(program, state)
        out[key] = value(key, horizon)
    return out


def closure_invariance_check(
    generators: GeneratorSet,
    values: Mapping[StateKey, Fraction],
    trials: int,
    seed: int = 0,
) -> bool:
    """Sample convex combinations and up-dominating variants of the generator
    distributions; none may achieve an expectation below the generator
    minimum (so working on generators alone loses nothing)."""

    def expectation(dist: Mapping[StateKey, Fraction]) -> Fraction:
        return sum((mass * values[s] for s, mass in dist.items()), Fraction(0))

    base = [expectation(d) for d in generators.distributions]
    minimum = min(base)
    rng = random.Random(seed)
    keys = sorted(values.keys())
    for _ in range(trials):
        i = rng.randrange(len(base))
        j = rng.randrange(len(base))
        p = Fraction(rng.randrange(0, 5), 4)
        mixed = p * base[i] + (1 - p) * base[j]
        if mixed < minimum:
            return False
        dist = dict(generators.distributions[i])
        room = 1 - sum(dist.values(), Fraction(0))
        if room > 0 and keys:
            target = keys[rng.randrange(len(keys))]
            extra = room * Fraction(rng.randrange(0, 5), 4)
            dist[target] = dist.get(target, Fraction(0)) + extra
            if expectation(dist) < minimum:
                return False
    return True
