"""The three layered product constructions, generated lazily from their
initial states.

Layer 1 pairs one agent's transition system with its specification
automaton, tracking saturated clock valuations.  Layer 2 interleaves the
per-agent layer-1 graphs: each step advances time by the smallest
remaining transition duration among the agents, agents finishing exactly
then complete their moves, and a round-robin index turns the per-agent
acceptance sets into a single one.  Layer 3 pairs the team graph with the
team specification automaton using the two-flag intersection bookkeeping.

Successor lists are memoized per state: repeated exploration touches each
state once, state objects are plain value tuples, and the generation
order is deterministic, so rebuilding a product reproduces it exactly.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import NamedTuple

from .core import INFINITY
from .tba import (TimedBuchiAutomaton, evaluate_constraint, step_valuation)
from .wts import WeightedTransitionSystem


class LocalState(NamedTuple):
    region: str
    location: str
    valuation: tuple  # per clock: Fraction or the saturation sentinel


class TeamState(NamedTuple):
    components: tuple  # LocalState per agent
    targets: tuple     # committed in-flight LocalState per agent, or None
    offsets: tuple     # time already spent on the current transition
    turn: int          # round-robin index, 0-based


class GlobalState(NamedTuple):
    team: TeamState
    location: str
    valuation: tuple
    flag: int


def _valuation_key(valuation: tuple):
    return tuple((1, Fraction(0)) if v is INFINITY else (0, v) for v in valuation)


def _local_key(state: LocalState):
    return (state.region, state.location, _valuation_key(state.valuation))


class _MemoizedGraph:
    """Shared successor memoization and statistics."""

    def __init__(self):
        self._successor_cache: dict = {}

    def successors(self, state):
        cached = self._successor_cache.get(state)
        if cached is None:
            cached = self._compute_successors(state)
            self._successor_cache[state] = cached
        return cached

    def _compute_successors(self, state):
        raise NotImplementedError

    @property
    def explored_states(self) -> int:
        return len(self._successor_cache)

    @property
    def explored_edges(self) -> int:
        return sum(len(v) for v in self._successor_cache.values())

    def explored_accepting(self) -> int:
        return sum(1 for s in self._successor_cache if self.is_accepting(s))


class LocalProduct(_MemoizedGraph):
    """States are (region, automaton location, clock valuation); a step
    moves the system and the automaton synchronously, advancing every
    clock by the transition's duration."""

    def __init__(self, system: WeightedTransitionSystem,
                 automaton: TimedBuchiAutomaton):
        super().__init__()
        if system.atoms != automaton.atoms:
            raise ValueError(
                f"system alphabet {sorted(system.atoms)} differs from "
                f"automaton alphabet {sorted(automaton.atoms)}")
        self.system = system
        self.automaton = automaton
        self.cmax = automaton.cmax()
        self._initial = self._build_initial()

    def _build_initial(self):
        out = []
        zero = self.automaton.zero_valuation()
        zero_map = self.automaton.valuation_map(zero)
        for region in sorted(self.system.initial):
            for location in sorted(self.automaton.initial):
                if self.system.label_of(region) != self.automaton.label_of(location):
                    continue
                if not evaluate_constraint(self.automaton.invariant_of(location),
                                           zero_map):
                    continue
                out.append(LocalState(region, location, zero))
        return tuple(sorted(out, key=_local_key))

    @property
    def has_initial_states(self) -> bool:
        return bool(self._initial)

    def initial_states(self):
        return self._initial

    def _compute_successors(self, state: LocalState):
        system, automaton = self.system, self.automaton
        out = []
        for region in system.successors(state.region):
            duration = system.weight_of(state.region, region)
            target_label = system.label_of(region)
            elapsed = tuple(v if v is INFINITY else v + duration
                            for v in state.valuation)
            elapsed_map = automaton.valuation_map(elapsed)
            if not evaluate_constraint(automaton.invariant_of(state.location),
                                       elapsed_map):
                continue
            for edge in automaton.edges_from(state.location):
                if automaton.label_of(edge.target) != target_label:
                    continue
                if not evaluate_constraint(edge.guard, elapsed_map):
                    continue
                landed = step_valuation(state.valuation, automaton.clocks,
                                        duration, edge.resets, self.cmax)
                if not evaluate_constraint(automaton.invariant_of(edge.target),
                                           automaton.valuation_map(landed)):
                    continue
                successor = LocalState(region, edge.target, landed)
                out.append((duration, successor))
        unique = sorted(set(out), key=lambda pair: (_local_key(pair[1]), pair[0]))
        return tuple(unique)

    def is_accepting(self, state: LocalState) -> bool:
        return state.location in self.automaton.accepting

    def label_of(self, state: LocalState) -> frozenset[str]:
        return self.system.label_of(state.region)

    def duration_of(self, state: LocalState, target: LocalState) -> Fraction:
        return self.system.weight_of(state.region, target.region)


class TeamProduct(_MemoizedGraph):
    """Interleaving of the per-agent products.

    A state fixes each agent's current layer-1 state, the layer-1 state it
    is currently moving toward (``None`` when at a boundary), and the time
    already spent on that move.  Every step advances time by the smallest
    remaining duration; exactly the agents whose remaining duration equals
    it complete their moves.  The round-robin index makes acceptance
    single-set: a state accepts when the index rests on the last agent and
    that agent's component is locally accepting.
    """

    def __init__(self, locals_):
        super().__init__()
        self.locals = tuple(locals_)
        if not self.locals:
            raise ValueError("at least one agent is required")
        self.count = len(self.locals)

    def initial_states(self):
        per_agent = [local.initial_states() for local in self.locals]
        zero = Fraction(0)
        out = []
        for combo in itertools.product(*per_agent):
            out.append(TeamState(
                components=tuple(combo),
                targets=(None,) * self.count,
                offsets=(zero,) * self.count,
                turn=0,
            ))
        return tuple(out)

    def _compute_successors(self, state: TeamState):
        options = []
        for k in range(self.count):
            if state.targets[k] is not None:
                duration = self.locals[k].duration_of(state.components[k],
                                                      state.targets[k])
                options.append(((duration, state.targets[k]),))
            else:
                moves = self.locals[k].successors(state.components[k])
                if not moves:
                    return ()  # deadlocked agent: the state is edgeless
                options.append(moves)
        out = []
        for combo in itertools.product(*options):
            step = min(duration - offset
                       for (duration, _), offset in zip(combo, state.offsets))
            components = []
            targets = []
            offsets = []
            for k, ((duration, target), offset) in enumerate(
                    zip(combo, state.offsets)):
                if offset + step == duration:
                    components.append(target)
                    targets.append(None)
                    offsets.append(Fraction(0))
                else:
                    components.append(state.components[k])
                    targets.append(target)
                    offsets.append(offset + step)
            turn = state.turn
            if self.locals[turn].is_accepting(state.components[turn]):
                turn = (turn + 1) % self.count
            out.append((step, TeamState(tuple(components), tuple(targets),
                                        tuple(offsets), turn)))
        return tuple(sorted(set(out), key=self._successor_key))

    @staticmethod
    def _successor_key(pair):
        step, state = pair
        component_key = tuple(_local_key(c) for c in state.components)
        target_key = tuple(
            (0,) if t is None else (1,) + _local_key(t) for t in state.targets)
        return (component_key, target_key, state.offsets, state.turn, step)

    def is_accepting(self, state: TeamState) -> bool:
        last = self.count - 1
        return (state.turn == last
                and self.locals[last].is_accepting(state.components[last]))

    def label_of(self, state: TeamState) -> frozenset[str]:
        atoms: set[str] = set()
        for local, component in zip(self.locals, state.components):
            atoms |= local.label_of(component)
        return frozenset(atoms)


class GlobalProduct(_MemoizedGraph):
    """The team graph paired with the team automaton, with two-flag
    intersection bookkeeping: flag 1 waits for a team-accepting state,
    flag 2 waits for an automaton-accepting location, and acceptance is a
    team-accepting state carrying flag 1."""

    def __init__(self, team: TeamProduct, automaton: TimedBuchiAutomaton):
        super().__init__()
        team_atoms = frozenset().union(
            *(local.system.atoms for local in team.locals))
        if automaton.atoms != team_atoms:
            raise ValueError(
                f"team alphabet {sorted(team_atoms)} differs from automaton "
                f"alphabet {sorted(automaton.atoms)}")
        self.team = team
        self.automaton = automaton
        self.cmax = automaton.cmax()

    def initial_states(self):
        automaton = self.automaton
        zero = automaton.zero_valuation()
        zero_map = automaton.valuation_map(zero)
        out = []
        for team_state in self.team.initial_states():
            label = self.team.label_of(team_state)
            for location in sorted(automaton.initial):
                if automaton.label_of(location) != label:
                    continue
                if not evaluate_constraint(automaton.invariant_of(location),
                                           zero_map):
                    continue
                out.append(GlobalState(team_state, location, zero, 1))
        return tuple(out)

    def _compute_successors(self, state: GlobalState):
        automaton = self.automaton
        out = []
        team_accepting = self.team.is_accepting(state.team)
        automaton_accepting = state.location in automaton.accepting
        if state.flag == 1:
            flag = 2 if team_accepting else 1
        else:
            flag = 1 if automaton_accepting else 2
        for step, team_next in self.team.successors(state.team):
            label = self.team.label_of(team_next)
            elapsed = tuple(v if v is INFINITY else v + step
                            for v in state.valuation)
            elapsed_map = automaton.valuation_map(elapsed)
            if not evaluate_constraint(automaton.invariant_of(state.location),
                                       elapsed_map):
                continue
            for edge in automaton.edges_from(state.location):
                if automaton.label_of(edge.target) != label:
                    continue
                if not evaluate_constraint(edge.guard, elapsed_map):
                    continue
                landed = step_valuation(state.valuation, automaton.clocks,
                                        step, edge.resets, self.cmax)
                if not evaluate_constraint(automaton.invariant_of(edge.target),
                                           automaton.valuation_map(landed)):
                    continue
                out.append((step, GlobalState(team_next, edge.target,
                                              landed, flag)))
        return tuple(sorted(set(out), key=self._successor_key))

    @staticmethod
    def _successor_key(pair):
        step, state = pair
        return (TeamProduct._successor_key((step, state.team)),
                state.location, _valuation_key(state.valuation), state.flag)

    def is_accepting(self, state: GlobalState) -> bool:
        return state.flag == 1 and self.team.is_accepting(state.team)


def local_product(system: WeightedTransitionSystem,
                  automaton: TimedBuchiAutomaton) -> LocalProduct:
    return LocalProduct(system, automaton)


def team_product(locals_) -> TeamProduct:
    return TeamProduct(locals_)


def global_product(team: TeamProduct,
                   automaton: TimedBuchiAutomaton) -> GlobalProduct:
    return GlobalProduct(team, automaton)
