"""LTS exploration, weak saturation, and bisimilarity verdicts.

Exploration is a breadth-first closure of one or more root processes under
the chosen transition system, with per-state minted sets so that receive
tables always match their context.  States are deduplicated by canonical
term plus minted history, which keeps edge sets deterministic.

Bisimilarity is computed by refining the full relation on the explored state
set: a pair dies when one side has a challenge the other cannot answer
through the mode's answer edges, and the fixpoint of this refinement is the
greatest bisimulation on the fragment.  Weak answer edges come from the
least fixpoint of three rules: strong transitions are weak, silence is weak,
and a weak step whose target takes another weak step fuses when one of the
two layers is silent.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from . import basic as _basic
from . import proper as _proper
from .errors import IncompleteStates
from .relations import Relation
from .terms import (CanonicalTerm, ChannelId, Context, Process, Universe,
                    contains_cut, read_back, reify, swap_canonical, term_key)


# --------------------------------------------------------------------------
# system adapters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _System:
    name: str
    detailed: Callable
    is_tau: Callable
    target: Callable
    with_target: Callable
    silent: Callable
    related: Callable
    residual_key: Callable
    opened: Callable


def _basic_opened(r):
    return (r.channel,) if isinstance(r, _basic.Opening) else ()


def _proper_opened(r):
    return _proper.opened_channels(r) if isinstance(r, _proper.Output) else ()


_SYSTEMS = {
    "basic": _System("basic", _basic.basic_transitions_detailed, _basic.is_tau,
                     _basic.residual_target, _basic.with_target,
                     _basic.basic_silent, _basic.residuals_related,
                     _basic.residual_key, _basic_opened),
    "proper": _System("proper", _proper.proper_transitions_detailed,
                      _proper.proper_is_tau, _proper.proper_target,
                      _proper.proper_with_target, _proper.proper_silent,
                      _proper.proper_residuals_related,
                      _proper.proper_residual_key, _proper_opened),
}


def system_named(name: str) -> _System:
    try:
        return _SYSTEMS[name]
    except KeyError:
        raise ValueError(f"unknown transition system {name!r}") from None


# --------------------------------------------------------------------------
# graphs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Edge:
    residual: Any
    target: int
    rule: str


@dataclass
class LtsGraph:
    """Explored finite fragment of a transition system.

    ``edges[i]`` is None for states whose expansion was cut off by limits;
    for complete states it is exactly the transition operation's output.
    """

    system: str
    universe: Universe
    states: tuple[CanonicalTerm, ...]
    minted_of: tuple[tuple[ChannelId, ...], ...]
    edges: tuple[tuple[Edge, ...] | None, ...]
    roots: tuple[int, ...]
    limit_reached: bool
    weak: tuple[tuple[Edge, ...], ...] | None = None
    _index: dict = field(default_factory=dict, repr=False)
    _processes: tuple = field(default=(), repr=False)

    @property
    def complete_states(self) -> frozenset[int]:
        return frozenset(i for i, es in enumerate(self.edges)
                         if es is not None and not contains_cut(self.states[i]))

    @property
    def is_complete(self) -> bool:
        return len(self.complete_states) == len(self.states)

    @property
    def minted_channels(self) -> tuple[ChannelId, ...]:
        seen: list[ChannelId] = []
        for minted in self.minted_of:
            for c in minted:
                if c not in seen:
                    seen.append(c)
        return tuple(seen)

    def state_index(self, term: CanonicalTerm,
                    minted: tuple[ChannelId, ...] | None = None) -> int | None:
        if minted is not None:
            return self._index.get((term, minted))
        for i, t in enumerate(self.states):
            if t == term:
                return i
        return None


def explore(process: Process, universe: Universe, system: str = "basic",
            max_states: int = 2000, max_depth: int = 64) -> LtsGraph:
    """Breadth-first closure of one root under the transition operation."""
    return explore_many((process,), universe, system, max_states, max_depth)


def explore_many(processes, universe: Universe, system: str = "basic",
                 max_states: int = 2000, max_depth: int = 64) -> LtsGraph:
    if max_states < 1 or max_depth < 1:
        raise ValueError("limits must be positive")
    sysm = system_named(system)
    index: dict = {}
    states: list[CanonicalTerm] = []
    minted_of: list[tuple[ChannelId, ...]] = []
    procs: list[Process] = []
    edges: list = []

    def intern(term, minted, proc):
        key = (term, minted)
        if key in index:
            return index[key]
        i = len(states)
        index[key] = i
        states.append(term)
        minted_of.append(minted)
        procs.append(proc)
        edges.append(None)
        return i

    roots = tuple(intern(reify(p, universe), (), p) for p in processes)
    queue = deque((r, 0) for r in roots)
    limit = False
    while queue:
        i, depth = queue.popleft()
        if edges[i] is not None:
            continue
        if depth >= max_depth or len(states) > max_states:
            limit = True
            continue
        ctx = Context(universe, minted_of[i])
        out = []
        for rec in sysm.detailed(procs[i] if procs[i] is not None
                                 else states[i], ctx):
            target_term = sysm.target(rec.residual)
            j = intern(target_term, rec.minted, rec.target_process)
            out.append(Edge(rec.residual, j, rec.rule))
            if edges[j] is None:
                queue.append((j, depth + 1))
        edges[i] = tuple(out)
    if any(es is None for es in edges):
        limit = True
    return LtsGraph(system, universe, tuple(states), tuple(minted_of),
                    tuple(edges), roots, limit, None, index, tuple(procs))


# --------------------------------------------------------------------------
# weak saturation
# --------------------------------------------------------------------------

def weak_saturate(graph: LtsGraph, silent: Callable | None = None,
                  fuse: Callable | None = None,
                  lift: Callable | None = None) -> LtsGraph:
    """Least fixpoint of the weak transition rules over a complete graph.

    Rules: every strong edge is weak; every state weakly reaches its own
    silent residual; and a weak step followed (inside its target) by another
    weak step fuses whenever one layer is silent.  ``silent`` and ``fuse``
    default to the graph's system; ``lift`` of the weak relation itself is
    realized structurally by retargeting residuals, which is what makes the
    compound rule executable.
    """
    if not graph.is_complete:
        raise IncompleteStates("weak saturation needs a fully explored graph")
    sysm = system_named(graph.system)
    if silent is None:
        silent = sysm.silent
    if fuse is None:
        def fuse(outer, inner):
            out = []
            if sysm.is_tau(outer):
                out.append(inner)
            if sysm.is_tau(inner):
                out.append(sysm.with_target(outer, sysm.target(inner)))
            return out

    n = len(graph.states)
    weak: list[set] = []
    rules: list[dict] = []
    for i in range(n):
        entries = {(e.residual, e.target) for e in graph.edges[i]}
        entries.add((silent(graph.states[i]), i))
        weak.append(entries)
        rules.append({})
        for e in graph.edges[i]:
            rules[i].setdefault((e.residual, e.target), e.rule)

    changed = True
    while changed:
        changed = False
        for i in range(n):
            fresh = []
            for c, t in weak[i]:
                for d, dt in weak[t]:
                    for fused in fuse(c, d):
                        entry = (fused, dt)
                        if entry not in weak[i]:
                            fresh.append(entry)
            if fresh:
                weak[i].update(fresh)
                changed = True

    weak_edges = tuple(
        tuple(sorted((Edge(r, t, rules[i].get((r, t), "weak")) for r, t in weak[i]),
                     key=lambda e: (sysm.residual_key(e.residual), e.target)))
        for i in range(n))
    return LtsGraph(graph.system, graph.universe, graph.states, graph.minted_of,
                    graph.edges, graph.roots, graph.limit_reached, weak_edges,
                    graph._index, graph._processes)


# --------------------------------------------------------------------------
# simulation checking
# --------------------------------------------------------------------------

def _aligned_answer_index(graph: LtsGraph, sysm: _System, challenge: Edge,
                          answer: Edge):
    """Index of the answer target once its opened ids match the challenge's.

    None when the labels cannot be aligned or the renamed state was never
    explored.
    """
    co, ao = sysm.opened(challenge.residual), sysm.opened(answer.residual)
    if co == ao:
        return answer.target
    if len(co) != len(ao):
        return None
    term = graph.states[answer.target]
    minted = list(graph.minted_of[answer.target])
    for a, b in zip(ao, co):
        term = swap_canonical(term, a, b)
        minted = [b if c == a else a if c == b else c for c in minted]
    return graph._index.get((term, tuple(minted)))


class _AnyRelation:
    """Relation stand-in whose holds() is always true; label checks only."""

    @staticmethod
    def holds(a, b):
        return True


def _labels_match(sysm: _System, c, d) -> bool:
    """Same label up to the recorded opening ids, ignoring the targets."""
    return sysm.related(_AnyRelation, c, d)


def is_simulation(X: Relation, graph: LtsGraph, lift: Callable | None = None,
                  challenge_edges=None, answer_edges=None):
    """Whether every challenge of a related pair has a lift-related answer.

    Returns ``(True, None)`` or ``(False, (p, q, residual))`` with the first
    unanswered challenge.  The relation is over canonical terms and must stay
    within the graph's complete states.
    """
    sysm = system_named(graph.system)
    if challenge_edges is None:
        challenge_edges = graph.edges
    if answer_edges is None:
        answer_edges = graph.edges

    term_index: dict = {}
    for i, t in enumerate(graph.states):
        term_index.setdefault(t, i)

    complete = graph.complete_states
    for t in tuple(X.src) + tuple(X.dst):
        i = term_index.get(t)
        if i is None or i not in complete:
            raise IncompleteStates(f"state {t!r} is not fully explored")

    def related(c_edge: Edge, a_edge: Edge) -> bool:
        if not _labels_match(sysm, c_edge.residual, a_edge.residual):
            return False
        j = _aligned_answer_index(graph, sysm, c_edge, a_edge)
        if j is None:
            return False
        return X.holds(graph.states[c_edge.target], graph.states[j])

    for p, q in X.pairs:
        i, j = term_index[p], term_index[q]
        for c_edge in challenge_edges[i]:
            if not any(related(c_edge, a_edge) for a_edge in answer_edges[j]):
                return False, (p, q, c_edge.residual)
    return True, None


def is_bisimulation(X: Relation, graph: LtsGraph,
                    challenge_edges=None, answer_edges=None):
    ok, violation = is_simulation(X, graph, None, challenge_edges, answer_edges)
    if not ok:
        return False, violation
    return is_simulation(X.converse(), graph, None, challenge_edges, answer_edges)


# --------------------------------------------------------------------------
# bisimilarity
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DistinguishingPlay:
    """One attacker move and, per defender answer, the continuation."""

    left: CanonicalTerm
    right: CanonicalTerm
    attacker: str
    challenge: Any
    answers: tuple
    depth: int


@dataclass
class BisimVerdict:
    verdict: str
    system: str
    mode: str
    method: str
    witness: Relation | None = None
    play: DistinguishingPlay | None = None
    bound: int | None = None
    reason: str | None = None
    rounds: int = 0
    graph: LtsGraph | None = None

    @property
    def bisimilar(self) -> bool:
        return self.verdict == "bisimilar"


MODES = ("strong", "weak", "mixed")


def bisimilarity(p: Process, q: Process, universe: Universe,
                 system: str = "basic", mode: str = "strong",
                 method: str = "exact", bound: int | None = None,
                 max_states: int = 2000, max_depth: int = 64) -> BisimVerdict:
    """Decide bisimilarity of two processes on their explored fragments.

    Modes: strong answers strong challenges with strong edges; weak plays
    entirely on weak edges; mixed answers strong challenges with weak edges.
    Exact verdicts require complete exploration; the bounded method refines
    for at most ``bound`` rounds and reports the exact verdict whenever the
    refinement converges earlier.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if method not in ("exact", "bounded"):
        raise ValueError(f"unknown method {method!r}")
    if method == "bounded" and (bound is None or bound < 0):
        raise ValueError("bounded method needs a non-negative bound")

    graph = explore_many((p, q), universe, system, max_states, max_depth)
    if method == "exact" and not graph.is_complete:
        return BisimVerdict("inconclusive", system, mode, method,
                            reason="incomplete-exploration", graph=graph)

    sysm = system_named(graph.system)
    needs_weak = mode in ("weak", "mixed")
    if needs_weak:
        if not graph.is_complete:
            return BisimVerdict("inconclusive", system, mode, method,
                                reason="incomplete-exploration", graph=graph)
        graph = weak_saturate(graph)
    strong_edges = graph.edges
    weak_edges = graph.weak
    if mode == "strong":
        challenge, answer = strong_edges, strong_edges
    elif mode == "weak":
        challenge, answer = weak_edges, weak_edges
    else:
        challenge, answer = strong_edges, weak_edges

    n = len(graph.states)
    expandable = [graph.edges[i] is not None for i in range(n)]
    alive = {(i, j) for i in range(n) for j in range(n)}
    killed: dict = {}

    def unanswered(i, j):
        """First challenge of i that j cannot answer inside the relation."""
        if not expandable[i] or not expandable[j]:
            return None
        for c_edge in challenge[i]:
            ok = False
            for a_edge in answer[j]:
                if not _labels_match(sysm, c_edge.residual, a_edge.residual):
                    continue
                t = _aligned_answer_index(graph, sysm, c_edge, a_edge)
                if t is not None and (c_edge.target, t) in alive:
                    ok = True
                    break
            if not ok:
                return c_edge
        return None

    rounds = 0
    converged = False
    while True:
        if method == "bounded" and rounds >= bound:
            break
        rounds += 1
        removals = []
        for pair in alive:
            i, j = pair
            c = unanswered(i, j)
            if c is not None:
                removals.append((pair, "left", c))
                continue
            c = unanswered(j, i)
            if c is not None:
                removals.append((pair, "right", c))
        if not removals:
            converged = True
            rounds -= 1
            break
        for pair, side, c in removals:
            alive.discard(pair)
            killed[pair] = (rounds, side, c)

    ip, iq = graph.roots[0], graph.roots[-1]

    def build_play(i, j) -> DistinguishingPlay:
        round_no, side, c_edge = killed[(i, j)]
        att_i, def_j = (i, j) if side == "left" else (j, i)
        answers = []
        for a_edge in answer[def_j]:
            if not _labels_match(sysm, c_edge.residual, a_edge.residual):
                continue
            t = _aligned_answer_index(graph, sysm, c_edge, a_edge)
            if t is None:
                continue
            sub_pair = ((c_edge.target, t) if side == "left"
                        else (t, c_edge.target))
            if sub_pair in killed:
                answers.append((a_edge.residual, build_play(*sub_pair)))
        return DistinguishingPlay(graph.states[i], graph.states[j], side,
                                  c_edge.residual, tuple(answers), round_no)

    if (ip, iq) in alive:
        if method == "bounded" and not converged:
            return BisimVerdict("bounded-bisimilar", system, mode, method,
                                bound=bound, rounds=rounds, graph=graph)
        carrier = tuple(sorted(set(graph.states), key=term_key))
        pairs = frozenset((graph.states[i], graph.states[j])
                          for i, j in alive
                          if expandable[i] and expandable[j])
        witness = Relation(carrier, carrier, pairs)
        return BisimVerdict("bisimilar", system, mode, method, witness=witness,
                            rounds=rounds, graph=graph)

    play = build_play(ip, iq)
    return BisimVerdict("not-bisimilar", system, mode, method, play=play,
                        rounds=rounds, graph=graph)


def replay_play(play: DistinguishingPlay, graph: LtsGraph,
                challenge_edges=None, answer_edges=None) -> bool:
    """Check a distinguishing play move by move against the graph.

    The attacker's challenge must be a real edge, and every label-compatible
    defender answer must either be listed with a valid continuation or be
    impossible to align.
    """
    sysm = system_named(graph.system)
    if challenge_edges is None:
        challenge_edges = graph.edges
    if answer_edges is None:
        answer_edges = graph.edges
    index = {}
    for i, t in enumerate(graph.states):
        index.setdefault(t, i)

    def check(node: DistinguishingPlay) -> bool:
        li, ri = index.get(node.left), index.get(node.right)
        if li is None or ri is None:
            return False
        attacker, defender = (li, ri) if node.attacker == "left" else (ri, li)
        c_edge = next((e for e in challenge_edges[attacker]
                       if e.residual == node.challenge), None)
        if c_edge is None:
            return False
        answered = {sysm.residual_key(a) for a, _ in node.answers}
        for a_edge in answer_edges[defender]:
            if not _labels_match(sysm, c_edge.residual, a_edge.residual):
                continue
            if _aligned_answer_index(graph, sysm, c_edge, a_edge) is None:
                continue
            if sysm.residual_key(a_edge.residual) not in answered:
                return False
        return all(check(sub) for _, sub in node.answers)

    return check(play)
