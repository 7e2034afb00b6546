"""Residual structures as relators, weak structures as monads, and checkers.

A residual structure packages a lifting operation: it turns a relation on
terms into a relation on residuals with the same labels.  Structures here are
bound to a universe and to one finite term carrier; residual carriers are
generated from the term carrier by applying every label over the universe
plus one shared fresh id for openings, and nested carriers by applying the
labels again.  All laws are checked extensionally over these carriers.

The checkers never assume a law: each axiom is evaluated as an equality (or
inclusion) of finite relations, and failures come with a replayable
counterexample.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable

from .basic import Acting, Opening, ReceiveAction, SendAction, TAU, residual_key
from .errors import CarrierMismatch, SilentAxiomsViolated
from .proper import (InputAction, OpenThen, Output, Payload, Simple,
                     proper_residual_key)
from .relations import Relation
from .terms import (CanonicalTerm, Chan, ChannelId, Universe, free_channels,
                    value_key)

# --------------------------------------------------------------------------
# structures
# --------------------------------------------------------------------------


@dataclass
class ResidualStructure:
    """A lifting operation over a fixed universe and term carrier."""

    name: str
    universe: Universe
    term_carrier: tuple
    _residuals: Callable[[tuple], tuple]
    _lift_pairs: Callable[[Relation], frozenset]

    def residuals(self, xs: tuple) -> tuple:
        return self._residuals(tuple(xs))

    def lift(self, X: Relation) -> Relation:
        return Relation(self.residuals(X.src), self.residuals(X.dst),
                        self._lift_pairs(X))


@dataclass
class WeakResidualStructure:
    """A residual structure with silence: silent adds a silent label and fuse
    removes one from a nested residual."""

    base: ResidualStructure
    _silent_pairs: Callable[[tuple], frozenset]
    _fuse_pairs: Callable[[tuple], frozenset]

    @property
    def name(self):
        return self.base.name

    def residuals(self, xs):
        return self.base.residuals(xs)

    def lift(self, X):
        return self.base.lift(X)

    def silent(self, xs: tuple) -> Relation:
        xs = tuple(xs)
        return Relation(xs, self.residuals(xs), self._silent_pairs(xs))

    def fuse(self, xs: tuple) -> Relation:
        xs = tuple(xs)
        nested = self.residuals(self.residuals(xs))
        return Relation(nested, self.residuals(xs), self._fuse_pairs(xs))


@dataclass
class NormalWeakStructure:
    """Silence by a single dedicated label; fuse is derivable."""

    base: ResidualStructure
    _silent_pairs: Callable[[tuple], frozenset]

    @property
    def name(self):
        return self.base.name

    def residuals(self, xs):
        return self.base.residuals(xs)

    def lift(self, X):
        return self.base.lift(X)

    def silent(self, xs: tuple) -> Relation:
        xs = tuple(xs)
        return Relation(xs, self.residuals(xs), self._silent_pairs(xs))


def derive_fuse(normal: NormalWeakStructure,
                samples: list | None = None) -> WeakResidualStructure:
    """Build the weak structure whose fuse removes the dedicated silent label.

    fuse is the union of the converse of silent (removing an outer silent
    label) and the lift of that converse (removing one under another label).
    The silence axioms are checked first; a violating silent relation would
    not yield a monad.
    """
    if samples is None:
        samples = sample_relations(normal.base.term_carrier, 8, seed=20)
    report = check_normal_silent_axioms(normal, samples)
    if not report.passed:
        failing = ", ".join(r.axiom for r in report.results if not r.holds)
        raise SilentAxiomsViolated(f"{normal.name}: {failing}")

    def fuse_pairs(xs: tuple) -> frozenset:
        res = normal.residuals(xs)
        outer = normal.silent(res).converse()
        inner = normal.lift(normal.silent(tuple(xs)).converse())
        return outer.union(inner).pairs

    return WeakResidualStructure(normal.base, normal._silent_pairs, fuse_pairs)


# --------------------------------------------------------------------------
# the two shipped structures
# --------------------------------------------------------------------------

def _carrier_channels(universe: Universe, carrier: tuple) -> tuple[ChannelId, ...]:
    chans = set(universe.pool_channels())
    for t in carrier:
        if isinstance(t, CanonicalTerm):
            chans.update(free_channels(t))
    return tuple(sorted(chans, key=lambda c: c.id))


def _shared_fresh(universe: Universe, carrier: tuple) -> ChannelId:
    top = universe.pool - 1
    for c in _carrier_channels(universe, carrier):
        top = max(top, c.id)
    return ChannelId(top + 1)


def basic_structure(universe: Universe, carrier: tuple) -> ResidualStructure:
    carrier = tuple(carrier)
    chans = _carrier_channels(universe, carrier)
    fresh = _shared_fresh(universe, carrier)
    values = tuple(sorted(
        set(universe.data_values) | {Chan(c) for c in chans}, key=value_key))
    actions = [TAU]
    actions += [SendAction(c, v) for c in chans for v in values]
    actions += [ReceiveAction(c, v) for c in chans for v in values]

    def residuals(xs: tuple) -> tuple:
        out = [Acting(a, x) for a in actions for x in xs]
        out += [Opening(fresh, x) for x in xs]
        return tuple(sorted(out, key=residual_key))

    def lift_pairs(X: Relation) -> frozenset:
        pairs = set()
        for p, q in X.pairs:
            for a in actions:
                pairs.add((Acting(a, p), Acting(a, q)))
            pairs.add((Opening(fresh, p), Opening(fresh, q)))
        return frozenset(pairs)

    return ResidualStructure("basic", universe, carrier, residuals, lift_pairs)


def basic_weak_structure(universe: Universe, carrier: tuple) -> WeakResidualStructure:
    """Basic structure with directly implemented silent and fuse relations."""
    base = basic_structure(universe, carrier)

    def silent_pairs(xs: tuple) -> frozenset:
        return frozenset((x, Acting(TAU, x)) for x in xs)

    def fuse_pairs(xs: tuple) -> frozenset:
        res = base.residuals(tuple(xs))
        pairs = set()
        for r in res:
            # silent over anything: the outer label is dropped
            pairs.add((Acting(TAU, r), r))
        for r in res:
            inner = r.target
            # a silent layer under an action or an opening is dropped
            if isinstance(r, Acting):
                pairs.add((Acting(r.action, Acting(TAU, inner)), r))
            else:
                pairs.add((Opening(r.channel, Acting(TAU, inner)), r))
        return frozenset(pairs)

    return WeakResidualStructure(base, silent_pairs, fuse_pairs)


def basic_normal_structure(universe: Universe, carrier: tuple) -> NormalWeakStructure:
    base = basic_structure(universe, carrier)
    return NormalWeakStructure(
        base, lambda xs: frozenset((x, Acting(TAU, x)) for x in xs))


def proper_structure(universe: Universe, carrier: tuple) -> ResidualStructure:
    carrier = tuple(carrier)
    chans = _carrier_channels(universe, carrier)
    fresh = _shared_fresh(universe, carrier)
    values = tuple(sorted(
        set(universe.data_values) | {Chan(c) for c in chans}, key=value_key))
    opened_values = tuple(sorted(set(values) | {Chan(fresh)}, key=value_key))
    simple_actions = [TAU] + [InputAction(c, v) for c in chans for v in values]
    output_shapes = [(c, (), v) for c in chans for v in values]
    output_shapes += [(c, (fresh,), v) for c in chans for v in opened_values]

    def build_output(shape, x):
        chan, opened, v = shape
        rest: Any = Payload(v, x)
        for o in reversed(opened):
            rest = OpenThen(o, rest)
        return Output(chan, rest)

    def residuals(xs: tuple) -> tuple:
        out = [Simple(a, x) for a in simple_actions for x in xs]
        out += [build_output(shape, x) for shape in output_shapes for x in xs]
        return tuple(sorted(out, key=proper_residual_key))

    def lift_pairs(X: Relation) -> frozenset:
        pairs = set()
        for p, q in X.pairs:
            for a in simple_actions:
                pairs.add((Simple(a, p), Simple(a, q)))
            for shape in output_shapes:
                pairs.add((build_output(shape, p), build_output(shape, q)))
        return frozenset(pairs)

    return ResidualStructure("proper", universe, carrier, residuals, lift_pairs)


def proper_normal_structure(universe: Universe, carrier: tuple) -> NormalWeakStructure:
    base = proper_structure(universe, carrier)
    return NormalWeakStructure(
        base, lambda xs: frozenset((x, Simple(TAU, x)) for x in xs))


def proper_weak_structure(universe: Universe, carrier: tuple) -> WeakResidualStructure:
    """Proper structure with fuse derived from its dedicated silent label."""
    return derive_fuse(proper_normal_structure(universe, carrier))


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

@dataclass
class Counterexample:
    axiom: str
    element: Any
    lhs_holds: bool
    rhs_holds: bool
    detail: str
    _recheck: Callable[[], bool] = field(repr=False, default=None)

    def replay(self) -> bool:
        """Re-evaluate the failed axiom on the stored inputs.

        True means the mismatch reproduces.
        """
        if self._recheck is None:
            return False
        return self._recheck()

    def describe(self) -> str:
        return (f"{self.axiom}: {self.detail}; element {self.element!r} "
                f"(lhs={self.lhs_holds}, rhs={self.rhs_holds})")


@dataclass
class AxiomResult:
    axiom: str
    holds: bool
    cases: int
    counterexample: Counterexample | None = None


@dataclass
class AxiomReport:
    structure: str
    results: tuple[AxiomResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.holds for r in self.results)

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            status = "pass" if r.holds else "FAIL"
            line = f"{self.structure}: {r.axiom}: {status} ({r.cases} cases)"
            if r.counterexample is not None:
                line += f" -- {r.counterexample.describe()}"
            out.append(line)
        return out


def _relations_equal(axiom, lhs: Relation, rhs: Relation, detail, recompute):
    """None if equal, else a counterexample from the symmetric difference."""
    if lhs.pairs == rhs.pairs:
        return None
    diff = sorted(lhs.pairs ^ rhs.pairs, key=repr)
    element = diff[0]
    return Counterexample(axiom, element, element in lhs.pairs,
                          element in rhs.pairs, detail,
                          lambda: recompute()[0].pairs != recompute()[1].pairs)


def _relation_included(axiom, lhs: Relation, rhs: Relation, detail, recompute):
    if lhs.pairs <= rhs.pairs:
        return None
    diff = sorted(lhs.pairs - rhs.pairs, key=repr)
    element = diff[0]
    return Counterexample(axiom, element, True, False, detail,
                          lambda: not recompute()[0].pairs <= recompute()[1].pairs)


def _check_carrier(structure, relations):
    carrier = structure.term_carrier
    for X in relations:
        if X.src != carrier or X.dst != carrier:
            raise CarrierMismatch(
                f"sample relation carrier differs from the {structure.name} "
                f"structure's term carrier")


# --------------------------------------------------------------------------
# axiom suites
# --------------------------------------------------------------------------

def check_relator_axioms(structure: ResidualStructure,
                         samples: list[tuple[Relation, Relation]]) -> AxiomReport:
    """Equality, composition, and conversion preservation of the lift."""
    flat = [X for pair in samples for X in pair]
    _check_carrier(structure, flat)
    carrier = structure.term_carrier
    results = []

    identity = Relation.identity(carrier)
    lifted_id = structure.lift(identity)
    res_id = Relation.identity(structure.residuals(carrier))
    ce = _relations_equal(
        "equality-preservation", lifted_id, res_id,
        "lift of equality vs equality on residuals",
        lambda: (structure.lift(Relation.identity(carrier)),
                 Relation.identity(structure.residuals(carrier))))
    results.append(AxiomResult("equality-preservation", ce is None, 1, ce))

    ce, cases = None, 0
    for X, Y in samples:
        cases += 1
        lhs = structure.lift(X.compose(Y))
        rhs = structure.lift(X).compose(structure.lift(Y))
        ce = _relations_equal(
            "composition-preservation", lhs, rhs,
            "lift of a composition vs composition of lifts",
            lambda X=X, Y=Y: (structure.lift(X.compose(Y)),
                              structure.lift(X).compose(structure.lift(Y))))
        if ce is not None:
            break
    results.append(AxiomResult("composition-preservation", ce is None, cases, ce))

    ce, cases = None, 0
    for X, _ in samples:
        cases += 1
        lhs = structure.lift(X.converse())
        rhs = structure.lift(X).converse()
        ce = _relations_equal(
            "conversion-preservation", lhs, rhs,
            "lift of a converse vs converse of the lift",
            lambda X=X: (structure.lift(X.converse()),
                         structure.lift(X).converse()))
        if ce is not None:
            break
    results.append(AxiomResult("conversion-preservation", ce is None, cases, ce))

    return AxiomReport(structure.name, tuple(results))


def check_monad_axioms(weak: WeakResidualStructure,
                       samples: list[Relation]) -> AxiomReport:
    """The five laws making (lift, silent, fuse) a monad over relations."""
    _check_carrier(weak.base, samples)
    carrier = weak.base.term_carrier
    res = weak.residuals(carrier)
    results = []

    ce, cases = None, 0
    for X in samples:
        cases += 1
        lhs = X.compose(weak.silent(carrier))
        rhs = weak.silent(carrier).compose(weak.lift(X))
        ce = _relations_equal(
            "silent-naturality", lhs, rhs,
            "relation then silent vs silent then lifted relation",
            lambda X=X: (X.compose(weak.silent(carrier)),
                         weak.silent(carrier).compose(weak.lift(X))))
        if ce is not None:
            break
    results.append(AxiomResult("silent-naturality", ce is None, cases, ce))

    ce, cases = None, 0
    for X in samples:
        cases += 1
        lhs = weak.lift(weak.lift(X)).compose(weak.fuse(carrier))
        rhs = weak.fuse(carrier).compose(weak.lift(X))
        ce = _relations_equal(
            "fuse-naturality", lhs, rhs,
            "doubly lifted relation then fuse vs fuse then lifted relation",
            lambda X=X: (weak.lift(weak.lift(X)).compose(weak.fuse(carrier)),
                         weak.fuse(carrier).compose(weak.lift(X))))
        if ce is not None:
            break
    results.append(AxiomResult("fuse-naturality", ce is None, cases, ce))

    lhs = weak.silent(res).compose(weak.fuse(carrier))
    ce = _relations_equal(
        "left-neutrality", lhs, Relation.identity(res),
        "silent then fuse vs equality on residuals",
        lambda: (weak.silent(res).compose(weak.fuse(carrier)),
                 Relation.identity(res)))
    results.append(AxiomResult("left-neutrality", ce is None, 1, ce))

    lhs = weak.lift(weak.silent(carrier)).compose(weak.fuse(carrier))
    ce = _relations_equal(
        "right-neutrality", lhs, Relation.identity(res),
        "lifted silent then fuse vs equality on residuals",
        lambda: (weak.lift(weak.silent(carrier)).compose(weak.fuse(carrier)),
                 Relation.identity(res)))
    results.append(AxiomResult("right-neutrality", ce is None, 1, ce))

    lhs = weak.fuse(res).compose(weak.fuse(carrier))
    rhs = weak.lift(weak.fuse(carrier)).compose(weak.fuse(carrier))
    ce = _relations_equal(
        "associativity", lhs, rhs,
        "fuse twice vs lifted fuse then fuse",
        lambda: (weak.fuse(res).compose(weak.fuse(carrier)),
                 weak.lift(weak.fuse(carrier)).compose(weak.fuse(carrier))))
    results.append(AxiomResult("associativity", ce is None, 1, ce))

    return AxiomReport(weak.name, tuple(results))


def check_normal_silent_axioms(normal: NormalWeakStructure,
                               samples: list[Relation]) -> AxiomReport:
    """Naturality, left-uniqueness with left-totality, and right-uniqueness."""
    _check_carrier(normal.base, samples)
    carrier = normal.base.term_carrier
    silent = normal.silent(carrier)
    results = []

    ce, cases = None, 0
    for X in samples:
        cases += 1
        lhs = X.compose(silent)
        rhs = silent.compose(normal.lift(X))
        ce = _relations_equal(
            "silent-naturality", lhs, rhs,
            "relation then silent vs silent then lifted relation",
            lambda X=X: (X.compose(normal.silent(carrier)),
                         normal.silent(carrier).compose(normal.lift(X))))
        if ce is not None:
            break
    results.append(AxiomResult("silent-naturality", ce is None, cases, ce))

    lhs = silent.compose(silent.converse())
    ce = _relations_equal(
        "left-unique-left-total", lhs, Relation.identity(carrier),
        "silent then its converse vs equality on terms",
        lambda: (normal.silent(carrier).compose(normal.silent(carrier).converse()),
                 Relation.identity(carrier)))
    results.append(AxiomResult("left-unique-left-total", ce is None, 1, ce))

    lhs = silent.converse().compose(silent)
    rhs = Relation.identity(normal.residuals(carrier))
    ce = _relation_included(
        "right-unique", lhs, rhs,
        "converse of silent then silent within equality on residuals",
        lambda: (normal.silent(carrier).converse().compose(normal.silent(carrier)),
                 Relation.identity(normal.residuals(carrier))))
    results.append(AxiomResult("right-unique", ce is None, 1, ce))

    return AxiomReport(normal.name, tuple(results))


# --------------------------------------------------------------------------
# sample generation
# --------------------------------------------------------------------------

def sample_relations(carrier: tuple, count: int, seed: int) -> list[Relation]:
    """Seeded relation samples: the named corner cases plus random subsets of
    the full relation lattice at varying densities."""
    carrier = tuple(carrier)
    rng = random.Random(seed)
    out = [Relation.identity(carrier),
           Relation.empty(carrier, carrier),
           Relation.full(carrier, carrier)]
    cells = [(a, b) for a in carrier for b in carrier]
    while len(out) < count:
        density = rng.choice((0.05, 0.15, 0.35, 0.6))
        pairs = frozenset(p for p in cells if rng.random() < density)
        out.append(Relation(carrier, carrier, pairs))
    return out[:count]


def sample_relation_pairs(carrier: tuple, count: int,
                          seed: int) -> list[tuple[Relation, Relation]]:
    singles = sample_relations(carrier, count + 1, seed)
    return [(singles[i], singles[i + 1]) for i in range(count)]
