"""Process terms, the finite enumeration universe, and canonical forms.

Processes are built through a higher-order API: receive and channel-creation
continuations are ordinary Python callables.  Because callables have no
decidable identity, the semantics never works on processes directly; it works
on *canonical terms*, obtained by ``reify``.  Reification observes every
receive continuation extensionally over a finite, configurable enumeration
set and instantiates every binder at a nesting-indexed placeholder, producing
a first-order tree with structural equality, hashing, and a total order.

Replication is an infinite term; canonical forms truncate it at a configured
depth with an explicit ``CanonCut`` marker, so equality of replicated terms
is always equality *at a stated depth*.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .errors import BudgetExceeded, UnknownTableValue


# --------------------------------------------------------------------------
# channels
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelId:
    """Opaque channel identity.

    Non-negative ids denote real channels: ids below the universe's pool size
    form the public pool, ids at or above it are minted during exploration.
    Negative ids are binder placeholders, internal to canonical forms; they
    never appear in pools, minted sets, or transition labels.
    """

    id: int

    def __repr__(self):
        if self.id < 0:
            return f"b{-self.id - 1}"
        return f"ch{self.id}"


def bound_channel(level: int) -> ChannelId:
    """Placeholder for the binder at the given nesting level (outermost = 0)."""
    return ChannelId(-(level + 1))


def is_bound(channel: ChannelId) -> bool:
    return channel.id < 0


def bound_level(channel: ChannelId) -> int:
    return -channel.id - 1


# --------------------------------------------------------------------------
# values
# --------------------------------------------------------------------------

class Value:
    """Closed data values: unit, booleans, naturals, channels, and pairs."""

    __slots__ = ()


@dataclass(frozen=True)
class Unit(Value):
    pass


@dataclass(frozen=True)
class Boolean(Value):
    flag: bool


@dataclass(frozen=True)
class Natural(Value):
    number: int

    def __post_init__(self):
        if self.number < 0:
            raise ValueError("naturals are non-negative")


@dataclass(frozen=True)
class Chan(Value):
    channel: ChannelId


@dataclass(frozen=True)
class Pair(Value):
    first: Value
    second: Value


UNIT = Unit()
TRUE = Boolean(True)
FALSE = Boolean(False)


def value_key(v: Value) -> tuple:
    """Total order on values: unit < booleans < naturals < channels < pairs."""
    if isinstance(v, Unit):
        return (0,)
    if isinstance(v, Boolean):
        return (1, v.flag)
    if isinstance(v, Natural):
        return (2, v.number)
    if isinstance(v, Chan):
        return (3, v.channel.id)
    if isinstance(v, Pair):
        return (4, value_key(v.first), value_key(v.second))
    raise TypeError(f"not a value: {v!r}")


def value_channels(v: Value) -> set[ChannelId]:
    """All channel identities occurring inside a value."""
    if isinstance(v, Chan):
        return {v.channel}
    if isinstance(v, Pair):
        return value_channels(v.first) | value_channels(v.second)
    return set()


def swap_value(v: Value, a: ChannelId, b: ChannelId) -> Value:
    if isinstance(v, Chan):
        if v.channel == a:
            return Chan(b)
        if v.channel == b:
            return Chan(a)
        return v
    if isinstance(v, Pair):
        return Pair(swap_value(v.first, a, b), swap_value(v.second, a, b))
    return v


# --------------------------------------------------------------------------
# processes (construction API)
# --------------------------------------------------------------------------

class Process:
    """Base class of the higher-order construction API."""

    __slots__ = ()

    def __or__(self, other: "Process") -> "Process":
        return Parallel(self, other)


@dataclass(frozen=True, eq=False)
class Stop(Process):
    pass


@dataclass(frozen=True, eq=False)
class Send(Process):
    channel: ChannelId
    value: Value


@dataclass(frozen=True, eq=False)
class Receive(Process):
    channel: ChannelId
    continuation: Callable[[Value], Process]


@dataclass(frozen=True, eq=False)
class Parallel(Process):
    left: Process
    right: Process


@dataclass(frozen=True, eq=False)
class NewChannel(Process):
    continuation: Callable[[ChannelId], Process]


@dataclass(frozen=True, eq=False)
class Replicate(Process):
    """Infinite parallel unrolling of ``body``; expansion happens on demand."""

    body: Process


@dataclass(frozen=True, eq=False)
class Truncated(Process):
    """Read-back image of a depth cut; has no transitions."""


STOP = Stop()
TRUNCATED = Truncated()


def replicate(p: Process) -> Process:
    """The term that unrolls, on demand, to ``p`` in parallel with itself."""
    return Replicate(p)


def swap_channels(p: Process, a: ChannelId, b: ChannelId) -> Process:
    """Transpose two channel identities everywhere in a process.

    Continuations are conjugated: inputs are swapped before application and
    outputs swapped after, so uniform continuations behave as if written for
    the transposed channels.
    """
    if a == b:
        return p

    def sw(c: ChannelId) -> ChannelId:
        return b if c == a else a if c == b else c

    if isinstance(p, (Stop, Truncated)):
        return p
    if isinstance(p, Send):
        return Send(sw(p.channel), swap_value(p.value, a, b))
    if isinstance(p, Receive):
        cont = p.continuation
        return Receive(sw(p.channel),
                       lambda v: swap_channels(cont(swap_value(v, a, b)), a, b))
    if isinstance(p, Parallel):
        return Parallel(swap_channels(p.left, a, b), swap_channels(p.right, a, b))
    if isinstance(p, NewChannel):
        cont = p.continuation
        return NewChannel(lambda c: swap_channels(cont(c), a, b))
    if isinstance(p, Replicate):
        return Replicate(swap_channels(p.body, a, b))
    raise TypeError(f"not a process: {p!r}")


# --------------------------------------------------------------------------
# universe and exploration context
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Universe:
    """Finite value domain and channel pool that make reification decidable.

    ``data_values`` must be channel-free; channels enter the enumeration set
    only through the public pool and through ids minted during exploration.
    """

    data_values: tuple[Value, ...] = (UNIT,)
    pool: int = 2
    fresh_budget: int = 3
    depth_budget: int = 6

    def __post_init__(self):
        if self.pool < 1:
            raise ValueError("pool must hold at least one channel")
        if self.fresh_budget < 0:
            raise ValueError("fresh_budget must be non-negative")
        if self.depth_budget < 1:
            raise ValueError("depth_budget must be positive")
        for v in self.data_values:
            if value_channels(v):
                raise ValueError(f"data value {v!r} mentions a channel")
        ordered = tuple(sorted(set(self.data_values), key=value_key))
        object.__setattr__(self, "data_values", ordered)

    def pool_channels(self) -> tuple[ChannelId, ...]:
        return tuple(ChannelId(i) for i in range(self.pool))


@dataclass(frozen=True)
class Context:
    """One exploration context: a universe plus the fresh ids minted so far.

    A context is immutable and must not be shared between concurrent
    activities that mint; minting returns a new context.
    """

    universe: Universe
    minted: tuple[ChannelId, ...] = ()

    def enum_values(self, bound_levels: int = 0) -> tuple[Value, ...]:
        """The receive-enumeration set: data values, pool and minted channels,
        plus placeholders for the enclosing binder levels."""
        values = list(self.universe.data_values)
        values.extend(Chan(c) for c in self.universe.pool_channels())
        values.extend(Chan(c) for c in self.minted)
        values.extend(Chan(bound_channel(l)) for l in range(bound_levels))
        return tuple(sorted(set(values), key=value_key))

    def next_fresh(self) -> ChannelId:
        top = self.universe.pool - 1
        for c in self.minted:
            top = max(top, c.id)
        return ChannelId(top + 1)

    def mint(self) -> tuple[ChannelId, "Context"]:
        if len(self.minted) >= self.universe.fresh_budget:
            raise BudgetExceeded(
                f"cannot mint more than {self.universe.fresh_budget} fresh channels")
        c = self.next_fresh()
        return c, Context(self.universe, self.minted + (c,))

    def with_minted(self, channel: ChannelId) -> "Context":
        if channel in self.minted:
            return self
        if len(self.minted) >= self.universe.fresh_budget:
            raise BudgetExceeded(
                f"cannot mint more than {self.universe.fresh_budget} fresh channels")
        return Context(self.universe, self.minted + (channel,))


# --------------------------------------------------------------------------
# canonical terms
# --------------------------------------------------------------------------

class CanonicalTerm:
    """First-order image of a process under a context, at a stated depth."""

    __slots__ = ()


@dataclass(frozen=True)
class CanonStop(CanonicalTerm):
    pass


@dataclass(frozen=True)
class CanonCut(CanonicalTerm):
    """Marker for subterms below the reification depth."""


@dataclass(frozen=True)
class CanonSend(CanonicalTerm):
    channel: ChannelId
    value: Value


@dataclass(frozen=True)
class CanonReceive(CanonicalTerm):
    """Extensional receive table over the context's enumeration set.

    ``rows`` is ordered by the canonical value order and is the whole
    identity of the node; the originating continuation is kept only so rows
    for later-minted channels can be recomputed, and never takes part in
    comparisons.
    """

    channel: ChannelId
    rows: tuple[tuple[Value, CanonicalTerm], ...]
    continuation: Callable[[Value], Process] | None = field(
        default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CanonParallel(CanonicalTerm):
    left: CanonicalTerm
    right: CanonicalTerm


@dataclass(frozen=True)
class CanonNew(CanonicalTerm):
    """Binder node; references in ``body`` use the placeholder of this node's
    nesting level, so alpha-variants reify identically."""

    body: CanonicalTerm
    continuation: Callable[[ChannelId], Process] | None = field(
        default=None, compare=False, repr=False)


CANON_STOP = CanonStop()
CANON_CUT = CanonCut()


def term_key(t: CanonicalTerm) -> tuple:
    """Total order on canonical terms, used for deterministic edge sets."""
    if isinstance(t, CanonStop):
        return (0,)
    if isinstance(t, CanonSend):
        return (1, t.channel.id, value_key(t.value))
    if isinstance(t, CanonReceive):
        return (2, t.channel.id,
                tuple((value_key(v), term_key(s)) for v, s in t.rows))
    if isinstance(t, CanonParallel):
        return (3, term_key(t.left), term_key(t.right))
    if isinstance(t, CanonNew):
        return (4, term_key(t.body))
    if isinstance(t, CanonCut):
        return (5,)
    raise TypeError(f"not a canonical term: {t!r}")


def contains_cut(t: CanonicalTerm) -> bool:
    if isinstance(t, CanonCut):
        return True
    if isinstance(t, CanonParallel):
        return contains_cut(t.left) or contains_cut(t.right)
    if isinstance(t, CanonNew):
        return contains_cut(t.body)
    if isinstance(t, CanonReceive):
        return any(contains_cut(s) for _, s in t.rows)
    return False


def free_channels(t: CanonicalTerm) -> tuple[ChannelId, ...]:
    """Channel ids a term mentions, in id order.

    Binder placeholders are excluded.  Table keys are enumeration artifacts,
    not mentions, so they are skipped; channels inside row targets count.
    """
    acc: set[ChannelId] = set()

    def walk(term):
        if isinstance(term, CanonSend):
            acc.add(term.channel)
            acc.update(value_channels(term.value))
        elif isinstance(term, CanonReceive):
            acc.add(term.channel)
            for _, target in term.rows:
                walk(target)
        elif isinstance(term, CanonParallel):
            walk(term.left)
            walk(term.right)
        elif isinstance(term, CanonNew):
            walk(term.body)

    walk(t)
    return tuple(sorted((c for c in acc if not is_bound(c)), key=lambda c: c.id))


def swap_canonical(t: CanonicalTerm, a: ChannelId, b: ChannelId) -> CanonicalTerm:
    """Transpose two real channel ids in a canonical term.

    Table rows are re-sorted because keys change their place in the value
    order.  The result is used for comparison only and carries no
    continuations.
    """
    if a == b:
        return t

    def sw(c: ChannelId) -> ChannelId:
        return b if c == a else a if c == b else c

    if isinstance(t, (CanonStop, CanonCut)):
        return t
    if isinstance(t, CanonSend):
        return CanonSend(sw(t.channel), swap_value(t.value, a, b))
    if isinstance(t, CanonReceive):
        rows = tuple(sorted(
            ((swap_value(v, a, b), swap_canonical(s, a, b)) for v, s in t.rows),
            key=lambda row: value_key(row[0])))
        return CanonReceive(sw(t.channel), rows, None)
    if isinstance(t, CanonParallel):
        return CanonParallel(swap_canonical(t.left, a, b),
                             swap_canonical(t.right, a, b))
    if isinstance(t, CanonNew):
        return CanonNew(swap_canonical(t.body, a, b), None)
    raise TypeError(f"not a canonical term: {t!r}")


# --------------------------------------------------------------------------
# reification
# --------------------------------------------------------------------------

def reify(process: Process, universe: Universe,
          minted: tuple[ChannelId, ...] = (), depth: int | None = None,
          ) -> CanonicalTerm:
    """Observe a process extensionally, producing its canonical form.

    Receive continuations are applied to every value in the enumeration set
    of ``(universe, minted)`` extended by the placeholders of enclosing
    binders; binder continuations are instantiated at nesting-indexed
    placeholders; anything below ``depth`` becomes a cut marker.

    Deterministic: equal inputs yield the identical tree.
    """
    if depth is None:
        depth = universe.depth_budget
    if depth > universe.depth_budget:
        raise ValueError("depth exceeds the universe's depth budget")
    ctx = Context(universe, tuple(minted))
    return _reify(process, ctx, depth, 0)


def reify_in(process: Process, ctx: Context, depth: int | None = None) -> CanonicalTerm:
    return reify(process, ctx.universe, ctx.minted, depth)


def _reify(p: Process, ctx: Context, depth: int, level: int) -> CanonicalTerm:
    if depth <= 0:
        return CANON_CUT
    if isinstance(p, Stop):
        return CANON_STOP
    if isinstance(p, Truncated):
        return CANON_CUT
    if isinstance(p, Send):
        return CanonSend(p.channel, p.value)
    if depth < 2:
        return CANON_CUT
    if isinstance(p, Parallel):
        return CanonParallel(_reify(p.left, ctx, depth - 1, level),
                             _reify(p.right, ctx, depth - 1, level))
    if isinstance(p, Receive):
        rows = tuple((v, _reify(p.continuation(v), ctx, depth - 1, level))
                     for v in ctx.enum_values(level))
        return CanonReceive(p.channel, rows, p.continuation)
    if isinstance(p, NewChannel):
        if level >= ctx.universe.fresh_budget:
            raise BudgetExceeded(
                f"more than {ctx.universe.fresh_budget} binders along one path")
        body = p.continuation(bound_channel(level))
        return CanonNew(_reify(body, ctx, depth - 1, level + 1), p.continuation)
    if isinstance(p, Replicate):
        return CanonParallel(_reify(p.body, ctx, depth - 1, level),
                             _reify(p, ctx, depth - 1, level))
    raise TypeError(f"not a process: {p!r}")


def alpha_equal(p: Process, q: Process, universe: Universe,
                minted: tuple[ChannelId, ...] = ()) -> bool:
    """Equality up to bound-channel identity, decided by reification."""
    return reify(p, universe, minted) == reify(q, universe, minted)


# --------------------------------------------------------------------------
# reading canonical terms back as processes
# --------------------------------------------------------------------------

def read_back(t: CanonicalTerm, _level: int = 0) -> Process:
    """Reconstruct a process whose reification is the given canonical term.

    Nodes produced by ``reify`` carry their original continuations and read
    back exactly.  Hand-built nodes fall back to table lookup, which raises
    ``UnknownTableValue`` outside the recorded rows, so such terms cannot be
    extended with later-minted channels.
    """
    if isinstance(t, CanonStop):
        return STOP
    if isinstance(t, CanonCut):
        return TRUNCATED
    if isinstance(t, CanonSend):
        return Send(t.channel, t.value)
    if isinstance(t, CanonParallel):
        return Parallel(read_back(t.left, _level), read_back(t.right, _level))
    if isinstance(t, CanonReceive):
        cont = t.continuation
        if cont is None:
            table = {v: s for v, s in t.rows}
            level = _level

            def cont(v, _table=table, _lv=level):
                try:
                    target = _table[v]
                except KeyError:
                    raise UnknownTableValue(
                        f"table on {t.channel!r} has no row for {v!r}") from None
                return read_back(target, _lv)

        return Receive(t.channel, cont)
    if isinstance(t, CanonNew):
        cont = t.continuation
        if cont is None:
            body, level = t.body, _level

            def cont(c, _body=body, _lv=level):
                return read_back(substitute_bound(_body, _lv, c), _lv + 1)

        return NewChannel(cont)
    raise TypeError(f"not a canonical term: {t!r}")


def substitute_bound(t: CanonicalTerm, level: int, channel: ChannelId) -> CanonicalTerm:
    """Replace the placeholder of ``level`` by a channel id, re-sorting rows.

    The result carries no continuations: binder levels can shift between the
    original tree and its read-back image, so wrapped closures could conflate
    channels.  Dropping them keeps the result honest at the price of no table
    extension below hand-built binders.
    """
    placeholder = bound_channel(level)

    def sub_chan(c):
        return channel if c == placeholder else c

    def sub_value(v):
        if isinstance(v, Chan):
            return Chan(sub_chan(v.channel))
        if isinstance(v, Pair):
            return Pair(sub_value(v.first), sub_value(v.second))
        return v

    def walk(term):
        if isinstance(term, (CanonStop, CanonCut)):
            return term
        if isinstance(term, CanonSend):
            return CanonSend(sub_chan(term.channel), sub_value(term.value))
        if isinstance(term, CanonReceive):
            rows = tuple(sorted(((sub_value(v), walk(s)) for v, s in term.rows),
                                key=lambda row: value_key(row[0])))
            return CanonReceive(sub_chan(term.channel), rows, None)
        if isinstance(term, CanonParallel):
            return CanonParallel(walk(term.left), walk(term.right))
        if isinstance(term, CanonNew):
            return CanonNew(walk(term.body), None)
        raise TypeError(f"not a canonical term: {term!r}")

    return walk(t)
