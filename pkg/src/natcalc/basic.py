"""The basic transition system: actions, opening residuals, and all rules.

Scope opening is a transition of its own here.  Opening residuals are stored
instantiated at one deterministic fresh id per source state (the context's
next mintable id), which makes residuals comparable and edge sets
reproducible.  The two closing rules are applied eagerly and exhaustively:
every opening residual is chased, its instantiated body is stepped in the
extended context, and label-independent results are folded back under a
binder.  The chase is bounded by the universe's fresh budget.

Every returned residual carries a derivation tree naming the rules that
justify it, for audit and for the command-line listing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import BudgetExceeded
from .relations import Relation
from .terms import (CanonicalTerm, ChannelId, Context, NewChannel, Parallel,
                    Process, Receive, Replicate, Send, Stop, Truncated, STOP,
                    Universe, Value, read_back, reify, swap_canonical,
                    swap_channels, term_key, value_channels, value_key)

# --------------------------------------------------------------------------
# actions and residuals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SendAction:
    channel: ChannelId
    value: Value


@dataclass(frozen=True)
class ReceiveAction:
    channel: ChannelId
    value: Value


@dataclass(frozen=True)
class TauAction:
    pass


TAU = TauAction()

BasicAction = SendAction | ReceiveAction | TauAction


def action_key(a: BasicAction) -> tuple:
    if isinstance(a, SendAction):
        return (0, a.channel.id, value_key(a.value))
    if isinstance(a, ReceiveAction):
        return (1, a.channel.id, value_key(a.value))
    if isinstance(a, TauAction):
        return (2,)
    raise TypeError(f"not an action: {a!r}")


def action_mentions(a: BasicAction, channel: ChannelId) -> bool:
    """Whether the action's channel or payload involves the given id."""
    if isinstance(a, TauAction):
        return False
    return a.channel == channel or channel in value_channels(a.value)


@dataclass(frozen=True)
class Acting:
    """A labelled step: action together with its target."""

    action: BasicAction
    target: Any


@dataclass(frozen=True)
class Opening:
    """A scope-opening step, instantiated at the recorded fresh id."""

    channel: ChannelId
    target: Any


BasicResidual = Acting | Opening


def residual_key(r: BasicResidual) -> tuple:
    """Order: label kind, channel, value, then target canonical form."""
    if isinstance(r, Acting):
        return (0, action_key(r.action), _target_key(r.target))
    if isinstance(r, Opening):
        return (1, (r.channel.id,), _target_key(r.target))
    raise TypeError(f"not a basic residual: {r!r}")


def _target_key(t) -> tuple:
    if isinstance(t, CanonicalTerm):
        return (0, term_key(t))
    if isinstance(t, (Acting, Opening)):
        return (1, residual_key(t))
    raise TypeError(f"unordered residual target: {t!r}")


def is_tau(r: BasicResidual) -> bool:
    return isinstance(r, Acting) and isinstance(r.action, TauAction)


def residual_target(r: BasicResidual):
    return r.target


def with_target(r: BasicResidual, target) -> BasicResidual:
    if isinstance(r, Acting):
        return Acting(r.action, target)
    return Opening(r.channel, target)


# --------------------------------------------------------------------------
# derivations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Derivation:
    """Tree of rule applications justifying one residual."""

    rule: str
    premises: tuple = ()

    def rules(self) -> tuple[str, ...]:
        out = [self.rule]
        for p in self.premises:
            out.extend(p.rules())
        return tuple(out)


@dataclass(frozen=True)
class Transition:
    """One derived transition: canonical residual plus its justification.

    ``minted`` is the minted set under which the residual's target was
    canonicalized (grows by the opened channel for openings).
    """

    residual: BasicResidual
    derivation: Derivation
    minted: tuple[ChannelId, ...]
    target_process: Process = field(compare=False, repr=False, default=None)

    @property
    def rule(self) -> str:
        return self.derivation.rule


# --------------------------------------------------------------------------
# the step engine
# --------------------------------------------------------------------------

def basic_transitions(term, ctx: Context) -> tuple[BasicResidual, ...]:
    """All residuals derivable from a term under the rule system, ordered."""
    return tuple(t.residual for t in basic_transitions_detailed(term, ctx))


def basic_transitions_detailed(term, ctx: Context) -> tuple[Transition, ...]:
    process = term if isinstance(term, Process) else read_back(term)
    records = _step(process, ctx, ctx.universe.depth_budget)
    return tuple(sorted(records.values(), key=lambda t: residual_key(t.residual)))


def _canonicalize(residual: Acting | Opening, ctx: Context):
    """Canonical form of a process-target residual plus its minted set."""
    if isinstance(residual, Acting):
        minted = ctx.minted
        target = reify(residual.target, ctx.universe, minted)
        return Acting(residual.action, target), minted
    minted = ctx.with_minted(residual.channel).minted
    target = reify(residual.target, ctx.universe, minted)
    return Opening(residual.channel, target), minted


def _step(p: Process, ctx: Context, unrolls: int) -> dict:
    """Map canonical residual -> Transition, closed under the closing rules."""
    out: dict = {}

    def add(residual, derivation):
        canon, minted = _canonicalize(residual, ctx)
        if canon in out:
            return None
        record = Transition(canon, derivation, minted, residual.target)
        out[canon] = record
        return record

    chase: list[Transition] = []
    for residual, derivation in _primitive(p, ctx, unrolls):
        record = add(residual, derivation)
        if record is not None and isinstance(record.residual, Opening):
            chase.append(record)

    while chase:
        op = chase.pop(0)
        f = op.residual.channel
        inner_ctx = ctx.with_minted(f)
        for inner in _step(op.target_process, inner_ctx, unrolls).values():
            inner_res = inner.residual
            if isinstance(inner_res, Acting):
                if action_mentions(inner_res.action, f):
                    continue
                closed = Acting(inner_res.action, _reabstract(inner.target_process, f))
                record = add(closed, Derivation(
                    "scope-closing-after-acting", (op.derivation, inner.derivation)))
            else:
                # Rename the inner fresh id to this state's canonical one so
                # alternative derivations of the same opening coincide.
                g = inner_res.channel
                target = _reabstract(inner.target_process, f)
                target = swap_channels(target, g, f)
                closed = Opening(f, target)
                record = add(closed, Derivation(
                    "scope-closing-after-opening", (op.derivation, inner.derivation)))
            if record is not None and isinstance(record.residual, Opening):
                chase.append(record)

    return out


def _reabstract(target: Process, channel: ChannelId) -> Process:
    """Re-bind a fresh id into a binder around the target."""
    return NewChannel(lambda c: swap_channels(target, channel, c))


def _primitive(p: Process, ctx: Context, unrolls: int) -> list:
    """Residuals from the non-closing rules, with process targets."""
    if isinstance(p, (Stop, Truncated)):
        return []
    if isinstance(p, Send):
        return [(Acting(SendAction(p.channel, p.value), STOP),
                 Derivation("sending"))]
    if isinstance(p, Receive):
        return [(Acting(ReceiveAction(p.channel, v), p.continuation(v)),
                 Derivation("receiving"))
                for v in ctx.enum_values()]
    if isinstance(p, NewChannel):
        f, _ = ctx.mint()
        return [(Opening(f, p.continuation(f)), Derivation("scope-opening"))]
    if isinstance(p, Replicate):
        if unrolls <= 0:
            return []
        inner = _step(Parallel(p.body, p), ctx, unrolls - 1)
        return [(Acting(t.residual.action, t.target_process)
                 if isinstance(t.residual, Acting)
                 else Opening(t.residual.channel, t.target_process),
                 Derivation("replication-unrolling", (t.derivation,)))
                for t in inner.values()]
    if isinstance(p, Parallel):
        left = _step(p.left, ctx, unrolls)
        right = _step(p.right, ctx, unrolls)
        out = []
        for t in left.values():
            r = t.residual
            if isinstance(r, Acting):
                out.append((Acting(r.action, Parallel(t.target_process, p.right)),
                            Derivation("acting-within-subsystem", (t.derivation,))))
            else:
                out.append((Opening(r.channel, Parallel(t.target_process, p.right)),
                            Derivation("scope-opening-within-subsystem",
                                       (t.derivation,))))
        for t in right.values():
            r = t.residual
            if isinstance(r, Acting):
                out.append((Acting(r.action, Parallel(p.left, t.target_process)),
                            Derivation("acting-within-subsystem-sym",
                                       (t.derivation,))))
            else:
                out.append((Opening(r.channel, Parallel(p.left, t.target_process)),
                            Derivation("scope-opening-within-subsystem-sym",
                                       (t.derivation,))))
        for ls in left.values():
            lr = ls.residual
            if not (isinstance(lr, Acting) and isinstance(lr.action, SendAction)):
                continue
            for rs in right.values():
                rr = rs.residual
                if (isinstance(rr, Acting) and isinstance(rr.action, ReceiveAction)
                        and rr.action.channel == lr.action.channel
                        and rr.action.value == lr.action.value):
                    out.append((Acting(TAU, Parallel(ls.target_process,
                                                     rs.target_process)),
                                Derivation("communication",
                                           (ls.derivation, rs.derivation))))
        for rs in right.values():
            rr = rs.residual
            if not (isinstance(rr, Acting) and isinstance(rr.action, SendAction)):
                continue
            for ls in left.values():
                lr = ls.residual
                if (isinstance(lr, Acting) and isinstance(lr.action, ReceiveAction)
                        and lr.action.channel == rr.action.channel
                        and lr.action.value == rr.action.value):
                    out.append((Acting(TAU, Parallel(ls.target_process,
                                                     rs.target_process)),
                                Derivation("communication-sym",
                                           (rs.derivation, ls.derivation))))
        return out
    raise TypeError(f"not a process: {p!r}")


# --------------------------------------------------------------------------
# silent and fuse
# --------------------------------------------------------------------------

def basic_silent(target) -> Acting:
    """The residual that extends a target with the silent label."""
    return Acting(TAU, target)


def basic_fuse(nested: BasicResidual) -> tuple[BasicResidual, ...]:
    """Collapse one silent layer of a nested residual.

    Four shapes collapse: a silent outer layer over anything, and a silent
    inner layer under an action or an opening.  Everything else yields
    nothing.
    """
    out = []
    if is_tau(nested):
        inner = nested.target
        if isinstance(inner, (Acting, Opening)):
            out.append(inner)
    inner = nested.target
    if isinstance(inner, Acting) and is_tau(inner):
        out.append(with_target(nested, inner.target))
    return tuple(out)


# --------------------------------------------------------------------------
# lifting
# --------------------------------------------------------------------------

def residuals_related(X: Relation, r1: BasicResidual, r2: BasicResidual) -> bool:
    """Whether lift(X) relates two canonical basic residuals.

    Openings are compared at one shared fresh id: when the recorded ids
    differ, the right body is renamed to the left id before the lookup.
    Renaming declines (conservatively unrelated) if the left id already
    occurs free in the right body, which can only happen for states minted
    under diverging histories.
    """
    from .terms import free_channels
    if isinstance(r1, Acting) and isinstance(r2, Acting):
        return r1.action == r2.action and X.holds(r1.target, r2.target)
    if isinstance(r1, Opening) and isinstance(r2, Opening):
        if r1.channel == r2.channel:
            return X.holds(r1.target, r2.target)
        if r1.channel in free_channels(r2.target):
            return False
        aligned = swap_canonical(r2.target, r2.channel, r1.channel)
        return X.holds(r1.target, aligned)
    return False
