"""The proper transition system, layered on the basic one.

Proper labels are inputs, silent steps, and outputs; an output bundles the
scopes it publishes, so a label may open zero or more channels before its
payload.  Inputs, silent steps, and plain outputs delegate directly to basic
transitions; bundled outputs arise by chasing a basic opening with a proper
output of the instantiated body, one fact per number of published channels,
bounded by the fresh budget.

A scope can be opened this way even when the opened channel is not published
in the payload or the target; ``unpublished_openings`` flags such residuals
for diagnostics but they remain part of the transition set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .basic import (Acting, Derivation, Opening, ReceiveAction, SendAction,
                    TAU, TauAction, _step, action_key)
from .relations import Relation
from .terms import (CanonicalTerm, ChannelId, Context, Process, Universe,
                    Value, free_channels, read_back, reify, swap_canonical,
                    swap_value, term_key, value_channels, value_key)

# --------------------------------------------------------------------------
# labels and residuals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InputAction:
    channel: ChannelId
    value: Value


ProperAction = InputAction | TauAction


@dataclass(frozen=True)
class Payload:
    """End of an output label: the value sent, then the target."""

    value: Value
    target: Any


@dataclass(frozen=True)
class OpenThen:
    """One published channel, instantiated at the recorded fresh id."""

    channel: ChannelId
    rest: "OutputRest"


OutputRest = Payload | OpenThen


@dataclass(frozen=True)
class Simple:
    """Input or silent step together with its target."""

    action: ProperAction
    target: Any


@dataclass(frozen=True)
class Output:
    """A send, possibly publishing restricted channels first."""

    channel: ChannelId
    rest: OutputRest


ProperResidual = Simple | Output


def opened_channels(r: Output) -> tuple[ChannelId, ...]:
    out = []
    rest = r.rest
    while isinstance(rest, OpenThen):
        out.append(rest.channel)
        rest = rest.rest
    return tuple(out)


def output_payload(r: Output) -> Value:
    rest = r.rest
    while isinstance(rest, OpenThen):
        rest = rest.rest
    return rest.value


def proper_target(r: ProperResidual):
    if isinstance(r, Simple):
        return r.target
    rest = r.rest
    while isinstance(rest, OpenThen):
        rest = rest.rest
    return rest.target


def proper_with_target(r: ProperResidual, target) -> ProperResidual:
    if isinstance(r, Simple):
        return Simple(r.action, target)

    def rebuild(rest):
        if isinstance(rest, OpenThen):
            return OpenThen(rest.channel, rebuild(rest.rest))
        return Payload(rest.value, target)

    return Output(r.channel, rebuild(r.rest))


def proper_action_key(a: ProperAction) -> tuple:
    if isinstance(a, InputAction):
        return (0, a.channel.id, value_key(a.value))
    if isinstance(a, TauAction):
        return (1,)
    raise TypeError(f"not a proper action: {a!r}")


def proper_residual_key(r: ProperResidual) -> tuple:
    if isinstance(r, Simple):
        return (0, proper_action_key(r.action), _target_key(r.target))
    if isinstance(r, Output):
        opened = tuple(c.id for c in opened_channels(r))
        return (1, (r.channel.id,), opened, value_key(output_payload(r)),
                _target_key(proper_target(r)))
    raise TypeError(f"not a proper residual: {r!r}")


def _target_key(t) -> tuple:
    if isinstance(t, CanonicalTerm):
        return (0, term_key(t))
    if isinstance(t, (Simple, Output)):
        return (1, proper_residual_key(t))
    raise TypeError(f"unordered residual target: {t!r}")


def proper_is_tau(r: ProperResidual) -> bool:
    return isinstance(r, Simple) and isinstance(r.action, TauAction)


# --------------------------------------------------------------------------
# transitions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProperTransition:
    residual: ProperResidual
    derivation: Derivation
    minted: tuple[ChannelId, ...]
    target_process: Process = field(compare=False, repr=False, default=None)

    @property
    def rule(self) -> str:
        return self.derivation.rule


def proper_transitions(term, ctx: Context) -> tuple[ProperResidual, ...]:
    return tuple(t.residual for t in proper_transitions_detailed(term, ctx))


def proper_transitions_detailed(term, ctx: Context) -> tuple[ProperTransition, ...]:
    process = term if isinstance(term, Process) else read_back(term)
    records = _proper_step(process, ctx, ctx.universe.depth_budget)
    return tuple(sorted(records.values(),
                        key=lambda t: proper_residual_key(t.residual)))


def _proper_step(p: Process, ctx: Context, unrolls: int) -> dict:
    """Map canonical proper residual -> ProperTransition."""
    out: dict = {}

    def add(residual_proc, minted, derivation, target_process):
        target = reify(target_process, ctx.universe, minted)
        canon = proper_with_target(residual_proc, target)
        if canon in out:
            return
        out[canon] = ProperTransition(canon, derivation, minted, target_process)

    for basic in _step(p, ctx, unrolls).values():
        r = basic.residual
        if isinstance(r, Acting):
            if isinstance(r.action, ReceiveAction):
                add(Simple(InputAction(r.action.channel, r.action.value), None),
                    basic.minted, Derivation("receiving", (basic.derivation,)),
                    basic.target_process)
            elif isinstance(r.action, TauAction):
                add(Simple(TAU, None), basic.minted,
                    Derivation("communication", (basic.derivation,)),
                    basic.target_process)
            else:
                add(Output(r.action.channel, Payload(r.action.value, None)),
                    basic.minted, Derivation("sending", (basic.derivation,)),
                    basic.target_process)
        else:
            f = r.channel
            inner_ctx = ctx.with_minted(f)
            for inner in _proper_step(basic.target_process, inner_ctx,
                                      unrolls).values():
                ir = inner.residual
                if not isinstance(ir, Output) or ir.channel == f:
                    continue
                bundled = Output(ir.channel, OpenThen(f, ir.rest))
                add(bundled, inner.minted,
                    Derivation("opening-bundle",
                               (basic.derivation, inner.derivation)),
                    inner.target_process)

    return out


def unpublished_openings(r: ProperResidual) -> tuple[ChannelId, ...]:
    """Opened channels that occur neither in the payload nor in the target.

    The rule system allows publishing a scope without using it; this
    diagnostic makes such residuals visible without removing them.
    """
    if not isinstance(r, Output):
        return ()
    used = set(value_channels(output_payload(r)))
    target = proper_target(r)
    if isinstance(target, CanonicalTerm):
        used.update(free_channels(target))
    return tuple(c for c in opened_channels(r) if c not in used)


# --------------------------------------------------------------------------
# silent and lifting
# --------------------------------------------------------------------------

def proper_silent(target) -> Simple:
    return Simple(TAU, target)


def proper_residuals_related(X: Relation, r1: ProperResidual,
                             r2: ProperResidual) -> bool:
    """Whether the lifted relation holds of two canonical proper residuals.

    Labels must agree up to the recorded opening ids; the right side's
    opened ids are renamed onto the left side's before comparing payloads
    and targets.  The rename declines (conservatively unrelated) when a left
    id already occurs free on the right outside the openings, which can only
    happen for states minted under diverging histories.
    """
    if isinstance(r1, Simple) and isinstance(r2, Simple):
        return r1.action == r2.action and X.holds(r1.target, r2.target)
    if isinstance(r1, Output) and isinstance(r2, Output):
        if r1.channel != r2.channel:
            return False
        opened1, opened2 = opened_channels(r1), opened_channels(r2)
        if len(opened1) != len(opened2):
            return False
        payload2 = output_payload(r2)
        target2 = proper_target(r2)
        if opened1 != opened2:
            mentioned = set(value_channels(payload2))
            if isinstance(target2, CanonicalTerm):
                mentioned.update(free_channels(target2))
            if any(b in mentioned and b not in opened2
                   for b in opened1):
                return False
            # Two-phase simultaneous rename through temporaries so that
            # overlapping id sets cannot conflate.
            temps = [ChannelId(-1000 - i) for i in range(len(opened2))]
            for a, t in zip(opened2, temps):
                payload2 = swap_value(payload2, a, t)
                target2 = swap_canonical(target2, a, t)
            for t, b in zip(temps, opened1):
                payload2 = swap_value(payload2, t, b)
                target2 = swap_canonical(target2, t, b)
        if output_payload(r1) != payload2:
            return False
        return X.holds(proper_target(r1), target2)
    return False
