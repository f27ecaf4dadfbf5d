"""Classic two-phase quorum register (single-writer form), used as the
correctness cross-check and efficiency baseline.

A write is one broadcast/ack round trip.  A read queries all processes,
takes the pair with the largest sequence number from a quorum of replies,
unconditionally writes that pair back, and returns after a quorum of acks.
Every phase gets a fresh per-process phase id (opsn) so stale replies are
discarded.  Process 1 is the writer.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .messages import AbdAck, AbdQuery, AbdReport, AbdUpdate, Message
from .teff import BROADCAST, WRITER, HandlerOutput as _HandlerOutput, OpResult, ProtocolError

PHASE_WRITE = "write"
PHASE_QUERY = "query"
PHASE_WRITE_BACK = "write_back"


@dataclass(frozen=True)
class AbdPending:
    phase: str
    opsn: int
    responders: frozenset[int]
    best_wsn: int
    best_value: bytes | None


@dataclass
class AbdReplicaState:
    me: int
    n: int
    t: int
    reg: bytes | None = None
    wsn: int = 0
    opsn: int = 0
    pending: AbdPending | None = None

    @property
    def quorum(self) -> int:
        return self.n - self.t

    def clone(self) -> "AbdReplicaState":
        new = object.__new__(AbdReplicaState)
        new.__dict__.update(self.__dict__)
        new.__dict__.pop("_snap_id", None)  # cached snapshot of the old state
        return new

    def freeze(self) -> tuple:
        return (self.reg, self.wsn, self.opsn, self.pending)


# HandlerOutput is shared with the register protocol module; the state slot
# simply holds an AbdReplicaState here.
HandlerOutput = _HandlerOutput


def abd_init(me: int, n: int, t: int, initial: bytes | None = None) -> AbdReplicaState:
    if n < 1:
        raise ProtocolError(f"n must be positive, got {n}")
    if 2 * t >= n:
        raise ProtocolError(f"need 2t < n, got n={n} t={t}")
    if not 1 <= me <= n:
        raise ProtocolError(f"process id {me} outside 1..{n}")
    return AbdReplicaState(me=me, n=n, t=t, reg=initial)


def abd_begin_write(state: AbdReplicaState, value: bytes) -> HandlerOutput:
    if state.me != WRITER:
        raise ProtocolError(f"p{state.me} is not the writer")
    if state.pending is not None:
        raise ProtocolError("operation already pending (processes are sequential)")
    if value is None:
        raise ProtocolError("cannot write the reserved initial value")
    st = state.clone()
    st.opsn += 1
    st.wsn += 1
    st.reg = value
    st.pending = AbdPending(PHASE_WRITE, st.opsn, frozenset(), st.wsn, value)
    return HandlerOutput(st, ((BROADCAST, AbdUpdate(st.opsn, st.wsn, value)),))


def abd_begin_read(state: AbdReplicaState) -> HandlerOutput:
    if state.pending is not None:
        raise ProtocolError("operation already pending (processes are sequential)")
    st = state.clone()
    st.opsn += 1
    st.pending = AbdPending(PHASE_QUERY, st.opsn, frozenset(), 0, None)
    return HandlerOutput(st, ((BROADCAST, AbdQuery(st.opsn)),))


def abd_on_message(state: AbdReplicaState, msg: Message, sender: int) -> HandlerOutput:
    st = state.clone()
    if isinstance(msg, AbdUpdate):
        if msg.wsn > st.wsn:
            st.wsn = msg.wsn
            st.reg = msg.value
        return HandlerOutput(st, ((sender, AbdAck(msg.opsn)),))
    if isinstance(msg, AbdQuery):
        return HandlerOutput(st, ((sender, AbdReport(msg.opsn, st.wsn, st.reg)),))
    if isinstance(msg, AbdAck):
        return _client_ack(st, msg, sender)
    if isinstance(msg, AbdReport):
        return _client_report(st, msg, sender)
    raise ProtocolError(f"not an ABD message: {msg!r}")


def _client_ack(st: AbdReplicaState, msg: AbdAck, sender: int) -> HandlerOutput:
    pd = st.pending
    if pd is None or pd.opsn != msg.opsn:
        return HandlerOutput(st)  # stale phase, discard
    if pd.phase not in (PHASE_WRITE, PHASE_WRITE_BACK):
        return HandlerOutput(st)
    responders = pd.responders | {sender}
    if len(responders) < st.quorum:
        st.pending = replace(pd, responders=responders)
        return HandlerOutput(st)
    st.pending = None
    if pd.phase == PHASE_WRITE:
        return HandlerOutput(st, completion=OpResult("write", None, pd.best_wsn))
    return HandlerOutput(
        st, completion=OpResult("read", pd.best_value, pd.best_wsn)
    )


def _client_report(st: AbdReplicaState, msg: AbdReport, sender: int) -> HandlerOutput:
    pd = st.pending
    if pd is None or pd.opsn != msg.opsn or pd.phase != PHASE_QUERY:
        return HandlerOutput(st)
    responders = pd.responders | {sender}
    best_wsn, best_value = pd.best_wsn, pd.best_value
    if msg.wsn > best_wsn:
        best_wsn, best_value = msg.wsn, msg.value
    if len(responders) < st.quorum:
        st.pending = replace(
            pd, responders=responders, best_wsn=best_wsn, best_value=best_value
        )
        return HandlerOutput(st)
    # Quorum of reports: write the freshest pair back, even if all replies
    # agree, then wait for acks.
    st.opsn += 1
    st.pending = AbdPending(
        PHASE_WRITE_BACK, st.opsn, frozenset(), best_wsn, best_value
    )
    return HandlerOutput(st, ((BROADCAST, AbdUpdate(st.opsn, best_wsn, best_value)),))
