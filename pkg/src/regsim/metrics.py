"""Read classification, timing-bound checks, and message accounting.

Under bounded delay, a read starting at tick r falls into one of three
classes:

* wlf ("write-latency-free"): not concurrent with any write, and the
  closest write started before it did not crash and began more than Delta
  ticks earlier.  Bound: one round trip, 2*Delta.
* interfering_no_crash: a write interferes (concurrent, or started within
  the last Delta ticks) but the writer survives it.  Bound: 3*Delta.
* interfering_writer_crash: the writer crashes during an interfering or
  concurrent write.  Bound: 4*Delta for the modified register variant; the
  base variant makes no claim here (a read can chase a value only its dead
  writer held), which is the reason the modified variant exists.

A write that never responds counts as concurrent with everything after its
invoke, so reads that merely follow a crashed write land in the crash class;
the bound is an upper bound, such reads typically finish in 2*Delta.

Under round synchrony the classes collapse to writer-crash-concurrent or
not; writes take exactly two rounds, unaffected reads exactly two, and a
read overlapping a crashing write at most three.  ABD: writes within (or,
in rounds, exactly) one round trip, reads two round trips regardless of
concurrency.  Async runs get no bounds; reports are informational.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import ScenarioConfig
from .history import History, OpRecord, extract_history
from .messages import AbdAck, AbdQuery, AbdReport, AbdUpdate, Read, State, Write
from .trace import SEND, TraceEvent

WLF = "wlf"
INTERFERING = "interfering_no_crash"
INTERFERING_CRASH = "interfering_writer_crash"
ROUND_NO_CRASH = "no_writer_crash"
ROUND_CRASH = "writer_crash_concurrent"

LE = "le"
EQ = "eq"


@dataclass
class OpBound:
    op_id: int
    process: int
    kind: str
    read_class: str | None
    duration: int | None  # None: never responded
    bound_kind: str | None  # "le" | "eq" | None when no claim applies
    bound: int | None
    within: bool | None
    messages: int = 0


@dataclass
class BoundReport:
    algorithm: str
    model: str
    informational: bool
    entries: list[OpBound] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def max_duration(self, kind: str, read_class: str | None = None) -> int | None:
        durations = [
            e.duration
            for e in self.entries
            if e.kind == kind
            and (read_class is None or e.read_class == read_class)
            and e.duration is not None
        ]
        return max(durations) if durations else None

    def as_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "model": self.model,
            "informational": self.informational,
            "ok": self.ok,
            "entries": [
                {
                    "op": e.op_id,
                    "p": e.process,
                    "kind": e.kind,
                    "class": e.read_class,
                    "duration": e.duration,
                    "bound": None
                    if e.bound is None
                    else {"kind": e.bound_kind, "ticks": e.bound},
                    "within": e.within,
                    "messages": e.messages,
                }
                for e in self.entries
            ],
            "violations": list(self.violations),
        }


def _concurrent(w: OpRecord, r: OpRecord) -> bool:
    # A pending write extends to infinity.  Equal-tick boundaries count as
    # overlap: precedence requires strictly earlier response.
    w_end = w.respond if w.respond is not None else None
    r_end = r.respond if r.respond is not None else None
    if w_end is not None and w_end < r.invoke:
        return False
    if r_end is not None and r_end < w.invoke:
        return False
    return True


def _crashed_during(history: History, w: OpRecord) -> bool:
    crash = history.crashed.get(w.process)
    if crash is None:
        return False
    if w.respond is not None:
        return w.invoke <= crash <= w.respond
    return crash >= w.invoke


def classify_read(history: History, read_op: OpRecord, delta: int) -> str:
    """Bounded-delay classification of one read."""
    writes = history.writes()
    concurrent = [w for w in writes if _concurrent(w, read_op)]
    preceding = [w for w in writes if w.invoke < read_op.invoke and not _concurrent(w, read_op)]
    closest = max(preceding, key=lambda w: w.invoke) if preceding else None

    if not concurrent:
        if closest is None:
            return WLF
        if not _crashed_during(history, closest) and closest.invoke < read_op.invoke - delta:
            return WLF
        if _crashed_during(history, closest):
            return INTERFERING_CRASH
        return INTERFERING
    if any(_crashed_during(history, w) for w in concurrent):
        return INTERFERING_CRASH
    return INTERFERING


def classify_read_round(history: History, read_op: OpRecord) -> str:
    """Round-synchrony classification: did a writer crash overlap the read."""
    for w in history.writes():
        if _concurrent(w, read_op) and _crashed_during(history, w):
            return ROUND_CRASH
    return ROUND_NO_CRASH


def bound_for(
    algorithm: str, model: str, op_kind: str, read_class: str | None, unit: int
) -> tuple[str, int] | None:
    """The claimed duration bound for one (algorithm, model, class) cell.
    None means no claim (informational)."""
    if model == "async":
        return None
    if model == "bounded_delay":
        if op_kind == "write":
            return (LE, 2 * unit)
        if algorithm == "abd":
            return (LE, 4 * unit)
        if read_class == WLF:
            return (LE, 2 * unit)
        if read_class == INTERFERING:
            return (LE, 3 * unit)
        # interfering_writer_crash
        if algorithm == "teff-modified":
            return (LE, 4 * unit)
        return None  # base variant: unbounded here by design
    if model == "round_sync":
        if op_kind == "write":
            return (EQ, 2 * unit)
        if algorithm == "abd":
            return (EQ, 4 * unit)
        if read_class == ROUND_CRASH:
            return (LE, 3 * unit)
        return (EQ, 2 * unit)
    raise ValueError(f"unknown model {model!r}")


def assert_bounds(trace: list[TraceEvent], config: ScenarioConfig) -> BoundReport:
    """Check every operation's measured duration against the bound table and
    attach per-operation message counts."""
    history = extract_history(trace, config.n)
    model = config.network.kind
    unit = config.network.delta
    counts = count_messages(trace, history)
    report = BoundReport(
        algorithm=config.algorithm, model=model, informational=model == "async"
    )
    for op in history.ops:
        read_class = None
        if op.kind == "read":
            if model == "round_sync":
                read_class = classify_read_round(history, op)
            elif model == "bounded_delay":
                read_class = classify_read(history, op, unit)
            else:
                read_class = classify_read(history, op, config.network.dmax)
        duration = None if op.pending else op.respond - op.invoke
        claim = bound_for(config.algorithm, model, op.kind, read_class, unit)
        within: bool | None
        if claim is None:
            within = None
        elif op.pending:
            # A crashed process is excused from finishing; a correct one is
            # a liveness violation and exceeds every bound.
            if op.process in history.crashed:
                within = None
            else:
                within = False
        else:
            kind, ticks = claim
            within = duration <= ticks if kind == LE else duration == ticks
        entry = OpBound(
            op_id=op.op_id,
            process=op.process,
            kind=op.kind,
            read_class=read_class,
            duration=duration,
            bound_kind=claim[0] if claim else None,
            bound=claim[1] if claim else None,
            within=within,
            messages=counts.get(op.op_id, 0),
        )
        report.entries.append(entry)
        if within is False:
            shown = "pending" if duration is None else f"{duration} ticks"
            report.violations.append(
                f"op {op.op_id} ({op.kind}"
                + (f", {read_class}" if read_class else "")
                + f") took {shown}, bound {claim[0]} {claim[1]}"
            )
    return report


def count_messages(trace: list[TraceEvent], history: History) -> dict[int, int]:
    """Attribute every point-to-point send to an operation.

    WRITE(s) traffic belongs to the write that produced sequence number s,
    wherever it was relayed from.  READ(rsn)/STATE(rsn) traffic belongs to
    the read that issued rsn at that reader.  ABD messages carry a phase id;
    both phases of a read charge the read.
    """
    wsn_to_op = {w.seqno: w.op_id for w in history.writes()}
    intervals: dict[int, list[OpRecord]] = {}
    for op in history.ops:
        intervals.setdefault(op.process, []).append(op)

    def op_at(process: int, time: int) -> int | None:
        best = None
        for op in intervals.get(process, []):
            if op.invoke <= time and (op.respond is None or time <= op.respond):
                if best is None or op.invoke > best.invoke:
                    best = op
        return best.op_id if best is not None else None

    read_key_to_op: dict[tuple[int, int], int] = {}
    abd_key_to_op: dict[tuple[int, int], int] = {}
    for ev in trace:
        if ev.kind != SEND:
            continue
        msg = ev.message
        if isinstance(msg, Read):
            key = (ev.process, msg.rsn)
            if key not in read_key_to_op:
                owner = op_at(ev.process, ev.time)
                if owner is not None:
                    read_key_to_op[key] = owner
        elif isinstance(msg, (AbdUpdate, AbdQuery)):
            key = (ev.process, msg.opsn)
            if key not in abd_key_to_op:
                owner = op_at(ev.process, ev.time)
                if owner is not None:
                    abd_key_to_op[key] = owner

    counts: dict[int, int] = {}

    def charge(op_id: int | None) -> None:
        if op_id is not None:
            counts[op_id] = counts.get(op_id, 0) + 1

    for ev in trace:
        if ev.kind != SEND:
            continue
        msg = ev.message
        if isinstance(msg, Write):
            charge(wsn_to_op.get(msg.wsn))
        elif isinstance(msg, Read):
            charge(read_key_to_op.get((ev.process, msg.rsn)))
        elif isinstance(msg, State):
            charge(read_key_to_op.get((ev.peer, msg.rsn)))
        elif isinstance(msg, (AbdUpdate, AbdQuery)):
            charge(abd_key_to_op.get((ev.process, msg.opsn)))
        elif isinstance(msg, (AbdAck, AbdReport)):
            charge(abd_key_to_op.get((ev.peer, msg.opsn)))
    return counts


def slow_read_processes(report: BoundReport, threshold: int) -> dict[int, int]:
    """How many reads per process exceeded `threshold` ticks.  With a single
    writer crash in a run, no process should appear here more than once."""
    per_process: dict[int, int] = {}
    for entry in report.entries:
        if entry.kind != "read" or entry.duration is None:
            continue
        if entry.duration > threshold:
            per_process[entry.process] = per_process.get(entry.process, 0) + 1
    return per_process
