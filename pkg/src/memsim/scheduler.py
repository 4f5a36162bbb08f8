"""Per-bank closed-page scheduler FSM.

Every data access is bracketed: ACTIVATE -> READ/WRITE -> PRECHARGE, driven by
acks coming back from the bank.  Refresh has priority over starting a new
request once due (an in-flight sequence finishes first, a queued request never
jumps ahead).  An idle bank with an empty queue parks itself in self refresh
after the configured idle threshold and exits as soon as a request arrives.

ISSUE_* states hold an emitted command in the output slot until the
round-robin arbiter grants it; WAIT_* states have exactly one command in
flight toward the bank.  REFRESH and SREF commands bypass the local queue.
"""

from __future__ import annotations

from collections import deque

from .address_map import BankCoordinates
from .commands import (
    ACTIVATE,
    PRECHARGE,
    READ,
    REFRESH,
    SREF_ENTER,
    SREF_EXIT,
    WRITE,
    BankCommand,
    MemoryResponse,
)
from .bank import SimulationError
from .config import TimingParams
from .trace_io import MemoryRequest

IDLE = "IDLE"
ISSUE_ACT = "ISSUE_ACT"
WAIT_ACT = "WAIT_ACT"
ISSUE_RW = "ISSUE_RW"
WAIT_RW = "WAIT_RW"
ISSUE_PRE = "ISSUE_PRE"
WAIT_PRE = "WAIT_PRE"
ISSUE_REF = "ISSUE_REF"
WAIT_REF = "WAIT_REF"
ISSUE_SREF_ENTER = "ISSUE_SREF_ENTER"
WAIT_SREF_ENTER = "WAIT_SREF_ENTER"
SREF = "SREF"
ISSUE_SREF_EXIT = "ISSUE_SREF_EXIT"
WAIT_SREF_EXIT = "WAIT_SREF_EXIT"

_ISSUE_TO_WAIT = {
    ISSUE_ACT: WAIT_ACT,
    ISSUE_RW: WAIT_RW,
    ISSUE_PRE: WAIT_PRE,
    ISSUE_REF: WAIT_REF,
    ISSUE_SREF_ENTER: WAIT_SREF_ENTER,
    ISSUE_SREF_EXIT: WAIT_SREF_EXIT,
}


class BankScheduler:
    def __init__(self, flat_id: int, home: BankCoordinates, timing: TimingParams,
                 queue_size: int):
        self.flat_id = flat_id
        self.home = home  # rank/bankGroup/bank indices; row/column unused here
        self.timing = timing
        self.queue_size = queue_size
        self.state = IDLE
        self.slot: BankCommand | None = None  # command awaiting an arbiter grant
        self.local_queue: deque = deque()     # (request, coords, record)
        self.current: tuple | None = None     # in-flight (request, coords, record)
        self.last_refresh_cycle = 0
        self.idle_since = 0

    def has_space(self) -> bool:
        return len(self.local_queue) < self.queue_size

    def enqueue(self, request: MemoryRequest, coords: BankCoordinates, record) -> None:
        if not self.has_space():
            raise SimulationError(f"scheduler {self.flat_id}: local queue overflow")
        self.local_queue.append((request, coords, record))

    def refresh_due(self, cycle: int) -> bool:
        return cycle >= self.last_refresh_cycle + self.timing.tREFI

    def next_wake(self) -> int | None:
        """Earliest future cycle a tick could act without external input.

        Only meaningful in quiescent states (IDLE with empty queue, or parked
        in SREF); used by the engine to fast-forward idle stretches.
        """
        if self.state == IDLE and not self.local_queue:
            return min(self.last_refresh_cycle + self.timing.tREFI,
                       self.idle_since + self.timing.selfRefreshIdleThreshold)
        if self.state == SREF and not self.local_queue:
            return None
        return None

    def tick(self, cycle: int) -> BankCommand | None:
        """Issue priority: due refresh, then queued request, then self-refresh entry."""
        state = self.state
        if state == IDLE:
            if self.refresh_due(cycle):
                cmd = BankCommand(REFRESH, self.home)
                self.state = ISSUE_REF
            elif self.local_queue:
                request, coords, record = self.local_queue.popleft()
                self.current = (request, coords, record)
                cmd = BankCommand(ACTIVATE, coords, reqId=request.reqId, intent=request.op)
                self.state = ISSUE_ACT
            elif cycle - self.idle_since >= self.timing.selfRefreshIdleThreshold:
                cmd = BankCommand(SREF_ENTER, self.home)
                self.state = ISSUE_SREF_ENTER
            else:
                return None
            self.slot = cmd
            return cmd
        if state == SREF and self.local_queue:
            cmd = BankCommand(SREF_EXIT, self.home)
            self.state = ISSUE_SREF_EXIT
            self.slot = cmd
            return cmd
        return None

    def granted(self) -> BankCommand:
        """Arbiter accepted the slot command; it is now in flight."""
        cmd = self.slot
        if cmd is None or self.state not in _ISSUE_TO_WAIT:
            raise SimulationError(f"scheduler {self.flat_id}: grant without pending command")
        self.slot = None
        self.state = _ISSUE_TO_WAIT[self.state]
        return cmd

    def on_ack(self, resp: MemoryResponse, cycle: int):
        """Advance the FSM on a broadcast ack.

        Returns the completed (request, record) pair when a PRECHARGE-ack
        finishes a request's closed-page sequence, else None.
        """
        state = self.state
        kind = resp.kind
        if state == WAIT_ACT and kind == ACTIVATE:
            request, coords, record = self.current
            if resp.reqId != request.reqId:
                raise SimulationError(
                    f"scheduler {self.flat_id}: ACTIVATE-ack for req {resp.reqId}, "
                    f"expected {request.reqId}"
                )
            cmd = BankCommand(request.op, coords, reqId=request.reqId,
                              data=request.data if request.op == WRITE else None,
                              address=request.address)
            self.slot = cmd
            self.state = ISSUE_RW
            return None
        if state == WAIT_RW and kind in (READ, WRITE):
            request, coords, record = self.current
            if resp.reqId != request.reqId:
                raise SimulationError(
                    f"scheduler {self.flat_id}: {kind}-ack for req {resp.reqId}, "
                    f"expected {request.reqId}"
                )
            if kind == READ:
                record.data = resp.data
            self.slot = BankCommand(PRECHARGE, coords, reqId=request.reqId)
            self.state = ISSUE_PRE
            return None
        if state == WAIT_PRE and kind == PRECHARGE:
            request, coords, record = self.current
            self.current = None
            self.state = IDLE
            self.idle_since = cycle
            return (request, record)
        if state == WAIT_REF and kind == REFRESH:
            self.last_refresh_cycle = cycle
            self.state = IDLE
            self.idle_since = cycle
            return None
        if state == WAIT_SREF_ENTER and kind == SREF_ENTER:
            self.state = SREF
            return None
        if state == WAIT_SREF_EXIT and kind == SREF_EXIT:
            self.state = IDLE
            self.idle_since = cycle
            self.last_refresh_cycle = cycle  # timer was suspended while parked
            return None
        raise SimulationError(
            f"scheduler {self.flat_id}: {kind}-ack inconsistent with state {state}"
        )
