"""Memory controller: global request queue, per-bank dispatch, command arbiter.

The request queue is one shared FIFO of capacity queueSize, held bucketed per
target bank so that several requests can dispatch in one cycle (at most one
per bank scheduler) and a request stuck behind a full scheduler queue never
blocks requests bound for other banks.  Admission from the trace is strictly
in order: a stalled head request blocks everything behind it.  Commands
emitted by the schedulers pass through a single round-robin arbiter granting
at most one command per cycle into the memory command queue (the channel's
request queue).
"""

from __future__ import annotations

from collections import deque

from .address_map import map_address
from .bank import SimulationError
from .commands import BankCommand, MemoryResponse
from .config import SimConfig
from .scheduler import BankScheduler
from .stats import RequestRecord
from .trace_io import MemoryRequest, WRITE


class Controller:
    def __init__(self, cfg: SimConfig, schedulers: list[BankScheduler],
                 trace: list[MemoryRequest]):
        self.cfg = cfg
        self.topology = cfg.topology
        self.queue_size = cfg.queueSize
        self.schedulers = schedulers
        self.trace = trace
        self.trace_idx = 0
        # reqQueue: shared capacity, bucketed per target bank
        self.req_count = 0
        self.active_buckets: dict[int, deque] = {}
        self.resp_queue: deque = deque()
        self.rr_pointer = 0
        self.records: dict[int, RequestRecord] = {}
        self.enqueued = 0
        self.dispatched = 0
        self.completed = 0
        self.issue_pending = 0   # scheduler slots waiting for a grant
        self.inflight = 0        # commands granted but not yet acked

    # -- cycle phases -------------------------------------------------------

    def frontend_tick(self, cycle: int) -> int:
        """Admit due trace requests in order until the queue fills."""
        admitted = 0
        trace = self.trace
        idx = self.trace_idx
        while idx < len(trace) and trace[idx].traceCycle <= cycle:
            if self.req_count >= self.queue_size:
                break  # head stalls; everything behind waits with it
            req = trace[idx]
            coords = map_address(req.address, self.topology)
            record = RequestRecord(req.reqId, req.op, req.address, req.traceCycle,
                                   enqueueCycle=cycle)
            if req.op == WRITE:
                record.data = req.data
            self.records[req.reqId] = record
            bucket = self.active_buckets.get(coords.flatBankId)
            if bucket is None:
                bucket = deque()
                self.active_buckets[coords.flatBankId] = bucket
            bucket.append((req, coords, record, cycle))
            self.req_count += 1
            self.enqueued += 1
            admitted += 1
            idx += 1
        self.trace_idx = idx
        return admitted

    def dispatch_tick(self, cycle: int) -> int:
        """Move queue heads with free target schedulers; one per bank per cycle."""
        moved = 0
        emptied = []
        for flat, bucket in self.active_buckets.items():
            req, coords, record, enq_cycle = bucket[0]
            if enq_cycle >= cycle:
                continue  # admitted this cycle; dispatch no earlier than next
            sched = self.schedulers[flat]
            if sched.has_space():
                bucket.popleft()
                sched.enqueue(req, coords, record)
                record.dispatchCycle = cycle
                self.req_count -= 1
                self.dispatched += 1
                moved += 1
                if not bucket:
                    emptied.append(flat)
        for flat in emptied:
            del self.active_buckets[flat]
        return moved

    def tick_schedulers(self, cycle: int) -> None:
        # Gate on the exact conditions under which tick() can emit (IDLE with
        # work or a due timer, or parked with a waiting request) so the hot
        # loop skips quiet schedulers without a call.
        trefi = self.cfg.timing.tREFI
        sref_idle = self.cfg.timing.selfRefreshIdleThreshold
        for sched in self.schedulers:
            state = sched.state
            if state == "IDLE":
                if (sched.local_queue
                        or cycle >= sched.last_refresh_cycle + trefi
                        or cycle - sched.idle_since >= sref_idle):
                    if sched.tick(cycle) is not None:
                        self.issue_pending += 1
            elif state == "SREF" and sched.local_queue:
                if sched.tick(cycle) is not None:
                    self.issue_pending += 1

    def arbitrate(self, cycle: int, command_queue) -> BankCommand | None:
        """Grant one pending scheduler command round-robin into the command queue."""
        if self.issue_pending == 0:
            return None
        n = len(self.schedulers)
        for k in range(n):
            idx = (self.rr_pointer + k) % n
            sched = self.schedulers[idx]
            if sched.slot is not None:
                if not command_queue.try_accept(sched.slot, cycle):
                    return None  # command queue full; pointer unchanged
                cmd = sched.granted()
                cmd.issueCycle = cycle
                self.rr_pointer = (idx + 1) % n
                self.issue_pending -= 1
                self.inflight += 1
                return cmd
        raise SimulationError("issue_pending desynchronized from scheduler slots")

    def broadcast(self, resp: MemoryResponse, cycle: int) -> None:
        """Deliver a response to the one scheduler whose bank and reqId match."""
        if not 0 <= resp.flatBankId < len(self.schedulers):
            raise SimulationError(f"response for unknown bank {resp.flatBankId}")
        sched = self.schedulers[resp.flatBankId]
        self.inflight -= 1
        completion = sched.on_ack(resp, cycle)
        if sched.slot is not None:
            self.issue_pending += 1
        if completion is not None:
            if len(self.resp_queue) >= self.queue_size:
                raise SimulationError("respQueue overflow")
            self.resp_queue.append(completion)

    def drain_completions(self, cycle: int) -> list[RequestRecord]:
        """Finalize completions collected in respQueue this cycle."""
        done = []
        while self.resp_queue:
            request, record = self.resp_queue.popleft()
            if record.completionCycle is not None:
                raise SimulationError(f"duplicate completion for request {request.reqId}")
            record.completionCycle = cycle
            self.completed += 1
            done.append(record)
        return done

    # -- bookkeeping --------------------------------------------------------

    @property
    def outstanding(self) -> int:
        return self.enqueued - self.completed

    @property
    def quiescent(self) -> bool:
        return self.outstanding == 0 and self.inflight == 0 and self.issue_pending == 0

    @property
    def trace_exhausted(self) -> bool:
        return self.trace_idx >= len(self.trace)
