"""Top-level simulation: wires controller, schedulers, hierarchy, and banks,
and advances them on one logical clock.

Phase order within a cycle: frontend admission, dispatch, scheduler ticks,
command arbitration, hierarchy (bank completions, responses up, requests
down), response broadcast, completion.  All queue hops take one full cycle;
a scheduler command emitted this cycle may win the arbiter this cycle.  For
an uncontended request that makes the end-to-end latency

    1 (dispatch) + 3x(grant+hops: 4) + tRCD + tCL + tRP + 3x(response: 4)
    = 24 + tRCD + tCL + tRP cycles.

Runs are fully deterministic: one (trace, config) pair always produces the
same records and command log.
"""

from __future__ import annotations

from dataclasses import dataclass

from .address_map import BankCoordinates, flat_bank_id
from .bank import BankGroupTiming, DataStore, DramBank, RankTiming, SimulationError
from .commands import ACTIVATE, MAINTENANCE_KINDS, PRECHARGE, READ, WRITE, BankCommand
from .config import SimConfig
from .controller import Controller
from .hierarchy import build_hierarchy
from .scheduler import BankScheduler
from .stats import RequestRecord, RunSummary, summarize
from .trace_io import MemoryRequest


@dataclass
class LogRow:
    cycle: int
    flatBankId: int
    kind: str
    row: int | None
    reqId: int | None


@dataclass
class SimResult:
    records: list[RequestRecord]
    command_log: list[LogRow]
    summary: RunSummary
    cycles_simulated: int
    drained: bool
    store: dict[int, int]


class BankAdapter:
    """Hierarchy-facing wrapper: commands arriving here are held by the bank
    until the timing state lets them start."""

    def __init__(self, bank: DramBank, sim: "Simulation"):
        self.bank = bank
        self.sim = sim
        self.parent = None  # owning bank-group node, set during hierarchy build
        self.next_eligible = 0

    def try_accept(self, cmd: BankCommand, cycle: int) -> bool:
        self.bank.receive(cmd, cycle)
        if not self.try_start(cycle):
            self.sim.waiting[self.bank.flat_id] = self
        return True

    def try_start(self, cycle: int) -> bool:
        bank = self.bank
        bound = bank.start_bound(cycle)
        if bound > cycle:
            self.next_eligible = bound
            return False
        cmd = bank.pending
        bank.pending = None
        completion = bank.service(cmd, cycle)
        kind = cmd.kind
        row = None if kind in MAINTENANCE_KINDS else cmd.coords.row
        self.sim.command_log.append(LogRow(cycle, bank.flat_id, kind, row, cmd.reqId))
        if cmd.reqId is not None:
            record = self.sim.controller.records[cmd.reqId]
            if kind == ACTIVATE:
                record.activateStart = cycle
                record.activateAck = completion
            elif kind in (READ, WRITE):
                record.rwStart = cycle
                record.rwAck = completion
            elif kind == PRECHARGE:
                record.prechargeAck = completion
        self.sim.calendar.setdefault(completion, []).append(self)
        return True

    def complete(self, cycle: int) -> None:
        cmd = self.bank.in_service
        self.bank.complete(cycle, cmd.address)
        self.parent.pending_up += 1

    def pop_response(self, cycle: int):
        return self.bank.pop_response(cycle)


class Simulation:
    def __init__(self, cfg: SimConfig, trace: list[MemoryRequest]):
        self.cfg = cfg
        topo = cfg.topology
        timing = cfg.timing
        self.store = DataStore()
        self.calendar: dict[int, list[BankAdapter]] = {}
        self.waiting: dict[int, BankAdapter] = {}  # held commands, arrival order
        self.command_log: list[LogRow] = []

        rank_timings = [RankTiming(timing) for _ in range(topo.numRanks)]
        group_timings = [BankGroupTiming(timing)
                         for _ in range(topo.numRanks * topo.numBankGroups)]
        adapters = []
        schedulers = []
        for rank in range(topo.numRanks):
            for group in range(topo.numBankGroups):
                for bank in range(topo.numBanks):
                    flat = flat_bank_id(rank, group, bank, topo)
                    home = BankCoordinates(rank, group, bank, 0, 0, flat)
                    dram = DramBank(flat, timing, rank_timings[rank],
                                    group_timings[rank * topo.numBankGroups + group],
                                    self.store)
                    adapters.append(BankAdapter(dram, self))
                    schedulers.append(BankScheduler(flat, home, timing, cfg.queueSize))
        self.banks = [a.bank for a in adapters]
        self.schedulers = schedulers
        self.channel, self.nodes = build_hierarchy(
            adapters, topo.numRanks, topo.numBankGroups, topo.numBanks, cfg.queueSize)
        self.controller = Controller(cfg, schedulers, trace)
        self.cycles_simulated = 0
        self.drained = False

    def step(self, cycle: int) -> None:
        ctrl = self.controller
        ctrl.frontend_tick(cycle)
        ctrl.dispatch_tick(cycle)
        ctrl.tick_schedulers(cycle)
        ctrl.arbitrate(cycle, self.channel)
        if self.waiting:
            # one pass in arrival order: a start recorded here defers the rest
            for flat in list(self.waiting):
                if self.waiting[flat].try_start(cycle):
                    del self.waiting[flat]
        completions = self.calendar.pop(cycle, None)
        if completions is not None:
            for adapter in completions:
                adapter.complete(cycle)
        for node in self.nodes:
            node.arbitrate_up(cycle)
        for node in self.nodes:
            node.route_down(cycle)
        resp = self.channel.pop_response(cycle)
        if resp is not None:
            ctrl.broadcast(resp, cycle)
        ctrl.drain_completions(cycle)

    def _next_wake(self, cycle: int) -> int:
        """Earliest future event while fully quiescent (arrival, refresh, or park)."""
        ctrl = self.controller
        nxt = self.cfg.maxCycles
        if not ctrl.trace_exhausted:
            nxt = min(nxt, ctrl.trace[ctrl.trace_idx].traceCycle)
        for sched in self.schedulers:
            wake = sched.next_wake()
            if wake is not None and wake < nxt:
                nxt = wake
        return nxt

    def run(self) -> SimResult:
        horizon = self.cfg.maxCycles
        ctrl = self.controller
        cycle = 0
        last_executed = -1
        while cycle < horizon:
            if ctrl.quiescent:
                if ctrl.trace_exhausted:
                    break  # drained: nothing queued, nothing in flight
                nxt = self._next_wake(cycle)
                if nxt > cycle:
                    cycle = nxt
                    if cycle >= horizon:
                        break
            self.step(cycle)
            last_executed = cycle
            cycle += 1
        self.drained = ctrl.trace_exhausted and ctrl.quiescent
        self.cycles_simulated = min(max(last_executed + 1, cycle), horizon)
        if ctrl.completed != ctrl.dispatched and self.drained:
            raise SimulationError("conservation violated after drain")
        return SimResult(
            records=self.result_records(),
            command_log=self.sorted_command_log(),
            summary=summarize(self.controller.records.values(),
                              self.cfg.statsWindow,
                              requests_enqueued=ctrl.enqueued,
                              cycles_simulated=self.cycles_simulated),
            cycles_simulated=self.cycles_simulated,
            drained=self.drained,
            store=self.store.snapshot(),
        )

    def result_records(self) -> list[RequestRecord]:
        return sorted(self.controller.records.values(), key=lambda r: r.reqId)

    def sorted_command_log(self) -> list[LogRow]:
        horizon = self.cfg.maxCycles
        rows = [r for r in self.command_log if r.cycle < horizon]
        rows.sort(key=lambda r: r.cycle)  # stable: same-cycle rows keep issue order
        return rows


def run_simulation(cfg: SimConfig, trace: list[MemoryRequest]) -> SimResult:
    return Simulation(cfg, trace).run()


def write_command_log(rows: list[LogRow], path: str) -> None:
    import csv

    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["cycle", "flatBankId", "kind", "row", "reqId"])
        for r in rows:
            w.writerow([r.cycle, r.flatBankId, r.kind,
                        "" if r.row is None else r.row,
                        "" if r.reqId is None else r.reqId])
