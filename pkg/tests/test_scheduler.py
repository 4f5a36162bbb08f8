import pytest

from memsim.address_map import BankCoordinates
from memsim.bank import SimulationError
from memsim.commands import (
    ACTIVATE,
    PRECHARGE,
    READ,
    REFRESH,
    SREF_ENTER,
    SREF_EXIT,
    WRITE,
    MemoryResponse,
)
from memsim.config import TimingParams
from memsim.scheduler import (
    IDLE,
    ISSUE_ACT,
    ISSUE_PRE,
    ISSUE_REF,
    ISSUE_RW,
    SREF,
    WAIT_ACT,
    WAIT_PRE,
    WAIT_REF,
    WAIT_RW,
    WAIT_SREF_ENTER,
    WAIT_SREF_EXIT,
    BankScheduler,
)
from memsim.stats import RequestRecord
from memsim.trace_io import MemoryRequest

T = TimingParams()
HOME = BankCoordinates(0, 0, 0, 0, 0, 0)


def make_sched(queue_size=8):
    return BankScheduler(0, HOME, T, queue_size)


def queue_read(sched, req_id=0, cycle=0, op=READ, data=None):
    req = MemoryRequest(req_id, 0x40, op, cycle, data)
    rec = RequestRecord(req_id, op, 0x40, cycle)
    sched.enqueue(req, HOME, rec)
    return req, rec


def ack(kind, req_id=None, cycle=0, data=None):
    return MemoryResponse(kind, 0, req_id, cycle, data)


def test_idle_with_queued_read_emits_activate():
    sched = make_sched()
    queue_read(sched)
    cmd = sched.tick(5)
    assert cmd is not None and cmd.kind == ACTIVATE
    assert cmd.intent == READ and cmd.reqId == 0
    assert sched.state == ISSUE_ACT


def test_refresh_wins_over_queued_request():
    sched = make_sched()
    queue_read(sched)
    cmd = sched.tick(3600)  # lastRefreshCycle=0, tREFI=3600
    assert cmd.kind == REFRESH and cmd.reqId is None
    assert sched.state == ISSUE_REF
    assert len(sched.local_queue) == 1  # request still waiting


def test_sref_enter_after_idle_threshold():
    sched = make_sched()
    assert sched.tick(999) is None
    cmd = sched.tick(1000)
    assert cmd.kind == SREF_ENTER
    sched.granted()
    sched.on_ack(ack(SREF_ENTER), 1010)
    assert sched.state == SREF


def test_sref_exit_on_arrival_then_resume():
    sched = make_sched()
    sched.tick(1000)
    sched.granted()
    sched.on_ack(ack(SREF_ENTER), 1008)
    queue_read(sched, cycle=1500)
    cmd = sched.tick(1500)
    assert cmd.kind == SREF_EXIT
    sched.granted()
    sched.on_ack(ack(SREF_EXIT), 1770)
    assert sched.state == IDLE
    assert sched.last_refresh_cycle == 1770  # timer restarts at exit
    nxt = sched.tick(1771)
    assert nxt.kind == ACTIVATE


def test_write_lifecycle_transitions():
    sched = make_sched()
    _, rec = queue_read(sched, op=WRITE, data=0xBEEF)
    sched.tick(0)
    sched.granted()
    assert sched.state == WAIT_ACT
    sched.on_ack(ack(ACTIVATE, req_id=0, cycle=14), 20)
    assert sched.state == ISSUE_RW
    assert sched.slot.kind == WRITE and sched.slot.data == 0xBEEF
    sched.granted()
    assert sched.state == WAIT_RW
    sched.on_ack(ack(WRITE, req_id=0, cycle=34), 40)
    assert sched.state == ISSUE_PRE and sched.slot.kind == PRECHARGE
    sched.granted()
    assert sched.state == WAIT_PRE
    done = sched.on_ack(ack(PRECHARGE, req_id=0, cycle=54), 60)
    assert done is not None
    request, record = done
    assert request.reqId == 0 and record is rec
    assert sched.state == IDLE and sched.idle_since == 60


def test_read_ack_captures_data():
    sched = make_sched()
    _, rec = queue_read(sched)
    sched.tick(0)
    sched.granted()
    sched.on_ack(ack(ACTIVATE, req_id=0), 20)
    sched.granted()
    done = sched.on_ack(ack(READ, req_id=0, cycle=34, data=0x77), 40)
    assert done is None
    assert rec.data == 0x77


def test_refresh_ack_updates_deadline():
    sched = make_sched()
    cmd = sched.tick(3600)
    assert cmd.kind == REFRESH
    sched.granted()
    assert sched.state == WAIT_REF
    sched.on_ack(ack(REFRESH), 3871)
    assert sched.state == IDLE
    assert sched.last_refresh_cycle == 3871


def test_inconsistent_ack_is_fatal():
    sched = make_sched()
    queue_read(sched)
    sched.tick(0)
    sched.granted()
    with pytest.raises(SimulationError, match="inconsistent"):
        sched.on_ack(ack(PRECHARGE, req_id=0), 10)


def test_mismatched_req_id_is_fatal():
    sched = make_sched()
    queue_read(sched, req_id=7)
    sched.tick(0)
    sched.granted()
    with pytest.raises(SimulationError, match="expected 7"):
        sched.on_ack(ack(ACTIVATE, req_id=3), 10)


def test_local_queue_capacity():
    sched = make_sched(queue_size=2)
    queue_read(sched, req_id=0)
    queue_read(sched, req_id=1)
    assert not sched.has_space()
    with pytest.raises(SimulationError, match="overflow"):
        queue_read(sched, req_id=2)


def test_no_data_commands_while_parked():
    sched = make_sched()
    sched.tick(1000)
    sched.granted()
    sched.on_ack(ack(SREF_ENTER), 1008)
    # parked with an empty queue: tick never emits data commands
    for cycle in range(1009, 1020):
        assert sched.tick(cycle) is None


def test_next_wake_reports_earlier_of_refresh_and_park():
    sched = make_sched()
    assert sched.next_wake() == 1000  # sref threshold before first refresh
    sched.idle_since = 3000
    assert sched.next_wake() == 3600  # refresh now comes first
