"""Offline command-log checker.

Re-verifies, from the CSV log and the config alone, every timing rule the
bank model enforces plus the closed-page grammar and refresh punctuality.
Deliberately written against the log format only -- it shares no code with
the simulator's timing path, so it serves as an independent oracle for it.

Rules (start cycles, per scope):
  bank-serialization  next start >= previous start + previous duration
  tRP                 ACTIVATE/REFRESH after PRECHARGE: gap >= tRP
  tRFC                any command after REFRESH: gap >= tRFC
  tRCDRD / tRCDWR     READ/WRITE after its ACTIVATE: gap >= tRCD*
  tRRDL               consecutive ACTIVATEs in a rank: gap >= tRRDL
  tFAW                5th ACTIVATE in a rank: >= 4-back + tFAW
  tCCDL               consecutive READs (or WRITEs) in a bank group
  tWTR                READ after WRITE in a bank group: >= write end + tWTR
  grammar             per bank: (SREF_ENTER SREF_EXIT | REFRESH |
                      ACTIVATE (READ|WRITE) PRECHARGE)*, trailing prefix
                      allowed because the horizon can cut a sequence short
  refresh-punctuality REFRESH starts never lag their due time by more than
                      one in-flight closed-page sequence plus pipeline slack
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .config import SimConfig

_ACT = "ACTIVATE"
_RD = "READ"
_WR = "WRITE"
_PRE = "PRECHARGE"
_REF = "REFRESH"
_SRE = "SREF_ENTER"
_SRX = "SREF_EXIT"
_KINDS = {_ACT, _RD, _WR, _PRE, _REF, _SRE, _SRX}

# Fixed pipeline allowances, mirroring the engine's documented conventions:
# a command spends 1 cycle between ack and re-issue, 3 hop-cycles down, and
# its response 4 cycles back up.  Arbitration and queue contention are
# bounded by round-robin fairness, at worst proportional to the bank count.
_ACK_TO_GRANT = 1
_CMD_HOPS = 3
_RESP_HOPS = 4


class CheckError(Exception):
    """Malformed command log."""


@dataclass(frozen=True)
class LogEntry:
    cycle: int
    flatBankId: int
    kind: str
    row: int | None
    reqId: int | None


@dataclass(frozen=True)
class Violation:
    rule: str
    cycle: int
    flatBankId: int
    message: str

    def __str__(self):
        return f"[{self.rule}] cycle {self.cycle} bank {self.flatBankId}: {self.message}"


def parse_command_log(path: str) -> list[LogEntry]:
    entries = []
    try:
        f = open(path, newline="")
    except OSError as e:
        raise CheckError(f"cannot read command log {path}: {e}") from e
    with f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["cycle", "flatBankId", "kind", "row", "reqId"]:
            raise CheckError(f"{path}: unexpected header {header}")
        for lineno, parts in enumerate(reader, start=2):
            if not parts:
                continue
            if len(parts) != 5:
                raise CheckError(f"{path}:{lineno}: expected 5 columns, got {len(parts)}")
            try:
                cycle = int(parts[0])
                flat = int(parts[1])
            except ValueError:
                raise CheckError(f"{path}:{lineno}: non-integer cycle or bank id") from None
            kind = parts[2]
            if kind not in _KINDS:
                raise CheckError(f"{path}:{lineno}: unknown command kind {kind!r}")
            row = int(parts[3]) if parts[3] != "" else None
            req = int(parts[4]) if parts[4] != "" else None
            entries.append(LogEntry(cycle, flat, kind, row, req))
    return entries


def _duration(kind: str, intent: str | None, t) -> int:
    if kind == _ACT:
        return t.tRCDWR if intent == _WR else t.tRCDRD
    if kind in (_RD, _WR):
        return t.tCL
    if kind == _PRE:
        return t.tRP
    if kind == _REF:
        return t.tRFC
    if kind == _SRE:
        return t.tSREFEnter
    return t.tSREFExit


def refresh_gap_bound(cfg: SimConfig) -> int:
    """Largest legal spacing between per-bank REFRESH starts.

    A due refresh may wait for one in-flight closed-page sequence (three
    commands, each paying issue + transit + service + response) plus its own
    issue path; round-robin fairness bounds every arbitration or queue wait
    by the bank count per waiting point.
    """
    t = cfg.timing
    banks = cfg.topology.totalBanks
    per_cmd_overhead = _ACK_TO_GRANT + _CMD_HOPS + _RESP_HOPS + 3 * banks
    sequence = 3 * per_cmd_overhead + max(t.tRCDRD, t.tRCDWR) + t.tCL + t.tRP
    own_issue = _ACK_TO_GRANT + _CMD_HOPS + banks
    return t.tREFI + t.tRFC + _RESP_HOPS + sequence + own_issue + 2


def check_command_log(entries: list[LogEntry], cfg: SimConfig) -> list[Violation]:
    """Return every rule violation found in the log (empty list == clean run)."""
    violations: list[Violation] = []
    t = cfg.timing
    topo = cfg.topology
    banks_per_rank = topo.numBankGroups * topo.numBanks

    by_bank: dict[int, list[LogEntry]] = {}
    for e in sorted(entries, key=lambda e: e.cycle):
        by_bank.setdefault(e.flatBankId, []).append(e)

    rank_acts: dict[int, list[int]] = {}
    group_cols: dict[int, list[LogEntry]] = {}
    for e in sorted(entries, key=lambda e: e.cycle):
        if e.kind == _ACT:
            rank_acts.setdefault(e.flatBankId // banks_per_rank, []).append(e.cycle)
        elif e.kind in (_RD, _WR):
            group_cols.setdefault(e.flatBankId // topo.numBanks, []).append(e)

    for flat, rows in by_bank.items():
        _check_bank_sequence(rows, flat, t, violations)
        _check_refresh_punctuality(rows, flat, cfg, violations)

    for rank, acts in rank_acts.items():
        for i in range(1, len(acts)):
            gap = acts[i] - acts[i - 1]
            if gap < t.tRRDL:
                violations.append(Violation(
                    "tRRDL", acts[i], rank * banks_per_rank,
                    f"rank {rank}: ACTIVATEs {gap} apart, need {t.tRRDL}"))
        for i in range(4, len(acts)):
            window = acts[i] - acts[i - 4]
            if window < t.tFAW:
                violations.append(Violation(
                    "tFAW", acts[i], rank * banks_per_rank,
                    f"rank {rank}: 5 ACTIVATEs within {window} cycles, need {t.tFAW}"))

    for group, cols in group_cols.items():
        last = {_RD: None, _WR: None}
        for e in cols:
            prev = last[e.kind]
            if prev is not None and e.cycle - prev < t.tCCDL:
                violations.append(Violation(
                    "tCCDL", e.cycle, e.flatBankId,
                    f"bank group {group}: consecutive {e.kind}s "
                    f"{e.cycle - prev} apart, need {t.tCCDL}"))
            if e.kind == _RD and last[_WR] is not None:
                write_end = last[_WR] + t.tCL
                if e.cycle < write_end + t.tWTR:
                    violations.append(Violation(
                        "tWTR", e.cycle, e.flatBankId,
                        f"bank group {group}: READ {e.cycle - write_end} cycles "
                        f"after write end, need {t.tWTR}"))
            last[e.kind] = e.cycle
        # within one group the per-bank ACT->RW spacing is rank/bank scoped;
        # nothing further to track here
    return sorted(violations, key=lambda v: (v.cycle, v.flatBankId, v.rule))


def _check_bank_sequence(rows: list[LogEntry], flat: int, t, violations) -> None:
    # pair each ACTIVATE with the following column command to know its duration
    intents: dict[int, str] = {}
    pending_act: int | None = None
    for i, e in enumerate(rows):
        if e.kind == _ACT:
            pending_act = i
        elif e.kind in (_RD, _WR) and pending_act is not None:
            intents[pending_act] = e.kind
            pending_act = None

    state = "idle"
    prev: LogEntry | None = None
    prev_dur = 0
    last_pre: int | None = None
    last_ref: int | None = None
    last_act: int | None = None
    for i, e in enumerate(rows):
        if prev is not None and e.cycle - prev.cycle < prev_dur:
            violations.append(Violation(
                "bank-serialization", e.cycle, flat,
                f"{e.kind} starts {e.cycle - prev.cycle} cycles after {prev.kind} "
                f"(service takes {prev_dur})"))
        expected = {
            "idle": (_ACT, _REF, _SRE),
            "act": (_RD, _WR),
            "rw": (_PRE,),
            "sref": (_SRX,),
        }[state]
        if e.kind not in expected:
            violations.append(Violation(
                "grammar", e.cycle, flat,
                f"{e.kind} while expecting one of {'/'.join(expected)}"))
            state = "idle"  # resynchronize to keep later checks useful
        if e.kind == _ACT:
            state = "act"
            if last_pre is not None and e.cycle - last_pre < t.tRP:
                violations.append(Violation(
                    "tRP", e.cycle, flat,
                    f"ACTIVATE {e.cycle - last_pre} cycles after PRECHARGE, need {t.tRP}"))
            last_act = e.cycle
        elif e.kind in (_RD, _WR):
            state = "rw"
            need = t.tRCDRD if e.kind == _RD else t.tRCDWR
            if last_act is not None and e.cycle - last_act < need:
                violations.append(Violation(
                    "tRCDRD" if e.kind == _RD else "tRCDWR", e.cycle, flat,
                    f"{e.kind} {e.cycle - last_act} cycles after ACTIVATE, need {need}"))
        elif e.kind == _PRE:
            state = "idle"
            last_pre = e.cycle
        elif e.kind == _REF:
            state = "idle"
            if last_pre is not None and e.cycle - last_pre < t.tRP:
                violations.append(Violation(
                    "tRP", e.cycle, flat,
                    f"REFRESH {e.cycle - last_pre} cycles after PRECHARGE, need {t.tRP}"))
            last_ref = e.cycle
        elif e.kind == _SRE:
            state = "sref"
        elif e.kind == _SRX:
            state = "idle"
        if last_ref is not None and e.cycle > last_ref and e.cycle - last_ref < t.tRFC:
            violations.append(Violation(
                "tRFC", e.cycle, flat,
                f"{e.kind} {e.cycle - last_ref} cycles after REFRESH start, need {t.tRFC}"))
        prev = e
        prev_dur = _duration(e.kind, intents.get(i), t)


def _check_refresh_punctuality(rows: list[LogEntry], flat: int, cfg: SimConfig,
                               violations) -> None:
    t = cfg.timing
    bound = refresh_gap_bound(cfg)
    anchor = 0  # the refresh timer starts at cycle 0
    for e in rows:
        if e.kind == _REF:
            if e.cycle - anchor > bound:
                violations.append(Violation(
                    "refresh-punctuality", e.cycle, flat,
                    f"REFRESH {e.cycle - anchor} cycles after timer anchor, "
                    f"bound {bound}"))
            anchor = e.cycle + t.tRFC + _RESP_HOPS
        elif e.kind == _SRX:
            # the timer is suspended while parked and restarts at exit ack
            anchor = e.cycle + t.tSREFExit + _RESP_HOPS
