"""Command and response tokens exchanged between schedulers and banks."""

from __future__ import annotations

from dataclasses import dataclass

from .address_map import BankCoordinates

ACTIVATE = "ACTIVATE"
READ = "READ"
WRITE = "WRITE"
PRECHARGE = "PRECHARGE"
REFRESH = "REFRESH"
SREF_ENTER = "SREF_ENTER"
SREF_EXIT = "SREF_EXIT"

# Commands a scheduler originates on its own, outside any request lifecycle.
MAINTENANCE_KINDS = (REFRESH, SREF_ENTER, SREF_EXIT)


@dataclass
class BankCommand:
    kind: str
    coords: BankCoordinates
    reqId: int | None = None      # absent for REFRESH / SREF kinds
    data: int | None = None       # WRITE payload
    intent: str | None = None     # READ/WRITE intent of an ACTIVATE
    address: int | None = None    # full request address (READ/WRITE data access)
    issueCycle: int | None = None  # cycle the command entered the command queue


@dataclass
class MemoryResponse:
    kind: str
    flatBankId: int
    reqId: int | None
    completionCycle: int          # cycle the bank finished servicing the command
    data: int | None = None      # READ ack payload
