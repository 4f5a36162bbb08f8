"""Fixed address decomposition into (rank, bankGroup, bank, row, column).

Bank bits sit at the extreme LSB, then bank-group bits, then rank bits; the
remaining used bits hold the column (low) and row (high).  Bits above the
used span do not affect the mapping.  Pure functions, no state.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import Topology


@dataclass(frozen=True)
class BankCoordinates:
    rank: int
    bankGroup: int
    bank: int
    row: int
    column: int
    flatBankId: int


def flat_bank_id(rank: int, bank_group: int, bank: int, topology: Topology) -> int:
    return (rank * topology.numBankGroups + bank_group) * topology.numBanks + bank


def map_address(address: int, topology: Topology) -> BankCoordinates:
    """Decompose an address; address must fit in topology.addressBits."""
    assert 0 <= address < (1 << topology.addressBits), hex(address)
    a = address
    bank = a & (topology.numBanks - 1)
    a >>= topology.bankBits
    bank_group = a & (topology.numBankGroups - 1)
    a >>= topology.bankGroupBits
    rank = a & (topology.numRanks - 1)
    a >>= topology.rankBits
    column = a & ((1 << topology.colBits) - 1)
    a >>= topology.colBits
    row = a & ((1 << topology.rowBits) - 1)
    return BankCoordinates(
        rank=rank,
        bankGroup=bank_group,
        bank=bank,
        row=row,
        column=column,
        flatBankId=flat_bank_id(rank, bank_group, bank, topology),
    )


def unmap(coords: BankCoordinates, topology: Topology) -> int:
    """Inverse of map_address over the used bit span."""
    if not (0 <= coords.rank < topology.numRanks):
        raise ValueError(f"rank {coords.rank} out of range")
    if not (0 <= coords.bankGroup < topology.numBankGroups):
        raise ValueError(f"bankGroup {coords.bankGroup} out of range")
    if not (0 <= coords.bank < topology.numBanks):
        raise ValueError(f"bank {coords.bank} out of range")
    if not (0 <= coords.row < (1 << topology.rowBits)):
        raise ValueError(f"row {coords.row} out of range")
    if not (0 <= coords.column < (1 << topology.colBits)):
        raise ValueError(f"column {coords.column} out of range")
    a = coords.row
    a = (a << topology.colBits) | coords.column
    a = (a << topology.rankBits) | coords.rank
    a = (a << topology.bankGroupBits) | coords.bankGroup
    a = (a << topology.bankBits) | coords.bank
    return a
