"""Channel -> rank -> bank group fan-out with queued, cycle-stepped hops.

Each node keeps a request queue (bucketed per child so forwarding one command
per child per cycle never blocks commands bound elsewhere) and a response
queue fed by a round-robin arbiter over its children.  Every queue entry is
stamped with its arrival cycle and may leave only in a strictly later cycle,
so each level costs exactly one hop-cycle regardless of tick ordering.
"""

from __future__ import annotations

from collections import deque

from .bank import SimulationError
from .commands import BankCommand, MemoryResponse

LEVEL_CHANNEL = "CHANNEL"
LEVEL_RANK = "RANK"
LEVEL_BANKGROUP = "BANKGROUP"

# child index along the path, per level
_SELECTOR = {
    LEVEL_CHANNEL: lambda coords: coords.rank,
    LEVEL_RANK: lambda coords: coords.bankGroup,
    LEVEL_BANKGROUP: lambda coords: coords.bank,
}


class HierarchyNode:
    """One level of the memory hierarchy; children are nodes or bank adapters.

    Children must expose try_accept(cmd, cycle) -> bool and
    pop_response(cycle) -> MemoryResponse | None.
    """

    def __init__(self, level: str, children: list, queue_size: int):
        self.level = level
        self.children = children
        self.queue_size = queue_size
        self._select = _SELECTOR[level]
        self._buckets: list[deque] = [deque() for _ in children]
        self.request_count = 0
        self.response_queue: deque = deque()  # (response, arrivalCycle)
        self.rr_pointer = 0
        self.parent: "HierarchyNode | None" = None
        self.pending_up = 0  # responses currently held by children

    def try_accept(self, cmd: BankCommand, cycle: int) -> bool:
        """Enqueue a command heading down, if the shared request queue has space."""
        if self.request_count >= self.queue_size:
            return False
        self._buckets[self._select(cmd.coords)].append((cmd, cycle))
        self.request_count += 1
        return True

    def route_down(self, cycle: int) -> int:
        """Forward at most one queued command per child one hop downward."""
        if self.request_count == 0:
            return 0
        moved = 0
        for idx, bucket in enumerate(self._buckets):
            if not bucket:
                continue
            cmd, stamp = bucket[0]
            if stamp >= cycle:
                continue
            if self.children[idx].try_accept(cmd, cycle):
                bucket.popleft()
                self.request_count -= 1
                moved += 1
        return moved

    def arbitrate_up(self, cycle: int) -> bool:
        """Round-robin pull of one child response into this node's response queue."""
        if self.pending_up == 0 or len(self.response_queue) >= self.queue_size:
            return False
        n = len(self.children)
        for k in range(n):
            idx = (self.rr_pointer + k) % n
            resp = self.children[idx].pop_response(cycle)
            if resp is not None:
                self.response_queue.append((resp, cycle))
                self.rr_pointer = (idx + 1) % n
                self.pending_up -= 1
                if self.parent is not None:
                    self.parent.pending_up += 1
                return True
        return False

    def pop_response(self, cycle: int) -> MemoryResponse | None:
        if self.response_queue and self.response_queue[0][1] < cycle:
            return self.response_queue.popleft()[0]
        return None


def build_hierarchy(bank_adapters: list, num_ranks: int, num_bank_groups: int,
                    num_banks: int, queue_size: int) -> tuple[HierarchyNode, list[HierarchyNode]]:
    """Wire flat bank adapters into bank groups, ranks, and one channel.

    Returns (channel, all_nodes) with all_nodes ordered channel, ranks, groups
    for deterministic per-cycle iteration.
    """
    expected = num_ranks * num_bank_groups * num_banks
    if len(bank_adapters) != expected:
        raise SimulationError(f"expected {expected} banks, got {len(bank_adapters)}")
    groups = []
    ranks = []
    for r in range(num_ranks):
        rank_children = []
        for g in range(num_bank_groups):
            base = (r * num_bank_groups + g) * num_banks
            node = HierarchyNode(LEVEL_BANKGROUP, bank_adapters[base:base + num_banks], queue_size)
            for adapter in bank_adapters[base:base + num_banks]:
                adapter.parent = node
            groups.append(node)
            rank_children.append(node)
        rank_node = HierarchyNode(LEVEL_RANK, rank_children, queue_size)
        for child in rank_children:
            child.parent = rank_node
        ranks.append(rank_node)
    channel = HierarchyNode(LEVEL_CHANNEL, ranks, queue_size)
    for rank_node in ranks:
        rank_node.parent = channel
    return channel, [channel] + ranks + groups
