"""Finite partitions of a state index set and their lattice operations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Blocks of state indices ``0..n_states-1``.

    Stored canonically: each block sorted, blocks ordered by their smallest
    element. Two partitions are equal iff they group the states identically.
    """

    blocks: tuple[tuple[int, ...], ...]
    n_states: int

    def __post_init__(self):
        canon = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        object.__setattr__(self, "blocks", canon)
        seen: set[int] = set()
        for b in canon:
            if not b:
                raise PartitionError("empty block")
            for s in b:
                if not 0 <= s < self.n_states:
                    raise PartitionError(f"state index {s} outside 0..{self.n_states - 1}")
                if s in seen:
                    raise PartitionError(f"state index {s} appears in more than one block")
                seen.add(s)
        if len(seen) != self.n_states:
            missing = sorted(set(range(self.n_states)) - seen)
            raise PartitionError(f"states {missing} not covered")

    @classmethod
    def trivial(cls, n_states: int) -> "Partition":
        return cls((tuple(range(n_states)),), n_states)

    @classmethod
    def discrete(cls, n_states: int) -> "Partition":
        return cls(tuple((s,) for s in range(n_states)), n_states)

    @classmethod
    def from_labels(cls, labels: Sequence) -> "Partition":
        groups: dict = {}
        for s, lab in enumerate(labels):
            groups.setdefault(lab, []).append(s)
        return cls(tuple(tuple(g) for g in groups.values()), len(labels))

    def block_of(self, s: int) -> tuple[int, ...]:
        for b in self.blocks:
            if s in b:
                return b
        raise PartitionError(f"state index {s} not in partition")

    def labels(self) -> np.ndarray:
        out = np.empty(self.n_states, dtype=int)
        for k, b in enumerate(self.blocks):
            out[list(b)] = k
        return out

    def refines(self, other: "Partition") -> bool:
        """True iff every block of ``self`` lies inside one block of ``other``."""
        lab = other.labels()
        return all(len({lab[s] for s in b}) == 1 for b in self.blocks)

    def join(self, other: "Partition") -> "Partition":
        """Coarsest common refinement (nonempty pairwise intersections)."""
        if self.n_states != other.n_states:
            raise PartitionError(
                f"cannot join partitions of {self.n_states} and {other.n_states} states"
            )
        return Partition.from_labels(list(zip(self.labels(), other.labels())))

    def __or__(self, other: "Partition") -> "Partition":
        return self.join(other)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


def join_partitions(a: Partition, b: Partition) -> Partition:
    return a.join(b)


def join_all(parts: Iterable[Partition]) -> Partition:
    parts = list(parts)
    out = parts[0]
    for p in parts[1:]:
        out = out.join(p)
    return out
