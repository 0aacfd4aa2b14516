"""Bit-flip accounting for rotations.

A write is modeled at word granularity: rewriting a stored address word
costs the Hamming distance between the old and the new word.  Two write
categories exist:

* pointer rewrites -- child-pointer fields (and the root slot) that now
  link a *different* node, costed as the distance between the old and
  new stored words.  These are the writes a rotation intrinsically
  performs.  Fields that merely gain or lose a child are structural and
  carry no flip cost, and fields whose child merely changed address are
  charged through the relabel category instead.
* node relabels -- every node a positional scheme re-addressed, costed
  as the Hamming distance between its old and new address: the
  propagation cost of re-addressing.

Which categories count is chosen by :class:`AccountingConfig`; the
default counts pointer rewrites only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .avl import RotationEvent


class WidthMismatchError(ValueError):
    """Hamming distance is only defined for words of equal width."""


class UndefinedMetricError(ValueError):
    """A per-rotation metric was requested but no rotation happened."""


@dataclass(frozen=True)
class AddressWord:
    """Fixed-width unsigned word."""

    value: int
    width: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(
                f"value {self.value} out of range for {self.width} bits"
            )


def bit_flips(old: int, new: int) -> int:
    """Number of differing bit positions between two word values."""
    return (old ^ new).bit_count()


def hamming(a: AddressWord, b: AddressWord) -> int:
    """Hamming distance between two equal-width words."""
    if a.width != b.width:
        raise WidthMismatchError(f"width {a.width} != {b.width}")
    return bit_flips(a.value, b.value)


# Sentinel location for the tree's root pointer slot.
ROOT_SLOT = ("root",)


@dataclass(frozen=True)
class WordWrite:
    """One recorded word rewrite; no-op writes are never recorded.

    ``location`` is (owner_node, side) for a pointer field, ROOT_SLOT
    for the root pointer, or ("label", node) for a node relabel.
    """

    location: tuple
    old: int
    new: int

    def __post_init__(self):
        if self.old == self.new:
            raise ValueError("no-op write recorded")


@dataclass
class AccountingConfig:
    count_pointer_rewrites: bool = True
    count_node_relabels: bool = False

    def __post_init__(self):
        if not (self.count_pointer_rewrites or self.count_node_relabels):
            raise ValueError("at least one write category must be counted")


@dataclass
class FlipLedger:
    """Per-trial flip and rotation counters, split by pivot level."""

    total_flips: int = 0
    total_rotations: int = 0
    flips_per_level: dict = field(default_factory=dict)
    rotations_per_level: dict = field(default_factory=dict)
    overflow_fallbacks: int = 0

    def merge(self, other: "FlipLedger") -> "FlipLedger":
        """Field-wise sum; merging trial ledgers equals running the
        concatenated event streams."""
        out = FlipLedger(
            total_flips=self.total_flips + other.total_flips,
            total_rotations=self.total_rotations + other.total_rotations,
            flips_per_level=dict(self.flips_per_level),
            rotations_per_level=dict(self.rotations_per_level),
            overflow_fallbacks=self.overflow_fallbacks + other.overflow_fallbacks,
        )
        for level, count in other.flips_per_level.items():
            out.flips_per_level[level] = out.flips_per_level.get(level, 0) + count
        for level, count in other.rotations_per_level.items():
            out.rotations_per_level[level] = (
                out.rotations_per_level.get(level, 0) + count
            )
        return out


def record_rotation(
    event: RotationEvent,
    relabels,
    pointer_rewrites,
    ledger: FlipLedger,
    acct: AccountingConfig,
) -> FlipLedger:
    """Credit one rotation's writes to its pivot level."""
    flips = 0
    if acct.count_pointer_rewrites:
        for write in pointer_rewrites:
            flips += bit_flips(write.old, write.new)
    if acct.count_node_relabels:
        for write in relabels:
            flips += bit_flips(write.old, write.new)
    level = event.pivot_level
    ledger.total_rotations += 1
    ledger.rotations_per_level[level] = ledger.rotations_per_level.get(level, 0) + 1
    if flips:
        ledger.total_flips += flips
        ledger.flips_per_level[level] = ledger.flips_per_level.get(level, 0) + flips
    return ledger


def mean_flips_per_rotation(ledger: FlipLedger) -> float:
    if ledger.total_rotations == 0:
        raise UndefinedMetricError("no rotations recorded")
    return ledger.total_flips / ledger.total_rotations
