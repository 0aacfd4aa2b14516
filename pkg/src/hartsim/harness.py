"""Seeded experiment harness.

A trial inserts a shuffled key permutation into a fresh tree; every
insertion assigns an address under the configured scheme, and every
rotation re-addresses moved nodes and records the resulting bit flips.
Wall time is accumulated over the addressing-side work only (address
computation, conflict resolution, re-assignment, flip accounting); pure
tree insertion is excluded, so scheme timings stay comparable.

Trials are independent and reproducible: all randomness derives from
(base_seed, width, scheme, trial index), and the key permutation for a
given (base_seed, width, trial) is shared by every scheme so scheme
comparisons are paired.
"""

from __future__ import annotations

import hashlib
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from time import perf_counter
from typing import Optional

from .accounting import (
    ROOT_SLOT,
    AccountingConfig,
    FlipLedger,
    WordWrite,
    record_rotation,
)
from .addressing import AddressAssigner, SchemeConfig, SchemeKind, Threshold
from .avl import LEFT, RIGHT, AvlTree

INCREMENTAL = "incremental"
FULL_PASS = "full-pass"
REASSIGN_MODES = (INCREMENTAL, FULL_PASS)

# How rotation statistics count an LR/RL double: "per-case" books one
# rotation at the unbalanced node's level (both halves' flips credited
# there); "decomposed" books each half at its own pivot level.  The
# event stream itself is always decomposed.
PER_CASE = "per-case"
DECOMPOSED = "decomposed"
ROTATION_COUNTINGS = (PER_CASE, DECOMPOSED)

DEFAULT_TRIALS = 100
DEFAULT_RATIOS = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
_DOUBLE_KINDS = ("LR", "RL")


def nodes_for_width(width: int) -> int:
    """Node count paired with a pointer width: 2**(width-2) - 1."""
    if width < 3:
        raise ValueError("width must be at least 3")
    return (1 << (width - 2)) - 1


def _derive(*parts) -> int:
    digest = hashlib.sha256("|".join(map(str, parts)).encode()).hexdigest()
    return int(digest[:16], 16)


def dataset_seed(base_seed: int, width: int, trial: int) -> int:
    """Key-permutation seed; deliberately scheme-independent."""
    return _derive("dataset", base_seed, width, trial)


def scheme_seed(base_seed: int, width: int, tag: str, ratio, trial: int) -> int:
    return _derive("scheme", base_seed, width, tag, ratio, trial)


def gen_dataset(n: int, seed: int) -> list:
    """Uniform permutation of 0..n-1 via a seeded swap shuffle."""
    if n < 1:
        raise ValueError("n must be >= 1")
    items = list(range(n))
    rng = random.Random(seed)
    for i in range(n - 1, 0, -1):
        j = rng.randrange(i + 1)
        items[i], items[j] = items[j], items[i]
    return items


def balanced_insertion_order(n: int) -> list:
    """Keys 0..n-1 ordered so plain insertion builds a balanced tree
    with no rotations (breadth-first midpoint splitting)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    order = []
    queue = [(0, n)]
    head = 0
    while head < len(queue):
        lo, hi = queue[head]
        head += 1
        if lo >= hi:
            continue
        mid = (lo + hi) // 2
        order.append(mid)
        queue.append((lo, mid))
        queue.append((mid + 1, hi))
    return order


class TrialRunner:
    """Wires one tree, one assigner and one ledger together."""

    def __init__(
        self,
        scheme: SchemeConfig,
        accounting: AccountingConfig,
        reassign_mode: str = INCREMENTAL,
        num_nodes: Optional[int] = None,
        rotation_counting: str = PER_CASE,
    ):
        if reassign_mode not in REASSIGN_MODES:
            raise ValueError(f"unknown reassign mode {reassign_mode!r}")
        if rotation_counting not in ROTATION_COUNTINGS:
            raise ValueError(f"unknown rotation counting {rotation_counting!r}")
        self.tree = AvlTree()
        self.assigner = AddressAssigner(scheme, num_nodes)
        self.ledger = FlipLedger()
        self.accounting = accounting
        self.reassign_mode = reassign_mode
        self.rotation_counting = rotation_counting
        self.addressing_seconds = 0.0
        self._pending_half = None  # first half of a double, per-case mode
        # Observers used by verification harnesses; not set in normal runs.
        self.before_rotation_hook = None
        self.after_rotation_hook = None

    def insert(self, key: int) -> None:
        self.tree.insert(
            key,
            on_attach=self._on_attach,
            before_rotation=self.before_rotation_hook,
            on_rotation=self._on_rotation,
        )

    def run(self, keys) -> None:
        insert = self.insert
        for key in keys:
            insert(key)
            if self._pending_half is not None:
                raise RuntimeError("double rotation emitted an odd event count")
        self.ledger.overflow_fallbacks = self.assigner.overflow_fallbacks

    # -- hooks -----------------------------------------------------------
    def _on_attach(self, node, path) -> None:
        t0 = perf_counter()
        self.assigner.assign_on_insert(node, path)
        self.addressing_seconds += perf_counter() - t0

    def _on_rotation(self, event) -> None:
        t0 = perf_counter()
        old_slots = self._slot_words(event, use_old=True)
        if self.reassign_mode == FULL_PASS:
            relabels = self.assigner.full_pass(self.tree)
        else:
            relabels = self.assigner.rebind_moved(event.moved)
        new_slots = self._slot_words(event, use_old=False)
        # A pointer rewrite is a slot that points at a *different* node
        # and whose stored word actually changed.  Slots that keep their
        # child but see its address change are relabel propagation and
        # are charged through the relabel category instead.
        rewrites = []
        for slot, (child, old_word) in old_slots.items():
            entry = new_slots.get(slot)
            if entry is None:
                continue
            new_child, new_word = entry
            if new_child is not child and new_word != old_word:
                rewrites.append(WordWrite(slot, old_word, new_word))
        relabel_writes = [
            WordWrite(("label", node), old, new) for node, old, new in relabels
        ]
        if self.rotation_counting == PER_CASE and event.kind in _DOUBLE_KINDS:
            if self._pending_half is None:
                # First half of a double: hold its writes for the case.
                self._pending_half = (relabel_writes, rewrites)
            else:
                held_relabels, held_rewrites = self._pending_half
                self._pending_half = None
                record_rotation(
                    event,
                    held_relabels + relabel_writes,
                    held_rewrites + rewrites,
                    self.ledger,
                    self.accounting,
                )
        else:
            record_rotation(
                event, relabel_writes, rewrites, self.ledger, self.accounting
            )
        self.addressing_seconds += perf_counter() - t0
        if self.after_rotation_hook is not None:
            self.after_rotation_hook(event, relabel_writes, rewrites)

    def _slot_words(self, event, use_old: bool) -> dict:
        """Pointer slots inside the rotated subtree plus the slot above
        it, as {slot: (child node, stored word)}, reconstructed from the
        event's path diffs alone."""
        idx = 1 if use_old else 2
        entries = [(item[0], item[idx]) for item in event.moved]
        by_path = {path: node for node, path in entries}
        addr_of = self.assigner.address_of
        words = {}
        for node, path in entries:
            child = by_path.get(path + (LEFT,))
            if child is not None:
                words[(node, LEFT)] = (child, addr_of(child))
            child = by_path.get(path + (RIGHT,))
            if child is not None:
                words[(node, RIGHT)] = (child, addr_of(child))
        pivot_path = event.pivot_path
        occupant = by_path[pivot_path]
        words[ROOT_SLOT] = (occupant, addr_of(occupant))
        return words


def run_trial(
    width: int,
    scheme: SchemeConfig,
    seed: int,
    accounting: Optional[AccountingConfig] = None,
    reassign_mode: str = INCREMENTAL,
    num_nodes: Optional[int] = None,
    rotation_counting: str = PER_CASE,
):
    """One complete trial; returns (ledger, addressing wall seconds).

    ``seed`` drives the key permutation; the scheme's own randomness
    (random allocation) comes from ``scheme.seed``.
    """
    if accounting is None:
        accounting = AccountingConfig()
    n = nodes_for_width(width) if num_nodes is None else num_nodes
    runner = TrialRunner(
        scheme, accounting, reassign_mode, num_nodes=n,
        rotation_counting=rotation_counting,
    )
    runner.run(gen_dataset(n, seed))
    return runner.ledger, runner.addressing_seconds


# ----------------------------------------------------------------------
# experiment grids
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SchemeSpec:
    """A scheme choice independent of pointer width."""

    kind: SchemeKind
    threshold_ratio: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind is SchemeKind.HART:
            if self.threshold_ratio is None:
                raise ValueError("hart requires a threshold_ratio")
            object.__setattr__(
                self, "threshold_ratio", Fraction(self.threshold_ratio)
            )
        elif self.threshold_ratio is not None:
            raise ValueError(f"{self.kind.value} does not take a ratio")

    @property
    def tag(self) -> str:
        return self.kind.value

    def config(self, width: int, seed: int = 0) -> SchemeConfig:
        return SchemeConfig(
            kind=self.kind,
            pointer_width=width,
            threshold_ratio=self.threshold_ratio,
            seed=seed,
        )


@dataclass
class ExperimentConfig:
    widths: list
    schemes: list  # SchemeSpec
    trials: int = DEFAULT_TRIALS
    base_seed: int = 0
    accounting: AccountingConfig = field(default_factory=AccountingConfig)
    reassign_mode: str = INCREMENTAL
    rotation_counting: str = PER_CASE

    def __post_init__(self):
        for width in self.widths:
            if not 8 <= width <= 63:
                raise ValueError(f"width {width} outside [8, 63]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.reassign_mode not in REASSIGN_MODES:
            raise ValueError(f"unknown reassign mode {self.reassign_mode!r}")
        if self.rotation_counting not in ROTATION_COUNTINGS:
            raise ValueError(
                f"unknown rotation counting {self.rotation_counting!r}"
            )


@dataclass
class CellResult:
    """Aggregates for one (width, scheme) grid cell."""

    width: int
    scheme_tag: str
    threshold_ratio: Optional[Fraction]
    trials: int
    base_seed: int
    ledger: FlipLedger
    wall_seconds_total: float

    @property
    def mean_flips_per_rotation(self) -> Optional[float]:
        if self.ledger.total_rotations == 0:
            return None
        return self.ledger.total_flips / self.ledger.total_rotations

    @property
    def wall_seconds_per_trial(self) -> float:
        return self.wall_seconds_total / self.trials

    @property
    def rotations_per_level_avg(self) -> dict:
        return {
            level: count / self.trials
            for level, count in sorted(self.ledger.rotations_per_level.items())
        }


def _trial_task(args):
    (width, kind_value, ratio, trial, base_seed, pointer_flag, relabel_flag,
     mode, num_nodes, counting) = args
    kind = SchemeKind(kind_value)
    tag = kind.value
    scheme = SchemeConfig(
        kind=kind,
        pointer_width=width,
        threshold_ratio=ratio,
        seed=scheme_seed(base_seed, width, tag, ratio, trial),
    )
    accounting = AccountingConfig(pointer_flag, relabel_flag)
    ledger, wall = run_trial(
        width,
        scheme,
        dataset_seed(base_seed, width, trial),
        accounting,
        mode,
        num_nodes=num_nodes,
        rotation_counting=counting,
    )
    return trial, ledger, wall


def run_cell(
    width: int,
    spec: SchemeSpec,
    trials: int,
    base_seed: int,
    accounting: Optional[AccountingConfig] = None,
    reassign_mode: str = INCREMENTAL,
    jobs: int = 1,
    num_nodes: Optional[int] = None,
    rotation_counting: str = PER_CASE,
) -> CellResult:
    if accounting is None:
        accounting = AccountingConfig()
    tasks = [
        (
            width,
            spec.kind.value,
            spec.threshold_ratio,
            trial,
            base_seed,
            accounting.count_pointer_rewrites,
            accounting.count_node_relabels,
            reassign_mode,
            num_nodes,
            rotation_counting,
        )
        for trial in range(trials)
    ]
    if jobs > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_trial_task, tasks, chunksize=1))
    else:
        outcomes = [_trial_task(task) for task in tasks]
    outcomes.sort(key=lambda item: item[0])  # schedule-independent merge
    merged = FlipLedger()
    wall_total = 0.0
    for _, ledger, wall in outcomes:
        merged = merged.merge(ledger)
        wall_total += wall
    return CellResult(
        width=width,
        scheme_tag=spec.tag,
        threshold_ratio=spec.threshold_ratio,
        trials=trials,
        base_seed=base_seed,
        ledger=merged,
        wall_seconds_total=wall_total,
    )


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list:
    """Run the full (width x scheme) grid; returns CellResults in grid order."""
    results = []
    for width in config.widths:
        for spec in config.schemes:
            results.append(
                run_cell(
                    width,
                    spec,
                    config.trials,
                    config.base_seed,
                    config.accounting,
                    config.reassign_mode,
                    jobs=jobs,
                    rotation_counting=config.rotation_counting,
                )
            )
    return results


def compare_thresholds(
    num_nodes: int,
    ratios=DEFAULT_RATIOS,
    trials: int = DEFAULT_TRIALS,
    base_seed: int = 0,
    accounting: Optional[AccountingConfig] = None,
    reassign_mode: str = INCREMENTAL,
    jobs: int = 1,
    rotation_counting: str = PER_CASE,
) -> dict:
    """Run the hybrid scheme at each threshold ratio on one tree size.

    Returns {ratio: metrics}; the pointer width is the height estimate
    plus two, the number of bits needed to address such a tree.
    """
    if num_nodes < 1:
        raise ValueError("num_nodes must be >= 1")
    results = {}
    for ratio in ratios:
        ratio = Fraction(ratio)
        threshold = Threshold.for_tree(num_nodes, ratio)
        width = threshold.height + 2
        cell = run_cell(
            width,
            SchemeSpec(SchemeKind.HART, ratio),
            trials,
            base_seed,
            accounting,
            reassign_mode,
            jobs=jobs,
            num_nodes=num_nodes,
            rotation_counting=rotation_counting,
        )
        results[ratio] = {
            "height": threshold.height,
            "threshold": threshold.level,
            "width": width,
            "mean_flips_per_rotation": cell.mean_flips_per_rotation,
            "wall_time_seconds": cell.wall_seconds_per_trial,
            "overflow_fallbacks": cell.ledger.overflow_fallbacks,
            "trials": trials,
            "seed": base_seed,
        }
    return results


def _histogram_task(args):
    width, trial, base_seed, num_nodes, counting = args
    tree = AvlTree()
    counts: dict = {}
    for key in gen_dataset(num_nodes, dataset_seed(base_seed, width, trial)):
        events = tree.insert(key)
        if not events:
            continue
        if counting == PER_CASE:
            # The case pivot is the last event of the insert's rebalance.
            levels = (events[-1].pivot_level,)
        else:
            levels = tuple(e.pivot_level for e in events)
        for level in levels:
            counts[level] = counts.get(level, 0) + 1
    return trial, counts


def rotations_histogram(
    width: int,
    trials: int,
    base_seed: int = 0,
    jobs: int = 1,
    num_nodes: Optional[int] = None,
    rotation_counting: str = PER_CASE,
) -> dict:
    """Average rotations per pivot level; addressing-independent."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if rotation_counting not in ROTATION_COUNTINGS:
        raise ValueError(f"unknown rotation counting {rotation_counting!r}")
    n = nodes_for_width(width) if num_nodes is None else num_nodes
    tasks = [(width, trial, base_seed, n, rotation_counting) for trial in range(trials)]
    if jobs > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_histogram_task, tasks, chunksize=1))
    else:
        outcomes = [_histogram_task(task) for task in tasks]
    totals: dict = {}
    for _, counts in sorted(outcomes, key=lambda item: item[0]):
        for level, count in counts.items():
            totals[level] = totals.get(level, 0) + count
    return {level: totals[level] / trials for level in sorted(totals)}
