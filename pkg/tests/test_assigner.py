from fractions import Fraction

import pytest

from conftest import address_map
from hartsim.accounting import AccountingConfig
from hartsim.addressing import (
    AddressAssigner,
    SchemeConfig,
    SchemeKind,
    SOURCE_LINEAR,
    SOURCE_POSITIONAL,
    SOURCE_SPARE,
    binary_to_gray,
    dfat_index,
)
from hartsim.avl import AvlTree
from hartsim.harness import (
    FULL_PASS,
    INCREMENTAL,
    TrialRunner,
    balanced_insertion_order,
    gen_dataset,
)


def make_runner(kind, width, ratio=None, n=None, mode=INCREMENTAL, seed=7):
    cfg = SchemeConfig(kind, width, ratio, seed=seed)
    return TrialRunner(cfg, AccountingConfig(), reassign_mode=mode, num_nodes=n)


def feed(runner, keys):
    for key in keys:
        runner.insert(key)
    return runner


def test_linear_assigns_insertion_order():
    runner = make_runner(SchemeKind.LINEAR, 8, n=40)
    keys = gen_dataset(40, 3)
    feed(runner, keys)
    addr = address_map(runner)
    assert [addr[k] for k in keys] == list(range(40))


def test_linear_and_random_never_relabel():
    for kind in (SchemeKind.LINEAR, SchemeKind.RANDOM):
        runner = make_runner(kind, 8, n=80)
        relabel_batches = []
        runner.after_rotation_hook = (
            lambda event, relabels, rewrites: relabel_batches.append(relabels)
        )
        feed(runner, gen_dataset(80, 11))
        assert relabel_batches, "workload produced no rotations"
        assert all(batch == [] for batch in relabel_batches)


def test_random_is_seed_deterministic_and_unique():
    def run(seed):
        runner = make_runner(SchemeKind.RANDOM, 9, n=100, seed=seed)
        feed(runner, gen_dataset(100, 5))
        return address_map(runner)

    first, second, other = run(42), run(42), run(43)
    assert first == second
    assert first != other
    null_word = (1 << 9) - 1
    values = list(first.values())
    assert len(set(values)) == len(values)
    assert all(0 <= v < null_word for v in values)


def test_dfat_gray_three_node_rotation_fixture():
    """Ascending 1,2,3 at width 3: the third key's Gray word is the null
    pattern, so it takes the lowest spare value; the rotation then
    re-derives all three addresses from the new positions."""
    runner = make_runner(SchemeKind.DFAT_GRAY, 3, n=3)
    feed(runner, [1, 2])
    assert address_map(runner) == {1: 0, 2: 6}
    relabels = []
    runner.after_rotation_hook = (
        lambda event, rl, rw: relabels.extend(
            (write.location[1].key, write.old, write.new) for write in rl
        )
    )
    runner.insert(3)
    # pre-rotation: 3 sits at [R, R] with rank 5, gray(5) == 7 == null -> spare 1
    assert sorted(relabels) == [(1, 0, 1), (2, 6, 0), (3, 1, 6)]
    assert address_map(runner) == {2: 0, 1: 1, 3: 6}


def test_hart_seven_node_tree_regions_and_addresses():
    """Keys 0..6 inserted balanced at width 5, ratio 1/4 -> T = 1: the
    root is linear address 0, deeper nodes carry Gray-coded DFAT ranks."""
    runner = make_runner(SchemeKind.HART, 5, ratio=Fraction(1, 4), n=7)
    feed(runner, balanced_insertion_order(7))
    tree = runner.tree
    assigner = runner.assigner
    assert assigner.threshold.height == 3
    assert assigner.threshold.level == 1

    root = tree.root
    root_rec = assigner.record_of(root)
    assert root_rec.source == SOURCE_LINEAR
    assert root_rec.addr == 0

    for node, path in tree.nodes_with_paths():
        if node is root:
            continue
        rec = assigner.record_of(node)
        assert rec.source == SOURCE_POSITIONAL
        assert rec.addr == binary_to_gray(dfat_index(path, 5), 5)
    # spot values from the hand enumeration
    addr = address_map(runner)
    assert addr[3] == 0  # root (key 3 of 0..6)
    assert addr[1] == binary_to_gray(1, 5) == 1  # path [Left], rank 1
    assert addr[5] == binary_to_gray(16, 5) == 24  # path [Right], rank 16


def test_hart_linear_gray_conflict_falls_back_to_spare():
    """Ascending 1,2,3 under hart T=1: after the rotation the new root
    takes linear address 1, which collides with gray(rank([Left])) = 1,
    pushing the old root onto the spare queue (lowest free value: 0)."""
    runner = make_runner(SchemeKind.HART, 5, ratio=Fraction(1, 4), n=3)
    feed(runner, [1, 2, 3])
    assigner = runner.assigner
    addr = address_map(runner)
    tree = runner.tree
    assert addr[2] == 1  # new root, linear counter value 1
    rec1 = assigner.record_of(tree.root.left)
    assert rec1.source == SOURCE_SPARE
    assert rec1.addr == 0
    rec3 = assigner.record_of(tree.root.right)
    assert rec3.source == SOURCE_POSITIONAL
    assert rec3.addr == binary_to_gray(16, 5)
    assert assigner.space.spare_allocations >= 1


def test_hart_ratio_one_on_balanced_tree_is_all_linear():
    # A balanced 63-key build never exceeds level H = 6 = T.
    runner = make_runner(SchemeKind.HART, 8, ratio=1, n=63)
    feed(runner, balanced_insertion_order(63))
    for node, _ in runner.tree.nodes_with_paths():
        assert runner.assigner.record_of(node).source == SOURCE_LINEAR
    assert sorted(address_map(runner).values()) == list(range(63))


def test_hart_rotation_inside_linear_region_relabels_nothing():
    # Threshold derived for 1023 nodes (T = 10) while only 63 keys are
    # inserted: the tree can never outgrow the linear region, so every
    # rotation's moved set is identity-bound.
    runner = make_runner(SchemeKind.HART, 8, ratio=1, n=1023)
    batches = []
    runner.after_rotation_hook = (
        lambda event, relabels, rewrites: batches.append(relabels)
    )
    feed(runner, gen_dataset(63, 9))
    assert batches and all(batch == [] for batch in batches)
    for node, _ in runner.tree.nodes_with_paths():
        assert runner.assigner.record_of(node).source == SOURCE_LINEAR


def test_hybrid_partition_audit_after_every_insert():
    """Every node at level <= T is linear-bound and every deeper node is
    positional or spare-bound, checked from the audit records after each
    insert."""
    for ratio in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
        runner = make_runner(SchemeKind.HART, 9, ratio=ratio, n=127)
        cutoff = runner.assigner.threshold.level
        for key in gen_dataset(127, 13):
            runner.insert(key)
            for node, path in runner.tree.nodes_with_paths():
                rec = runner.assigner.record_of(node)
                if len(path) + 1 <= cutoff:
                    assert rec.source == SOURCE_LINEAR
                else:
                    assert rec.source in (SOURCE_POSITIONAL, SOURCE_SPARE)
                    if rec.source == SOURCE_POSITIONAL:
                        assert rec.addr == binary_to_gray(
                            dfat_index(path, 9), 9
                        )


def test_addresses_unique_after_every_insert():
    for kind, ratio in (
        (SchemeKind.LINEAR, None),
        (SchemeKind.RANDOM, None),
        (SchemeKind.GRAY, None),
        (SchemeKind.DFAT_GRAY, None),
        (SchemeKind.HART, Fraction(1, 2)),
    ):
        runner = make_runner(kind, 8, ratio=ratio, n=63)
        for key in gen_dataset(63, 21):
            runner.insert(key)
            values = list(address_map(runner).values())
            assert len(set(values)) == len(values)
            assert (1 << 8) - 1 not in values  # null word never assigned


def test_incremental_equals_full_pass_address_maps():
    for kind, ratio in ((SchemeKind.DFAT_GRAY, None), (SchemeKind.HART, Fraction(1, 2))):
        for seed in range(3):
            runners = [
                make_runner(kind, 8, ratio=ratio, n=63, mode=mode)
                for mode in (INCREMENTAL, FULL_PASS)
            ]
            for key in gen_dataset(63, seed):
                maps = []
                for runner in runners:
                    runner.insert(key)
                    maps.append(address_map(runner))
                assert maps[0] == maps[1]
            assert runners[0].ledger.total_flips == runners[1].ledger.total_flips


def test_full_pass_is_idempotent():
    runner = make_runner(SchemeKind.DFAT_GRAY, 8, n=63, mode=FULL_PASS)
    feed(runner, gen_dataset(63, 2))
    assert runner.assigner.full_pass(runner.tree) == []


def test_depth_overflow_falls_back_to_spare_and_counts():
    assigner = AddressAssigner(SchemeConfig(SchemeKind.DFAT_GRAY, 4), num_nodes=31)
    deep_path = (0, 1, 0, 1)  # depth 4 does not fit 4 levels
    value = assigner.assign_on_insert("node", deep_path)
    assert assigner.overflow_fallbacks == 1
    assert assigner.record_of("node").source == SOURCE_SPARE
    assert value == 0


def test_gray_scheme_uses_level_order_positions():
    runner = make_runner(SchemeKind.GRAY, 5, n=7)
    feed(runner, balanced_insertion_order(7))
    for node, path in runner.tree.nodes_with_paths():
        rec = runner.assigner.record_of(node)
        pos = 1
        for step in path:
            pos = (pos << 1) | step
        assert rec.addr == binary_to_gray(pos - 1, 5)
