"""Shared oracles and helpers.

The oracles here deliberately avoid the library's own shortcuts: DFAT
ranks come from an explicit traversal of the complete tree, and flip
totals come from full before/after snapshots of every stored word.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hartsim.accounting import ROOT_SLOT, bit_flips  # noqa: E402
from hartsim.avl import LEFT, RIGHT, AvlTree  # noqa: E402


def brute_force_dfat_ranks(depth_capacity):
    """Rank of every position in the complete tree via an actual
    alternating-order preorder traversal (the independent oracle for
    the closed-form index)."""
    ranks = {}
    counter = [0]

    def visit(path):
        if len(path) >= depth_capacity:
            return
        ranks[path] = counter[0]
        counter[0] += 1
        depth = len(path)
        first, second = (LEFT, RIGHT) if depth % 2 == 0 else (RIGHT, LEFT)
        visit(path + (first,))
        visit(path + (second,))

    visit(())
    return ranks


def full_snapshot(runner, acct):
    """Every stored word in the tree, keyed by slot.

    Pointer slots record (child identity, stored word) so the diff can
    distinguish structural rewrites from relabel propagation; label
    slots record the node's own address word.
    """
    words = {}
    addr_of = runner.assigner.address_of
    entries = runner.tree.nodes_with_paths()
    for node, _ in entries:
        if acct.count_pointer_rewrites:
            if node.left is not None:
                words[(node, LEFT)] = (node.left, addr_of(node.left))
            if node.right is not None:
                words[(node, RIGHT)] = (node.right, addr_of(node.right))
        if acct.count_node_relabels:
            words[("label", node)] = (node, addr_of(node))
    if entries and acct.count_pointer_rewrites:
        words[ROOT_SLOT] = (runner.tree.root, addr_of(runner.tree.root))
    return words


def snapshot_flip_diff(before, after):
    """Hamming sum over the two snapshots.

    Pointer slots count only when the linked child changed; label slots
    count whenever the word changed.  Slots that appear or vanish are
    structural and cost nothing.
    """
    total = 0
    for slot in before.keys() & after.keys():
        owner0, word0 = before[slot]
        owner1, word1 = after[slot]
        if slot[0] == "label":
            total += bit_flips(word0, word1)
        elif owner0 is not owner1 and word0 != word1:
            total += bit_flips(word0, word1)
    return total


def build_tree(keys):
    tree = AvlTree()
    events = []
    for key in keys:
        events.extend(tree.insert(key))
    return tree, events


def address_map(runner):
    """key -> address for every node currently in the tree."""
    addr_of = runner.assigner.address_of
    return {
        node.key: addr_of(node) for node, _ in runner.tree.nodes_with_paths()
    }
