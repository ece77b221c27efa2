"""Rebuilding the arborescence edge list from a canonical cutset matrix.

Each canonical row pairs one non-sink branch with exactly the sink flows
that descend from it, so chord sets are nested along root-to-leaf paths:
an ancestor's chord set contains a descendant's.  Sorting rows by
descending nonzero count places ancestors first, the immediate parent of a
branch is the deepest earlier row whose chord set contains its own, and a
sink edge hangs off the deepest row that carries it as a chord.  A row
disjoint from every earlier row is another top-level branch out of the
source; single-top-branch inputs never hit that case.

Node naming follows the incoming-edge convention: the node entered by edge
``i`` is node ``i`` and the source is node ``e + 1``, which makes a
reconstruction directly comparable to a ground-truth network relabeled the
same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .canonical_cutset import CanonicalCutsetMatrix
from .errors import AmbiguousParent, LabelMismatch, NotArborescence
from .graph_model import FlowNetwork, is_arborescence


@dataclass(frozen=True)
class ReconstructionResult:
    """Inferred edge list plus diagnostics.

    ``edges`` is ordered as the realization emits it (branches in sorted
    row order, then chords in column order); ``as_network`` reorders by
    edge label into the positional convention used everywhere else.
    """

    edges: tuple[tuple[int, int], ...]
    node_labels: Mapping[int, int] = field(default_factory=dict)
    diagnostics: Mapping[str, Any] = field(default_factory=dict)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def root(self) -> int:
        return self.edge_count + 1

    def as_network(self) -> FlowNetwork:
        by_label = {t: (s, t) for s, t in self.edges}
        ordered = tuple(by_label[lab] for lab in range(1, self.edge_count + 1))
        return FlowNetwork(node_count=self.edge_count + 1, edges=ordered)


def realize_topology(
    canon: CanonicalCutsetMatrix, chain_policy: str = "row_order"
) -> ReconstructionResult:
    """Realize the unique arborescence consistent with a canonical cutset
    matrix.

    Args:
        canon: canonical cutset matrix.
        chain_policy: how to parent a branch when several candidate rows
            carry identical chord sets, which happens exactly on equal-flow
            chain segments.  "row_order" (default) trusts the ordered
            labeling convention and picks the deepest earlier row;
            "strict" raises instead.

    Raises:
        NotArborescence: chord sets are not nested the way an arborescence
            requires, or the realized graph fails validation.
        AmbiguousParent: under ``chain_policy="strict"``, two candidate
            parents have identical chord sets.
    """
    if chain_policy not in ("row_order", "strict"):
        raise ValueError(f"unknown chain_policy {chain_policy!r}")
    m, e = canon.m, canon.edge_count
    if m == 0 or e == m:
        raise NotArborescence("need at least one branch and one chord")

    entries = canon.entries
    chord_labels = canon.chord_edges
    chord_sets = []
    for k in range(m):
        cols = np.flatnonzero(entries[k, m:] == -1)
        chord_sets.append(frozenset(chord_labels[int(c)] for c in cols))

    order = sorted(range(m), key=lambda k: (-len(chord_sets[k]), canon.branch_edges[k]))
    branches = [canon.branch_edges[k] for k in order]
    sets = [chord_sets[k] for k in order]
    sorted_entries = entries[order]

    if not sets[0]:
        raise NotArborescence("largest cutset row carries no sink edge")

    # x_e: labels in realized column order, branches first
    x_e = branches + list(chord_labels)
    src = [0] * e
    src[0] = e + 1
    for k in range(1, m):
        if not sets[k]:
            raise NotArborescence(f"branch {branches[k]} carries no sink edge")
        parent = -1
        for p in range(k - 1, -1, -1):
            if sets[k] <= sets[p]:
                parent = p
                break
            if sets[k] & sets[p]:
                raise NotArborescence(
                    f"chord sets of branches {branches[k]} and {branches[p]} "
                    "intersect without containment"
                )
        if parent < 0:
            # disjoint from every placed row: another top-level branch
            src[k] = e + 1
            continue
        if chain_policy == "strict":
            if sets[k] == sets[parent]:
                raise AmbiguousParent(
                    f"branches {branches[k]} and {branches[parent]} carry identical "
                    "chord sets; their stacking order is not identifiable"
                )
            twins = [p for p in range(k) if p != parent and sets[p] == sets[parent]]
            if twins:
                raise AmbiguousParent(
                    f"rows {twins + [parent]} offer identical chord sets for "
                    f"branch {branches[k]}"
                )
        src[k] = x_e[parent]

    for j in range(m, e):
        carriers = np.flatnonzero(sorted_entries[:, j] == -1)
        if carriers.size == 0:
            raise NotArborescence(f"sink edge {x_e[j]} appears in no cutset")
        src[j] = x_e[int(carriers.max())]

    edges = tuple((src[i], x_e[i]) for i in range(e))
    result = ReconstructionResult(
        edges=edges,
        node_labels={lab: lab for lab in range(1, e + 1)},
        diagnostics={
            "m": m,
            "dependent_edges": canon.branch_edges,
            "independent_edges": canon.chord_edges,
            "canonical": canon,
        },
    )
    if not is_arborescence(result.as_network()):
        raise NotArborescence("realized edge list failed arborescence validation")
    return result


def verify_against_truth(result: ReconstructionResult, truth: FlowNetwork) -> bool:
    """Exact labeled-edge-set equality against a reference network.

    The reference must use the incoming-edge labeling convention (see
    ``graph_model.to_label_convention``).

    Raises:
        LabelMismatch: the two edge-label universes differ.
    """
    if truth.edge_count != result.edge_count or truth.node_count != result.edge_count + 1:
        raise LabelMismatch(
            f"reference has {truth.edge_count} edges over {truth.node_count} nodes, "
            f"result has {result.edge_count} edges"
        )
    return set(result.edges) == set(truth.edges)


def to_dot(result: ReconstructionResult) -> str:
    """Render the reconstruction as DOT text for external layout tools."""
    lines = ["digraph reconstruction {"]
    for s, t in sorted(result.edges, key=lambda st: st[1]):
        lines.append(f'    {s} -> {t} [label="x{t}"];')
    lines.append("}")
    return "\n".join(lines)
