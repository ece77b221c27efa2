"""Canonical cutset form: every branch a non-sink flow edge.

A learned cutset matrix ``[I | R]`` corresponds to some spanning tree of the
conservation graph, not necessarily the arborescence rooted at the
environment node.  Chord-branch interchanges (elementary tree
transformations) move the tree toward that arborescence: within each cutset
row of an arborescence conservation graph exactly one coefficient carries a
sign different from all the others, and the edge holding it is the cutset's
lowest-level non-sink flow, hence the branch the canonical form wants.

All arithmetic here is exact integer arithmetic on snapped matrices; row
operations on {-1, 0, +1} cutset matrices stay integral, so no float drift
can creep in after snapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import NotCanonicalizable, NotUnique
from .graph_model import CutsetMatrix


@dataclass(frozen=True)
class CanonicalCutsetMatrix:
    """A cutset matrix in canonical form plus the interchange history.

    Canonical means: identity entries are +1 and every chord entry is 0 or
    -1, so each row reads "branch flow minus the sum of its descendant sink
    flows equals zero".

    Attributes:
        inner: the canonical ``[I | C]`` matrix.
        provenance: ``(row, outgoing_branch, incoming_branch)`` label
            records, one per interchange, in application order.
    """

    inner: CutsetMatrix
    provenance: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "provenance", tuple(tuple(p) for p in self.provenance))
        m = self.inner.m
        chords = self.inner.entries[:, m:]
        if chords.size and chords.max(initial=0) > 0:
            raise ValueError("canonical form admits no positive chord entry")

    @property
    def entries(self) -> np.ndarray:
        return self.inner.entries

    @property
    def branch_edges(self) -> tuple[int, ...]:
        return self.inner.branch_edges

    @property
    def chord_edges(self) -> tuple[int, ...]:
        return self.inner.chord_edges

    @property
    def m(self) -> int:
        return self.inner.m

    @property
    def edge_count(self) -> int:
        return self.inner.edge_count


def unique_sign_edge(row: Sequence[int], labels: Sequence[int] | None = None) -> int:
    """Label of the single coefficient whose sign differs from all others.

    For a cutset row of an arborescence conservation graph this edge is the
    lowest-level non-sink flow in the cutset.  A two-entry row has both
    signs occurring once; there the ordered labeling convention applies and
    the smaller label, which belongs to the shallower edge, is returned.

    Raises:
        NotUnique: no coefficient is sign-unique (corrupted row or a
            non-arborescence network).
    """
    values = np.asarray(row, dtype=np.int64)
    if labels is None:
        labels = range(1, values.shape[0] + 1)
    labels = tuple(int(v) for v in labels)
    if values.shape[0] != len(labels):
        raise ValueError("row length and label count differ")
    if not np.isin(values, (-1, 0, 1)).all():
        raise ValueError("row entries must be in {-1, 0, +1}")
    pos = [lab for lab, v in zip(labels, values) if v == 1]
    neg = [lab for lab, v in zip(labels, values) if v == -1]
    if not pos and not neg:
        raise NotUnique("row has no nonzero entry")
    if len(pos) + len(neg) == 1:
        return (pos or neg)[0]
    candidates = []
    if len(pos) == 1:
        candidates.append(pos[0])
    if len(neg) == 1:
        candidates.append(neg[0])
    if not candidates:
        raise NotUnique(f"no sign-unique coefficient among {len(pos)} positive, {len(neg)} negative")
    return min(candidates)


def _swap_and_reduce(entries: np.ndarray, labels: list[int], k: int, l: int) -> None:
    """Interchange branch column k with column l, then restore the identity
    block by integer row operations."""
    entries[:, [k, l]] = entries[:, [l, k]]
    labels[k], labels[l] = labels[l], labels[k]
    if entries[k, k] == -1:
        entries[k] = -entries[k]
    if entries[k, k] != 1:
        raise NotCanonicalizable(f"pivot {entries[k, k]} at row {k} after interchange")
    for r in range(entries.shape[0]):
        if r != k and entries[r, k] != 0:
            entries[r] -= entries[r, k] * entries[k]
    if np.abs(entries).max() > 1:
        raise NotCanonicalizable("row operations left the {-1, 0, +1} range")


def canonicalize(
    cutset: CutsetMatrix,
    strategy: str = "unique_sign",
    flows: Mapping[int, float] | None = None,
    normalize_labels: bool = True,
) -> CanonicalCutsetMatrix:
    """Transform a valid cutset matrix so all branches are non-sink edges.

    Args:
        cutset: f-cutset matrix of an arborescence conservation graph.
        strategy: "unique_sign" locates the interchange target through the
            sign-unique coefficient.  "max_flow" instead treats the edge of
            largest flow magnitude in each cutset as the lowest-level flow;
            it needs ``flows`` (label -> magnitude) and can misfire on noisy
            data, so it is opt-in.
        flows: flow magnitudes per edge label, only used by "max_flow".
        normalize_labels: also repair rows whose branch label exceeds one of
            its negative chords.  Equal-flow chain segments (single-child
            paths) produce structurally identical columns that sign logic
            cannot tell apart; under the ordered labeling convention the
            smaller label is the shallower edge, which this pass restores.

    Raises:
        NotUnique: a row offers no unambiguous interchange target.
        NotCanonicalizable: interchanges failed to converge, or the matrix
            violates cutset structure along the way.
    """
    if strategy not in ("unique_sign", "max_flow"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "max_flow" and flows is None:
        raise ValueError("max_flow strategy requires flow magnitudes")

    entries = cutset.entries.astype(np.int64, copy=True)
    labels = list(cutset.column_labels)
    m, e = cutset.m, cutset.edge_count
    provenance: list[tuple[int, int, int]] = []

    def fix_row(k: int) -> bool:
        chords = entries[k, m:]
        if strategy == "max_flow":
            nz = [j for j in range(e) if entries[k, j] != 0]
            target = max(nz, key=lambda j: abs(flows[labels[j]]))
            if target == k:
                return False
            l = target
        elif (chords > 0).any():
            neg = np.flatnonzero(chords == -1)
            if neg.size != 1:
                raise NotUnique(
                    f"row {k} has {neg.size} negative chords alongside positive ones"
                )
            l = m + int(neg[0])
        elif normalize_labels:
            below = [j for j in range(m, e) if entries[k, j] == -1 and labels[j] < labels[k]]
            if not below:
                return False
            l = min(below, key=lambda j: labels[j])
        else:
            return False
        outgoing, incoming = labels[k], labels[l]
        _swap_and_reduce(entries, labels, k, l)
        provenance.append((k, outgoing, incoming))
        return True

    # one sweep is the textbook loop; repeated sweeps absorb the knock-on
    # effects interchanges have on already-visited rows
    max_swaps = 4 * m + 16
    for _ in range(max_swaps):
        if not any(fix_row(k) for k in range(m)):
            break
    else:
        raise NotCanonicalizable(f"no fixed point after {max_swaps} sweeps")

    inner = CutsetMatrix(
        entries=entries,
        branch_edges=tuple(labels[:m]),
        chord_edges=tuple(labels[m:]),
    )
    try:
        return CanonicalCutsetMatrix(inner=inner, provenance=tuple(provenance))
    except ValueError as exc:
        raise NotCanonicalizable(str(exc)) from None
