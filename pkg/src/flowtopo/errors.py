"""Exception hierarchy for the flowtopo toolkit.

Every failure mode that callers are expected to handle gets its own class so
the CLI can map error categories onto distinct exit codes.  All exceptions
derive from :class:`FlowtopoError`.
"""

from __future__ import annotations


class FlowtopoError(Exception):
    """Base class for all toolkit errors."""


class ParseError(FlowtopoError):
    """An input file could not be parsed or failed format validation."""


# ---------------------------------------------------------------------------
# graph construction


class DisconnectedNetwork(FlowtopoError):
    """The underlying graph is not connected (or the environment node
    would end up isolated)."""


class NoInternalNodes(FlowtopoError):
    """The network has no non-source, non-sink node, so no conservation
    equation exists."""


class NotASpanningTree(FlowtopoError):
    """A proposed branch set contains a cycle or does not span all nodes."""


# ---------------------------------------------------------------------------
# null-space learning


class RankZero(FlowtopoError):
    """No conservation relation was found in the data (null space empty)."""


class FullDeficiency(FlowtopoError):
    """Every singular value is zero; the data matrix carries no signal."""


class NoValidPartition(FlowtopoError):
    """No nonsingular dependent column subset of the basis exists."""


class NonIntegerCutset(FlowtopoError):
    """A reduced coefficient is too far from {-1, 0, +1} to snap; the data
    is either noisy or not generated by a conserved network."""


# ---------------------------------------------------------------------------
# canonicalization


class NotUnique(FlowtopoError):
    """A cutset row has no unique opposite-sign coefficient; the input is
    not the cutset matrix of an arborescence conservation graph."""


class NotCanonicalizable(FlowtopoError):
    """Column interchanges did not converge to canonical form."""


# ---------------------------------------------------------------------------
# realization


class NotArborescence(FlowtopoError):
    """Chord-set structure is inconsistent with any arborescence."""


class AmbiguousParent(FlowtopoError):
    """Two candidate parent branches cannot be distinguished."""


class LabelMismatch(FlowtopoError):
    """Result and reference use different edge-label universes."""


# ---------------------------------------------------------------------------
# noisy estimation


class NotPositiveDefinite(FlowtopoError):
    """The noise covariance has no Cholesky factor."""


class NoStableOrder(FlowtopoError):
    """The eigenvalue-equality test rejected every candidate model order."""


class SnapFailure(FlowtopoError):
    """A reduced coefficient fell in the ambiguous band between integers."""


# ---------------------------------------------------------------------------
# synthetic generation


class EmptySpec(FlowtopoError):
    """Generator ranges produced an empty network."""
