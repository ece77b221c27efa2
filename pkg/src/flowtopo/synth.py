"""Random arborescence generation and conserved-flow synthesis.

Networks are grown layer by layer from a single root; the children count
for a layer is drawn once and shared by every parent in that layer, so all
leaves sit in the final layer.  Edges are labeled in generation order,
which gives the ordered-labeling guarantee the realization lane leans on:
every ancestor edge carries a smaller label than its descendants, and sink
edges (final layer) carry the largest labels overall.

Generated networks use the incoming-edge node convention directly: the
node entered by edge i is node i and the root is node e + 1, so a
reconstruction can be compared against the generator output without any
relabeling step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySpec, NotArborescence
from .graph_model import FlowNetwork, is_arborescence
from .noise_pipeline import NoiseModel
from .nullspace import FlowDataMatrix

FAMILIES = ("binary", "thin_long", "fat_short")

# (layer range, children-per-layer range) defaults, sized so typical draws
# stay within a few hundred edges
FAMILY_DEFAULTS = {
    "binary": ((3, 7), (2, 2)),
    "thin_long": ((6, 12), (1, 3)),
    "fat_short": ((2, 3), (8, 20)),
}

DEFAULT_MEANS = (100.0, 200.0, 300.0)
DEFAULT_STDS = (10.0, 20.0, 30.0)


class _EdgeBudgetExceeded(Exception):
    """Internal: a bounded draw outgrew its edge budget."""


@dataclass(frozen=True)
class ArborescenceSpec:
    family: str
    layer_range: tuple[int, int]
    children_range: tuple[int, int]
    seed: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        lr = (int(self.layer_range[0]), int(self.layer_range[1]))
        cr = (int(self.children_range[0]), int(self.children_range[1]))
        object.__setattr__(self, "layer_range", lr)
        object.__setattr__(self, "children_range", cr)
        if lr[0] > lr[1] or cr[0] > cr[1]:
            raise ValueError("ranges must satisfy low <= high")
        if cr[0] < 1:
            raise ValueError("children per layer must be at least 1")
        if self.family == "binary" and cr != (2, 2):
            raise ValueError("binary family requires exactly 2 children per parent")


@dataclass(frozen=True)
class FlowSamplerConfig:
    """Sink-flow distribution mixture plus sample count and seed.

    Each sink edge is assigned one mixture component uniformly at random,
    once per network, and keeps it across all samples.
    """

    n_s: int
    seed: int
    means: tuple[float, ...] = DEFAULT_MEANS
    stds: tuple[float, ...] = DEFAULT_STDS

    def __post_init__(self):
        object.__setattr__(self, "means", tuple(float(v) for v in self.means))
        object.__setattr__(self, "stds", tuple(float(v) for v in self.stds))
        if self.n_s < 1:
            raise ValueError("n_s must be positive")
        if len(self.means) != len(self.stds) or not self.means:
            raise ValueError("means and stds must be equal-length and nonempty")
        if any(v <= 0 for v in self.means) or any(v <= 0 for v in self.stds):
            raise ValueError("means and stds must be positive")


@dataclass(frozen=True)
class SnrSetting:
    """Per-edge signal-variance to noise-variance ratio."""

    snr: float
    kind: str = "homoscedastic"

    def __post_init__(self):
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.kind not in ("homoscedastic", "heteroscedastic"):
            raise ValueError(f"unknown noise kind {self.kind!r}")


def family_spec(
    family: str,
    seed: int,
    layer_range: tuple[int, int] | None = None,
    children_range: tuple[int, int] | None = None,
) -> ArborescenceSpec:
    """Spec with family defaults, overridable per range."""
    if family not in FAMILY_DEFAULTS:
        raise ValueError(f"unknown family {family!r}")
    default_layers, default_children = FAMILY_DEFAULTS[family]
    return ArborescenceSpec(
        family=family,
        layer_range=layer_range or default_layers,
        children_range=children_range or default_children,
        seed=seed,
    )


def _grow(spec: ArborescenceSpec, rng: np.random.Generator, budget: int | None) -> FlowNetwork:
    lo, hi = spec.layer_range
    layers = int(rng.integers(lo, hi + 1))
    if layers <= 0:
        raise EmptySpec(f"layer range {spec.layer_range} drew {layers} layers")
    clo, chi = spec.children_range
    edges: list[tuple[int, int]] = []
    frontier = [0]  # 0 stands in for the root until e is known
    label = 0
    for _ in range(layers):
        children = int(rng.integers(clo, chi + 1))
        next_frontier = []
        for parent in frontier:
            for _ in range(children):
                label += 1
                edges.append((parent, label))
                next_frontier.append(label)
        frontier = next_frontier
        if budget is not None and label > budget:
            raise _EdgeBudgetExceeded
    e = label
    fixed = tuple((e + 1 if s == 0 else s, t) for s, t in edges)
    return FlowNetwork(node_count=e + 1, edges=fixed)


def generate_arborescence(spec: ArborescenceSpec) -> FlowNetwork:
    """Draw one arborescence for the spec; deterministic per seed.

    Raises:
        EmptySpec: the layer range produced zero layers.
    """
    return _grow(spec, np.random.default_rng(spec.seed), budget=None)


def generate_within(
    family: str,
    seed: int,
    max_edges: int = 300,
    max_attempts: int = 200,
    layer_range: tuple[int, int] | None = None,
    children_range: tuple[int, int] | None = None,
) -> FlowNetwork:
    """Deterministic rejection sampling: redraw until the network fits the
    edge budget.  Oversized draws are abandoned mid-growth.

    Raises:
        EmptySpec: no draw fit within max_attempts.
    """
    for attempt in range(max_attempts):
        ss = np.random.SeedSequence([int(seed), attempt])
        spec = family_spec(
            family,
            seed=int(ss.generate_state(1, dtype=np.uint64)[0]),
            layer_range=layer_range,
            children_range=children_range,
        )
        try:
            return _grow(spec, np.random.default_rng(spec.seed), budget=max_edges)
        except _EdgeBudgetExceeded:
            continue
    raise EmptySpec(
        f"no {family} draw within {max_edges} edges after {max_attempts} attempts"
    )


def binary_network_with_edges(e: int) -> FlowNetwork:
    """Deterministic benchmark network with exactly e edges: the deepest
    full binary tree with at most e edges, padded to the exact count by
    extra sink children on the last internal node."""
    if e < 2:
        raise ValueError("need at least 2 edges")
    depth = 1
    while 2 ** (depth + 2) - 2 <= e:
        depth += 1
    base = 2 ** (depth + 1) - 2
    spec = ArborescenceSpec("binary", (depth, depth), (2, 2), seed=0)
    net = generate_arborescence(spec)
    if base == e:
        return net
    # pad: extra leaves under the last internal node keep label order valid
    last_internal = base - 2 ** depth  # largest non-sink edge label
    edges = list(net.edges)
    for extra in range(e - base):
        edges.append((last_internal, base + extra + 1))
    # old root id collides with the first new sink label; remap it to e + 1
    fixed = tuple((e + 1 if s == net.node_count else s, t) for s, t in edges)
    return FlowNetwork(node_count=e + 1, edges=fixed)


def sample_flows(network: FlowNetwork, cfg: FlowSamplerConfig, allow_undersampled: bool = False) -> FlowDataMatrix:
    """Synthesize conserved steady-state samples for an arborescence.

    Sink edges draw from their assigned mixture component; every other
    edge is the columnwise sum of its descendant sink edges, so the
    conservation equations hold to float addition error.
    """
    if not is_arborescence(network):
        raise NotArborescence("flow sampling requires an arborescence")
    rng = np.random.default_rng(cfg.seed)
    e = network.edge_count
    sinks = set(network.sink_nodes)
    out_edges: dict[int, list[int]] = {}
    for idx, (src, _) in enumerate(network.edges):
        out_edges.setdefault(src, []).append(idx)

    sink_idx = [idx for idx, (_, dst) in enumerate(network.edges) if dst in sinks]
    components = rng.integers(0, len(cfg.means), size=len(sink_idx))

    data = np.empty((e, cfg.n_s), dtype=np.float64)
    for idx, comp in zip(sink_idx, components):
        data[idx] = rng.normal(cfg.means[comp], cfg.stds[comp], size=cfg.n_s)

    # accumulate bottom-up: process edges by decreasing target depth
    depth: dict[int, int] = {}
    root = next(iter(network.source_nodes))
    order: list[int] = []
    stack = [(root, 0)]
    while stack:
        node, d = stack.pop()
        depth[node] = d
        for idx in out_edges.get(node, ()):
            order.append(idx)
            stack.append((network.edges[idx][1], d + 1))
    for idx in sorted(order, key=lambda i: depth[network.edges[i][1]], reverse=True):
        dst = network.edges[idx][1]
        if dst in sinks:
            continue
        child_rows = [data[j] for j in out_edges.get(dst, ())]
        data[idx] = np.sum(child_rows, axis=0)

    return FlowDataMatrix(data, allow_undersampled=allow_undersampled)


def add_noise(
    data: FlowDataMatrix, snr: SnrSetting, seed: int
) -> tuple[FlowDataMatrix, NoiseModel]:
    """Add zero-mean Gaussian noise at the requested signal-to-noise ratio.

    Homoscedastic mode shares one variance, the mean per-edge signal
    variance divided by snr; heteroscedastic mode scales each edge's own
    variance.  Returns the exact model used, for downstream whitening.
    """
    rng = np.random.default_rng(seed)
    signal_var = np.var(data.entries, axis=1, ddof=1)
    if np.all(signal_var <= 0):
        raise ValueError("signal variance is zero on every edge")
    if snr.kind == "homoscedastic":
        sigma2 = float(signal_var.mean()) / snr.snr
        model = NoiseModel.isotropic(sigma2, data.edge_count)
        noise = rng.normal(0.0, np.sqrt(sigma2), size=data.entries.shape)
    else:
        per_edge = np.maximum(signal_var, 1e-12 * signal_var.max()) / snr.snr
        model = NoiseModel.per_edge(per_edge)
        noise = rng.normal(0.0, 1.0, size=data.entries.shape) * np.sqrt(per_edge)[:, None]
    noisy = FlowDataMatrix(
        data.entries + noise, data.edge_labels, allow_undersampled=data.allow_undersampled
    )
    return noisy, model
