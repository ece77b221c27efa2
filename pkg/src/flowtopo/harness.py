"""Experiment harness: single end-to-end runs, the SNR-by-sample-size
sweep, and polynomial-runtime scaling checks.

Every trial derives its own random seed from the base seed and the trial
coordinates, so results are independent of execution order and identical
across reruns.  Flow and noise seeds exclude the SNR coordinate on
purpose: cells that differ only in SNR see the same underlying draws,
which makes cross-SNR comparisons paired.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .canonical_cutset import canonicalize
from .errors import FlowtopoError, ParseError
from .graph_model import FlowNetwork
from .io import dump_result, load_data_csv, load_noise_model
from .noise_pipeline import (
    DEFAULT_ALPHA,
    NoiseModel,
    reconstruct_exact,
    reconstruct_noisy,
)
from .nullspace import estimate_null_basis, find_valid_partition, to_fcutset_form
from .realize import ReconstructionResult, realize_topology, to_dot, verify_against_truth
from .synth import (
    FAMILIES,
    FlowSamplerConfig,
    SnrSetting,
    add_noise,
    binary_network_with_edges,
    generate_within,
    sample_flows,
)

DEFAULT_SNR_LIST = (100.0, 50.0, 30.0, 10.0, 5.0)


def _seeds(*parts: int, count: int = 2) -> tuple[int, ...]:
    ss = np.random.SeedSequence([int(p) for p in parts])
    return tuple(int(v) for v in ss.generate_state(count, dtype=np.uint64))


@dataclass(frozen=True)
class SweepConfig:
    families: tuple[str, ...] = FAMILIES
    networks_per_family: int = 8
    snr_list: tuple[float, ...] = DEFAULT_SNR_LIST
    z_list: tuple[int, ...] = tuple(range(1, 51))
    trials: int = 100
    alpha: float = DEFAULT_ALPHA
    base_seed: int = 0
    max_edges: int = 300
    noise_kind: str = "homoscedastic"
    threads: int = 1
    # wall-clock allowance per cell; pathological low-SNR cells get cut off
    cell_budget_s: float | None = None

    def __post_init__(self):
        if not self.families or not self.snr_list or not self.z_list:
            raise ValueError("families, snr_list and z_list must be nonempty")
        if self.trials < 1 or self.networks_per_family < 1 or self.threads < 1:
            raise ValueError("trials, networks_per_family and threads must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    family: str
    network_index: int
    edge_count: int
    snr: float
    z: int
    accuracy: float
    trials_done: int
    median_seconds: float
    is_min_z: bool
    aborted: bool = False


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    config: SweepConfig

    def min_z(self, family: str, network_index: int, snr: float) -> int | None:
        """Smallest tested z with every trial exact, or None."""
        for row in self.rows:
            if (
                row.family == family
                and row.network_index == network_index
                and row.snr == snr
                and row.is_min_z
            ):
                return row.z
        return None

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            _write_sweep_header(fh)
            writer = csv.writer(fh)
            for row in self.rows:
                writer.writerow(_sweep_csv_row(row))


def _write_sweep_header(fh) -> None:
    csv.writer(fh).writerow(
        ["family", "network", "e", "snr", "z", "accuracy", "trials",
         "median_seconds", "min_z_flag", "aborted"]
    )


def _sweep_csv_row(row: SweepRow) -> list[Any]:
    return [
        row.family, row.network_index, row.edge_count, f"{row.snr:g}", row.z,
        f"{row.accuracy:.6f}", row.trials_done, f"{row.median_seconds:.6g}",
        int(row.is_min_z), int(row.aborted),
    ]


def run_trial(
    network: FlowNetwork,
    snr: SnrSetting,
    n_s: int,
    flow_seed: int,
    noise_seed: int,
    alpha: float = DEFAULT_ALPHA,
) -> tuple[bool, float]:
    """One seeded draw-and-reconstruct; returns (exact?, seconds)."""
    if not isinstance(snr, SnrSetting):
        snr = SnrSetting(float(snr))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = FlowSamplerConfig(n_s=n_s, seed=flow_seed)
        data = sample_flows(network, cfg, allow_undersampled=True)
        noisy, model = add_noise(data, snr, seed=noise_seed)
        start = time.perf_counter()
        try:
            result = reconstruct_noisy(noisy, model, alpha=alpha)
            ok = verify_against_truth(result, network)
        except FlowtopoError:
            ok = False
        return ok, time.perf_counter() - start


def _run_cell(
    network: FlowNetwork,
    snr: SnrSetting,
    z: int,
    config: SweepConfig,
    coord: tuple[int, int],
) -> tuple[float, int, float, bool]:
    """Accuracy, completed trials, median seconds, aborted flag."""
    fam_i, net_i = coord
    n_s = z * network.edge_count
    seeds = [
        _seeds(config.base_seed, fam_i, net_i, z, trial)
        for trial in range(config.trials)
    ]
    timings: list[float] = []
    hits = 0
    done = 0
    aborted = False
    start = time.perf_counter()

    def one(seed_pair: tuple[int, ...]) -> tuple[bool, float]:
        return run_trial(network, snr, n_s, seed_pair[0], seed_pair[1], config.alpha)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            for ok, secs in pool.map(one, seeds):
                hits += ok
                timings.append(secs)
                done += 1
    else:
        for pair in seeds:
            ok, secs = one(pair)
            hits += ok
            timings.append(secs)
            done += 1
            if (
                config.cell_budget_s is not None
                and time.perf_counter() - start > config.cell_budget_s
                and done < config.trials
            ):
                aborted = True
                break
    accuracy = hits / done if done else 0.0
    return accuracy, done, float(np.median(timings)) if timings else 0.0, aborted


def find_min_z(
    network: FlowNetwork,
    snr: SnrSetting,
    z_list: tuple[int, ...],
    trials: int,
    alpha: float = DEFAULT_ALPHA,
    base_seed: int = 0,
) -> int | None:
    """Scan z ascending; return the first z whose every trial is exact."""
    e = network.edge_count
    for z in sorted(z_list):
        ok_all = True
        for trial in range(trials):
            fs, ns = _seeds(base_seed, 0, 0, z, trial)
            ok, _ = run_trial(network, snr, z * e, fs, ns, alpha)
            if not ok:
                ok_all = False
                break
        if ok_all:
            return z
    return None


def run_sweep(config: SweepConfig, out_path: str | Path | None = None) -> SweepResult:
    """Full protocol: per family, draw networks, scan SNR and z ascending
    with early stop at the first all-exact z.  When out_path is given,
    rows stream to the CSV as they finish so an interrupted run leaves a
    usable partial file."""
    rows: list[SweepRow] = []
    sink = open(out_path, "w", encoding="utf-8", newline="") if out_path else None
    try:
        if sink:
            _write_sweep_header(sink)
        for fam_i, family in enumerate(config.families):
            for net_i in range(config.networks_per_family):
                net_seed = _seeds(config.base_seed, fam_i, net_i, count=1)[0]
                network = generate_within(family, net_seed, max_edges=config.max_edges)
                for snr_value in config.snr_list:
                    snr = SnrSetting(snr_value, config.noise_kind)
                    found_min = False
                    for z in sorted(config.z_list):
                        acc, done, med, aborted = _run_cell(
                            network, snr, z, config, (fam_i, net_i)
                        )
                        is_min = not found_min and done == config.trials and acc == 1.0
                        row = SweepRow(
                            family=family,
                            network_index=net_i,
                            edge_count=network.edge_count,
                            snr=snr_value,
                            z=z,
                            accuracy=acc,
                            trials_done=done,
                            median_seconds=med,
                            is_min_z=is_min,
                            aborted=aborted,
                        )
                        rows.append(row)
                        if sink:
                            csv.writer(sink).writerow(_sweep_csv_row(row))
                            sink.flush()
                        if is_min:
                            found_min = True
                            break
    finally:
        if sink:
            sink.close()
    return SweepResult(rows=tuple(rows), config=config)


def run_pipeline(
    data_file: str | Path,
    mode: str = "exact",
    noise_file: str | Path | None = None,
    sigma2: float | None = None,
    alpha: float = DEFAULT_ALPHA,
    transposed: bool = False,
    allow_undersampled: bool = False,
    zero_tol: float | None = None,
    out_prefix: str | Path | None = None,
) -> ReconstructionResult:
    """Load a sample CSV, reconstruct, optionally write result JSON + DOT."""
    data = load_data_csv(data_file, transposed=transposed, allow_undersampled=allow_undersampled)
    if mode == "exact":
        kwargs = {} if zero_tol is None else {"zero_tol": zero_tol}
        result = reconstruct_exact(data, **kwargs)
    elif mode == "noisy":
        if noise_file is not None:
            model = load_noise_model(noise_file, data.edge_count)
        elif sigma2 is not None:
            model = NoiseModel.isotropic(sigma2, data.edge_count)
        else:
            raise ParseError("noisy mode needs a noise-model file or sigma2")
        result = reconstruct_noisy(data, model, alpha=alpha)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if out_prefix is not None:
        prefix = Path(out_prefix)
        dump_result(result, prefix.with_suffix(".json"))
        prefix.with_suffix(".dot").write_text(to_dot(result) + "\n", encoding="utf-8")
    return result


@dataclass(frozen=True)
class ScalingBench:
    sizes: tuple[int, ...]
    m_values: tuple[int, ...]
    stage_seconds: dict[str, tuple[float, ...]] = field(default_factory=dict)
    total_seconds: tuple[float, ...] = ()
    slope_total: float = math.nan
    slope_alg2_vs_m: float = math.nan
    slope_svd: float = math.nan


def _timed(fn: Callable[[], Any], min_duration: float = 0.01) -> float:
    """Per-call seconds, looped until the measurement exceeds a floor so
    microsecond stages do not drown in timer noise."""
    start = time.perf_counter()
    fn()
    once = time.perf_counter() - start
    if once >= min_duration:
        return once
    loops = max(3, int(math.ceil(min_duration / max(once, 1e-7))))
    start = time.perf_counter()
    for _ in range(loops):
        fn()
    return (time.perf_counter() - start) / loops


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    mask = (np.asarray(x) > 0) & (np.asarray(y) > 0)
    if mask.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(np.asarray(x)[mask]), np.log(np.asarray(y)[mask]), 1)[0])


def run_scaling_bench(
    sizes: tuple[int, ...] = (32, 64, 128, 256),
    repeats: int = 3,
    z: int = 2,
    seed: int = 0,
) -> ScalingBench:
    """Time the noise-free pipeline stages on benchmark networks of exact
    edge counts and fit log-log growth slopes."""
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    stage_names = ("svd", "reduce", "alg1", "alg2", "total")
    per_stage: dict[str, list[float]] = {name: [] for name in stage_names}
    m_values: list[int] = []
    for e in sizes:
        network = binary_network_with_edges(e)
        sinks = set(network.sink_nodes)
        m_values.append(sum(1 for _, dst in network.edges if dst not in sinks))
        cfg = FlowSamplerConfig(n_s=z * e, seed=_seeds(seed, e, count=1)[0])
        data = sample_flows(network, cfg, allow_undersampled=z * e <= e)
        samples = {name: [] for name in stage_names}
        for _ in range(repeats):
            basis = estimate_null_basis(data)
            partition = find_valid_partition(basis)
            cutset = to_fcutset_form(basis, partition)
            canon = canonicalize(cutset)
            samples["svd"].append(_timed(lambda: estimate_null_basis(data)))
            samples["reduce"].append(
                _timed(lambda: to_fcutset_form(basis, find_valid_partition(basis)))
            )
            samples["alg1"].append(_timed(lambda: canonicalize(cutset)))
            samples["alg2"].append(_timed(lambda: realize_topology(canon)))
            samples["total"].append(_timed(lambda: reconstruct_exact(data)))
        for name in stage_names:
            per_stage[name].append(float(np.median(samples[name])))
    sizes_arr = np.array(sizes, dtype=float)
    return ScalingBench(
        sizes=tuple(sizes),
        m_values=tuple(m_values),
        stage_seconds={name: tuple(vals) for name, vals in per_stage.items()},
        total_seconds=tuple(per_stage["total"]),
        slope_total=_loglog_slope(sizes_arr, np.array(per_stage["total"])),
        slope_alg2_vs_m=_loglog_slope(
            np.array(m_values, dtype=float), np.array(per_stage["alg2"])
        ),
        slope_svd=_loglog_slope(sizes_arr, np.array(per_stage["svd"])),
    )
