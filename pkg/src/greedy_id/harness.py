"""Desk-scale experiment runners: worked 2x2 examples, rank growth, basin study."""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .greedy import BELOW_TOLERANCE, gr_run, w_hat_from_controls
from .lin_system import AdmissibleSet, LinearSystem, TimeGrid, numerical_rank
from .observability import analyze, build_observability_basis
from .ogr import OgrConfig, ogr_initialize, ogr_step
from .online import identify, simulate_measurements
from .quantum.algorithms import QuantumGreedyConfig, gr_quantum_run, ogr_quantum_run
from .quantum.fitting import identify_quantum, simulate_quantum_measurements
from .quantum.monotonic import MonotonicConfig
from .quantum.system import QuantumSystem
from .rng import stream

log = logging.getLogger(__name__)

EXPERIMENTS = ("bad_example", "good_example", "rank_curve", "basin")
TABLE_RADII = (0.01, 0.10, 0.25, 0.50, 0.75, 1.00)
BASIN_TOLERANCE = 0.005

# Dipole system of the three-level reference problem.
REFERENCE_H = 1e-2 * np.diag([1.0, 2.0, 4.0])
REFERENCE_MU = np.array([
    [3.3617, 3.4347, 0.8416],
    [3.4347, 3.7763, 4.7552],
    [0.8416, 4.7552, 4.4226],
])
DESK_HORIZON = 40 * np.pi
DESK_STEPS = 4000

SCALE_NOTICE = ("NOTE: desk-scale basin study (T = {t:.4g}, {n} runs per radius); the full-scale "
                "study with T = 4000*pi and 1000 runs is not reproduced here.")


@dataclass(frozen=True)
class ExperimentConfig:
    """Plumbing for the harness runners; unused fields are ignored per experiment."""

    seed: int = 0
    experiment: str = "rank_curve"
    N: int = 10
    M: int = 10
    n_runs: int = 50
    radii: tuple[float, ...] = TABLE_RADII
    horizon: float = DESK_HORIZON
    n_steps: int = DESK_STEPS
    n_random: int = 6
    max_sweeps: int = 200
    n_starts: int = 10
    workers: int = 1
    output_path: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if not self.radii or any(not r > 0 for r in self.radii):
            raise ValueError("radii must be positive")
        if not self.horizon > 0 or self.n_steps < 1 or self.N < 1 or self.M < 1 or self.workers < 1:
            raise ValueError("horizon, n_steps, N, M and workers must be positive")
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["radii"] = list(self.radii)
        return d


# -- worked 2x2 examples ---------------------------------------------------------

EXAMPLE_A = np.eye(2)
EXAMPLE_C = np.array([[1.0, 0.0], [0.0, 0.0]])
EXAMPLE_B_TRUE = np.ones((2, 2))
BAD_BASIS = np.array([
    [[1.0, 0.0], [0.0, 0.0]],
    [[1.0, 0.0], [1.0, 0.0]],
    [[0.0, 1.0], [0.0, 0.0]],
    [[0.0, 1.0], [0.0, 1.0]],
])
BAD_ALPHA_TRUE = np.array([0.0, 1.0, 0.0, 1.0])
BAD_NULL_DIRECTIONS = np.array([[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]])


def example_grid() -> TimeGrid:
    return TimeGrid(1.0, 50)


def bad_example_system(grid: TimeGrid | None = None) -> LinearSystem:
    return LinearSystem(EXAMPLE_A, EXAMPLE_C, BAD_BASIS, np.zeros(2), grid or example_grid())


def good_example_system(grid: TimeGrid | None = None) -> LinearSystem:
    report = analyze(EXAMPLE_A, EXAMPLE_C)
    basis = build_observability_basis(report, 2)
    return LinearSystem(EXAMPLE_A, EXAMPLE_C, basis, np.zeros(2), grid or example_grid())


def bad_example_error(alpha) -> float:
    """Squared Frobenius error of ``B(alpha)`` for the bad basis: ``(1-a2)^2 + (1-a4)^2``."""
    a = np.asarray(alpha, dtype=float)
    return float((1 - a[1]) ** 2 + (1 - a[3]) ** 2)


def _check(cond: bool, message: str):
    if not cond:
        raise AssertionError(message)


def run_bad_example(grid: TimeGrid | None = None) -> dict:
    sys = bad_example_system(grid)
    adm = AdmissibleSet()
    res = gr_run(sys, adm)
    W = w_hat_from_controls(sys, res.controls)
    null_residual = float(np.abs(W @ BAD_NULL_DIRECTIONS.T).max())
    meas = simulate_measurements(sys, EXAMPLE_B_TRUE, res.controls)
    ident = identify(sys, range(4), res.controls, meas)
    ogr = _ogr_full(sys, OgrConfig(adm))
    report = {
        "w_hat": W.tolist(),
        "null_residual": null_residual,
        "certified_unique": ident.certified_unique,
        "alpha": ident.alpha.tolist(),
        "identifiable": ident.identifiable.tolist(),
        "error_formula": "(1 - alpha_2)^2 + (1 - alpha_4)^2",
        "error_at_alpha": bad_example_error(ident.alpha),
        "error_at_alpha_plus_kernel": bad_example_error(ident.alpha + 10 * BAD_NULL_DIRECTIONS[0]),
        "note": ident.apriori_error_note,
        "ogr_selected": ogr.selected,
        "ogr_stop_reason": ogr.stop_reason,
    }
    _check(null_residual <= 1e-10, f"W_hat does not annihilate the null directions ({null_residual:.3e})")
    _check(not ident.certified_unique, "bad basis was certified unique")
    _check(len(ogr.selected) == 2, f"OGR selected {ogr.selected}, expected two elements")
    return report


def run_good_example(grid: TimeGrid | None = None) -> dict:
    sys = good_example_system(grid)
    res = _ogr_full(sys, OgrConfig(AdmissibleSet()))
    meas = simulate_measurements(sys, EXAMPLE_B_TRUE, res.controls)
    ident = identify(sys, res.selected, res.controls, meas)
    B_approx = sys.combine(ident.alpha, res.selected)
    report = {
        "basis": sys.candidates.tolist(),
        "ogr_selected": res.selected,
        "ogr_stop_reason": res.stop_reason,
        "alpha": ident.alpha.tolist(),
        "certified_unique": ident.certified_unique,
        "B_approx": B_approx.tolist(),
    }
    expected = np.array([[1.0, 1.0], [0.0, 0.0]])
    _check(len(res.selected) == 2 and res.stop_reason == BELOW_TOLERANCE,
           f"OGR selected {res.selected} ({res.stop_reason}), expected 2 and a tolerance stop")
    _check(np.allclose(B_approx, expected, atol=1e-8, rtol=0),
           f"B_approx = {B_approx.tolist()}, expected {expected.tolist()}")
    _check(ident.certified_unique, "good basis was not certified")
    return report


def run_examples(grid: TimeGrid | None = None) -> dict:
    """Both 2x2 scenarios; raises ``AssertionError`` with diagnostics on mismatch."""
    return {"bad_example": run_bad_example(grid), "good_example": run_good_example(grid)}


# -- rank growth -----------------------------------------------------------------


@dataclass(frozen=True)
class RankCurve:
    """``gr[k]`` / ``ogr[k]`` is ``rank(W_hat)`` after ``k + 1`` controls."""

    gr: list[int]
    ogr: list[int]
    n_candidates: int


def random_observable_pair(rng: np.random.Generator, N: int, P: int | None = None, max_tries: int = 100):
    """Seeded ``(A, C)`` with ``rank O = N``; ``A`` is scaled by ``1/sqrt(N)``."""
    P = N if P is None else P
    for _ in range(max_tries):
        A = rng.standard_normal((N, N)) / np.sqrt(N)
        C = rng.standard_normal((P, N))
        if analyze(A, C).rank == N:
            return A, C
    raise RuntimeError("could not draw a fully observable pair")


def _ogr_full(sys: LinearSystem, cfg: OgrConfig, ranks: list[int] | None = None):
    state = ogr_initialize(sys, cfg)
    if ranks is not None and state.k:
        ranks.append(numerical_rank(state.w_hat))
    while not state.stopped and state.k < sys.n_candidates:
        state = ogr_step(sys, state, cfg)
        if ranks is not None and not state.stopped:
            ranks.append(numerical_rank(state.w_hat))
    if not state.stopped:
        state.result.stop_reason = "completed"
    return state.result


def run_rank_curve(cfg: ExperimentConfig, grid: TimeGrid | None = None) -> RankCurve:
    """Rank of ``W_hat`` per iteration for GR and OGR on a shuffled observability basis."""
    rng = stream(cfg.seed, 0)
    A, C = random_observable_pair(rng, cfg.N)
    basis = build_observability_basis(analyze(A, C), cfg.M)
    basis = basis[rng.permutation(len(basis))]
    sys = LinearSystem(A, C, basis, np.zeros(cfg.N), grid or TimeGrid(1.0, 20))
    adm = AdmissibleSet()
    gr = gr_run(sys, adm)
    K = sys.n_candidates
    gr_ranks, W = [], np.zeros((K, K))
    for eps in gr.controls:
        W = W + w_hat_from_controls(sys, [eps])
        gr_ranks.append(numerical_rank(W))
    ogr_ranks: list[int] = []
    _ogr_full(sys, OgrConfig(adm), ogr_ranks)
    return RankCurve(gr_ranks, ogr_ranks, K)


# -- basin of attraction ---------------------------------------------------------


def canonical_symmetric_basis(N: int) -> np.ndarray:
    """``e_ii`` for every ``i``, then ``e_ij + e_ji`` for ``i < j`` in row order."""
    mats = []
    for i in range(N):
        m = np.zeros((N, N))
        m[i, i] = 1.0
        mats.append(m)
    for i in range(N):
        for j in range(i + 1, N):
            m = np.zeros((N, N))
            m[i, j] = m[j, i] = 1.0
            mats.append(m)
    return np.array(mats)


def random_symmetric(rng: np.random.Generator, count: int, N: int) -> np.ndarray:
    X = rng.standard_normal((count, N, N))
    return 0.5 * (X + np.swapaxes(X, 1, 2))


def reference_system(candidates, grid: TimeGrid) -> QuantumSystem:
    e = np.eye(3)
    return QuantumSystem(REFERENCE_H, candidates, e[0], e[2], grid)


@dataclass
class BasinResult:
    radii: list[float]
    counts: dict[str, list[int]]
    n_runs: int
    alpha_true: dict[str, list[float]]
    selected: dict[str, list[int]]
    timings: dict[str, float] = field(default_factory=dict)

    def rows(self) -> list[list]:
        header = ["method"] + [f"{r:g}" for r in self.radii]
        return [header] + [[name] + list(c) for name, c in self.counts.items()]


def _quantum_cfg(cfg: ExperimentConfig) -> QuantumGreedyConfig:
    return QuantumGreedyConfig(MonotonicConfig(max_sweeps=cfg.max_sweeps), n_starts=cfg.n_starts, seed=cfg.seed,
                               parallel=cfg.workers > 1, max_workers=cfg.workers)


def basin_counts(qsys: QuantumSystem, selected: Sequence[int], controls, mu_true,
                 radii: Sequence[float], n_runs: int, seed: int, tag: int,
                 workers: int = 1) -> tuple[list[int], np.ndarray]:
    """Successes per radius of single local solves started uniformly around ``alpha_true``.

    Run ``(i, j)`` draws its start from its own stream, so counts do not
    depend on ``workers``.
    """
    selected = list(selected)
    flat = qsys.candidates[selected].reshape(len(selected), -1).T
    alpha_true = np.linalg.lstsq(flat, np.asarray(mu_true).ravel(), rcond=None)[0]
    meas = simulate_quantum_measurements(qsys, mu_true, controls)

    def run(ij):
        i, j = ij
        init = alpha_true + stream(seed, 2, tag, i, j).uniform(-radii[i], radii[i], size=len(selected))
        fit = identify_quantum(qsys, selected, controls, meas, init=init)
        return i, bool(np.max(np.abs(fit.alpha - alpha_true)) <= BASIN_TOLERANCE)

    jobs = [(i, j) for i in range(len(radii)) for j in range(n_runs)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(ij) for ij in jobs]
    counts = [0] * len(radii)
    for i, hit in outcomes:
        counts[i] += hit
    return counts, alpha_true


def run_basin(cfg: ExperimentConfig) -> BasinResult:
    """GR on the canonical basis vs OGR on the canonical + random set.

    Writes ``basin.csv`` under ``cfg.output_path`` when it is set.
    """
    grid = TimeGrid(cfg.horizon, cfg.n_steps)
    log.warning(SCALE_NOTICE.format(t=cfg.horizon, n=cfg.n_runs))
    canon = canonical_symmetric_basis(3)
    extra = random_symmetric(stream(cfg.seed, 1), cfg.n_random, 3)
    qcfg = _quantum_cfg(cfg)
    timings = {}

    t0 = time.perf_counter()
    q_gr = reference_system(canon, grid)
    gr = gr_quantum_run(q_gr, qcfg)
    timings["gr_offline"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    q_ogr = reference_system(np.concatenate([canon, extra]), grid)
    ogr = ogr_quantum_run(q_ogr, qcfg)
    timings["ogr_offline"] = time.perf_counter() - t0

    counts, alphas = {}, {}
    for tag, (name, q, res) in enumerate((("GR", q_gr, gr), ("OGR", q_ogr, ogr))):
        t0 = time.perf_counter()
        counts[name], a = basin_counts(q, res.selected, res.controls, REFERENCE_MU,
                                       cfg.radii, cfg.n_runs, cfg.seed, tag, cfg.workers)
        alphas[name] = a.tolist()
        timings[f"{name.lower()}_online"] = time.perf_counter() - t0

    out = BasinResult(list(cfg.radii), counts, cfg.n_runs, alphas,
                      {"GR": gr.selected, "OGR": ogr.selected}, timings)
    if cfg.output_path:
        write_basin_csv(Path(cfg.output_path) / "basin.csv", out)
    return out


def write_basin_csv(path, result: BasinResult) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(result.rows())
    return path


def read_basin_csv(path) -> tuple[list[float], dict[str, list[int]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    radii = [float(x) for x in rows[0][1:]]
    return radii, {r[0]: [int(x) for x in r[1:]] for r in rows[1:]}
