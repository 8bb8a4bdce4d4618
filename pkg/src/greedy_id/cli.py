"""``greedy-id`` command line.

Exit status: 0 on success, 2 when an experiment's expected outcome is not
met, 1 on I/O or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .greedy import gr_run
from .harness import ExperimentConfig, run_basin, run_examples, run_rank_curve
from .lin_system import AdmissibleSet
from .observability import analyze, build_observability_basis, max_identifiable
from .ogr import OgrConfig, ogr_run
from .online import Measurements, identify, simulate_measurements
from .quantum.algorithms import DEFAULT_TOLERANCE, QuantumGreedyConfig, gr_quantum_run, ogr_quantum_run
from .quantum.fitting import identify_quantum, simulate_quantum_measurements
from .quantum.monotonic import MonotonicConfig
from .rng import stream

log = logging.getLogger("greedy_id")


class ConfigError(Exception):
    pass


def _load(path, what):
    if path is None:
        raise ConfigError(f"--{what} is required")
    try:
        return io.read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {what} file {path}: {exc}") from exc


def _emit(args, name: str, doc) -> None:
    if args.out:
        path = io.write_json(Path(args.out) / name, doc)
        print(f"wrote {path}")
    else:
        print(json.dumps(doc, indent=1))


def _linear_problem(args):
    doc = _load(args.problem, "problem")
    return io.linear_problem_from_json(doc), doc


def cmd_obsrank(args):
    sys_, _ = _linear_problem(args)
    rep = analyze(sys_.A, sys_.C)
    _emit(args, "observability.json", {
        "kind": "observability",
        "rank": rep.rank,
        "n_states": sys_.n_states,
        "singular_values": rep.singular_values.tolist(),
        "max_identifiable": max_identifiable(rep, sys_.n_channels),
        "basis": build_observability_basis(rep, sys_.n_channels).tolist(),
    })


def cmd_gr_linear(args):
    sys_, doc = _linear_problem(args)
    res = gr_run(sys_, AdmissibleSet(args.radius or doc.get("radius", 1.0)), strict=args.strict)
    _emit(args, "result.json", io.result_to_json(res))


def cmd_ogr_linear(args):
    sys_, doc = _linear_problem(args)
    cfg = OgrConfig(AdmissibleSet(args.radius or doc.get("radius", 1.0)), tol=args.tol, parallel=args.parallel)
    _emit(args, "result.json", io.result_to_json(ogr_run(sys_, cfg)))


def cmd_simulate(args):
    doc = _load(args.problem, "problem")
    controls = io.result_from_json(_load(args.controls, "controls")).controls
    if doc.get("kind") == "quantum":
        qsys = io.quantum_problem_from_json(doc)
        if "mu_true" not in doc:
            raise ConfigError("problem has no mu_true")
        out = simulate_quantum_measurements(qsys, np.asarray(doc["mu_true"], dtype=float), controls)
    else:
        sys_ = io.linear_problem_from_json(doc)
        if "B_true" not in doc:
            raise ConfigError("problem has no B_true")
        out = simulate_measurements(sys_, np.asarray(doc["B_true"], dtype=float), controls).outputs
    _emit(args, "measurements.json", io.measurements_to_json(out))


def cmd_identify(args):
    sys_, _ = _linear_problem(args)
    res = io.result_from_json(_load(args.controls, "controls"))
    meas = Measurements(io.measurements_from_json(_load(args.measurements, "measurements")))
    ident = identify(sys_, res.selected, res.controls, meas)
    _emit(args, "identification.json", {
        "kind": "identification",
        "selected": res.selected,
        "alpha": ident.alpha.tolist(),
        "residual": ident.residual,
        "w_min_eig": ident.w_min_eig,
        "w_rank": ident.w_rank,
        "certified_unique": ident.certified_unique,
        "identifiable": ident.identifiable.tolist(),
        "note": ident.apriori_error_note,
        "B_approx": sys_.combine(ident.alpha, res.selected).tolist(),
    })


def _quantum_cfg(args) -> QuantumGreedyConfig:
    return QuantumGreedyConfig(
        MonotonicConfig(max_sweeps=args.max_sweeps),
        n_starts=args.n_starts,
        seed=args.seed,
        tol=args.tol or DEFAULT_TOLERANCE,
        parallel=args.parallel,
    )


def cmd_gr_quantum(args):
    qsys = io.quantum_problem_from_json(_load(args.problem, "problem"))
    _emit(args, "result.json", io.result_to_json(gr_quantum_run(qsys, _quantum_cfg(args))))


def cmd_ogr_quantum(args):
    qsys = io.quantum_problem_from_json(_load(args.problem, "problem"))
    _emit(args, "result.json", io.result_to_json(ogr_quantum_run(qsys, _quantum_cfg(args))))


def cmd_identify_quantum(args):
    doc = _load(args.problem, "problem")
    qsys = io.quantum_problem_from_json(doc)
    res = io.result_from_json(_load(args.controls, "controls"))
    if args.measurements:
        meas = io.measurements_from_json(_load(args.measurements, "measurements"))
    elif "mu_true" in doc:
        meas = simulate_quantum_measurements(qsys, np.asarray(doc["mu_true"], dtype=float), res.controls)
    else:
        raise ConfigError("need --measurements or mu_true in the problem")
    fit = identify_quantum(qsys, res.selected, res.controls, meas, n_starts=args.n_starts,
                           box_radius=args.box, rng=stream(args.seed, 3))
    _emit(args, "identification.json", {
        "kind": "identification",
        "selected": res.selected,
        "alpha": fit.alpha.tolist(),
        "residual": fit.residual,
        "mu_approx": qsys.combine(fit.alpha, res.selected).tolist(),
    })


def _experiment_cfg(args, experiment: str) -> ExperimentConfig:
    doc = _load(args.config, "config") if args.config else {}
    doc = dict(doc)
    doc["experiment"] = experiment
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.out:
        doc["output_path"] = args.out
    try:
        return ExperimentConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def cmd_examples(args):
    report = run_examples()
    _emit(args, "examples.json", {"kind": "examples", **report})


def cmd_rank_curve(args):
    cfg = _experiment_cfg(args, "rank_curve")
    curve = run_rank_curve(cfg)
    _emit(args, "rank_curve.json", {"kind": "rank_curve", "config": cfg.to_dict(), **asdict(curve)})
    # full observation (P = N): each control fills one channel block of N directions
    expected = [cfg.N * (k + 1) for k in range(cfg.M)]
    if curve.ogr[: cfg.M] != expected:
        raise AssertionError(f"OGR ranks {curve.ogr} do not grow by {cfg.N} per iteration")


def cmd_basin(args):
    cfg = _experiment_cfg(args, "basin")
    res = run_basin(cfg)
    print(_table(res.rows()))
    _emit(args, "basin.json", {"kind": "basin", "config": cfg.to_dict(), "counts": res.counts,
                               "radii": res.radii, "n_runs": res.n_runs, "selected": res.selected,
                               "alpha_true": res.alpha_true, "timings": res.timings})


def _table(rows) -> str:
    return "\n".join("\t".join(str(x) for x in r) for r in rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="greedy-id", description="Greedy control design for model identification.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--out", help="output directory (default: print JSON)")
        return sp

    for name, fn, help_ in (
        ("obsrank", cmd_obsrank, "observability rank and basis"),
        ("gr-linear", cmd_gr_linear, "GR controls for a linear problem"),
        ("ogr-linear", cmd_ogr_linear, "OGR controls for a linear problem"),
    ):
        sp = add(name, fn, help_)
        sp.add_argument("--problem", required=True)
        if name != "obsrank":
            sp.add_argument("--radius", type=float, help="L2 ball radius (default: problem or 1)")
        if name == "gr-linear":
            sp.add_argument("--strict", action="store_true", help="fail on a singular fitting block")
        if name == "ogr-linear":
            sp.add_argument("--tol", type=float, help="stopping tolerance (default: scale-aware)")
            sp.add_argument("--parallel", action="store_true")

    sp = add("simulate", cmd_simulate, "synthetic measurements from the true operator")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--controls", required=True, help="result JSON with controls")

    sp = add("identify", cmd_identify, "online identification, linear case")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--controls", required=True)
    sp.add_argument("--measurements", required=True)

    for name, fn in (("gr-quantum", cmd_gr_quantum), ("ogr-quantum", cmd_ogr_quantum)):
        sp = add(name, fn, f"{name.split('-')[0].upper()} controls for a quantum problem")
        sp.add_argument("--problem", required=True)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--n-starts", type=int, default=10)
        sp.add_argument("--max-sweeps", type=int, default=200)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--parallel", action="store_true")

    sp = add("identify-quantum", cmd_identify_quantum, "online identification, quantum case")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--controls", required=True)
    sp.add_argument("--measurements", help="default: simulate from mu_true in the problem")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-starts", type=int, default=10)
    sp.add_argument("--box", type=float, default=1.0)

    for name, fn, help_ in (
        ("examples", cmd_examples, "the two worked 2x2 examples"),
        ("rank-curve", cmd_rank_curve, "rank of W_hat per iteration, GR vs OGR"),
        ("basin", cmd_basin, "desk-scale basin-of-attraction study"),
    ):
        sp = add(name, fn, help_)
        sp.add_argument("--config", help="ExperimentConfig JSON")
        sp.add_argument("--seed", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.fn(args)
    except AssertionError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
