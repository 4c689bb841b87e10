"""Command-line orchestration for exact analyses and training sweeps.

Subcommands: gen, importance, threshold, sweep, misalign, strategies, report.
Settings come from an optional JSON config file with flag overrides; every
command echoes its effective settings into the output directory so runs are
reproducible.  Sweep run seeds derive from (master_seed, beta, run_id) via a
numpy SeedSequence, so adding runs or betas never perturbs existing rows.
Training runs execute in a process pool sized by --workers (or the
DECLAB_WORKERS environment variable); numeric CSV output is full-precision
repr text behind a schema comment line.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import datasets as ds
from . import importance as imp
from . import neural
from .decoders import (
    RepetitionProblem,
    StabilizerProblem,
    baseline_table,
    lookup_table_decoder,
    mld_degenerate,
)
from .codes import build_code
from .noise import BiasedBitflipModel, DepolarizingModel, sample_rates, scale_knob

_PROBLEM_CACHE: dict[str, object] = {}


def build_problem(cfg: dict):
    """Build (and cache) the decoding problem described by a config dict.

    Repetition: {"kind": "repetition", "n", "p", "alpha"}.
    QECC: {"kind": "qecc", "code", "p", "sigma2", "rates_seed"} or explicit
    {"rates": [...]}; rates are drawn once from the seeded sampler so runs
    are bit-reproducible.
    """
    key = json.dumps(cfg, sort_keys=True)
    if key in _PROBLEM_CACHE:
        return _PROBLEM_CACHE[key]
    if cfg["kind"] == "repetition":
        problem = RepetitionProblem(BiasedBitflipModel(cfg["n"], cfg["p"], cfg["alpha"]))
    elif cfg["kind"] == "qecc":
        code = build_code(cfg["code"])
        if "rates" in cfg:
            rates = tuple(cfg["rates"])
        else:
            rng = np.random.default_rng(cfg.get("rates_seed", 0))
            rates = sample_rates(code.n, cfg["p"], cfg.get("sigma2", 0.0), rng)
        problem = StabilizerProblem(code, DepolarizingModel(code.n, rates))
    else:
        raise ValueError(f"unknown problem kind {cfg['kind']!r}")
    _PROBLEM_CACHE[key] = problem
    return problem


def _write_csv(path: Path, schema: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: declab/{schema}/v1\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def read_csv(path) -> tuple[str, list[dict]]:
    """Read a schema-stamped CSV back into dicts of strings."""
    with open(path) as fh:
        schema = fh.readline().strip().lstrip("# ")
        reader = csv.DictReader(fh)
        return schema, list(reader)


def _echo_config(out: Path, payload: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _merged_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
    for key, value in vars(args).items():
        if key in ("config", "func") or value is None:
            continue
        cfg[key] = value
    return cfg


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise SystemExit(
            f"missing required settings (flag or config field): {', '.join(missing)}"
        )


def _problem_cfg(cfg: dict) -> dict:
    if "problem" in cfg:
        return cfg["problem"]
    if cfg.get("code"):
        out = {"kind": "qecc", "code": cfg["code"], "p": cfg["p"],
               "sigma2": cfg.get("sigma2", 0.0),
               "rates_seed": cfg.get("rates_seed", 0)}
    else:
        out = {"kind": "repetition", "n": cfg.get("n", 8), "p": cfg["p"],
               "alpha": cfg.get("alpha", 1.0)}
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    cfg = _merged_config(args)
    _require(cfg, "out", "p", "n_samples")
    out = Path(cfg["out"])
    pcfg = _problem_cfg(cfg)
    problem = build_problem(pcfg)
    label_kind = cfg.get("label_kind") or (
        "classical_error" if pcfg["kind"] == "repetition" else "logical_class"
    )
    rng = np.random.default_rng(np.random.SeedSequence([cfg.get("seed", 0)]))
    dataset, _ = ds.sample_dataset(problem, cfg["n_samples"], label_kind, rng)
    _echo_config(out, cfg)
    dataset.write_csv(
        out / "dataset.csv",
        sidecar={
            "model": json.loads(problem.model.to_json()),
            "seed": cfg.get("seed", 0),
            "n_samples": cfg["n_samples"],
            "label_kind": label_kind,
        },
    )
    return 0


def _tables_for(problem, baseline_name: str):
    if isinstance(problem, RepetitionProblem):
        mld = problem.mld_table()
    else:
        mld = mld_degenerate(problem)
    if baseline_name == "mld":
        base = mld
    else:
        base = baseline_table(problem)
    return base, mld


def cmd_importance(args) -> int:
    cfg = _merged_config(args)
    _require(cfg, "out", "p")
    out = Path(cfg["out"])
    problem = build_problem(_problem_cfg(cfg))
    base, mld = _tables_for(problem, cfg.get("baseline", "default"))
    report = imp.masses(problem, base, mld)
    _echo_config(out, cfg)
    with open(out / "importance.json", "w") as fh:
        fh.write(report.to_json())
    report.write_weight_csv(out / "importance_weights.csv")
    return 0


def cmd_threshold(args) -> int:
    cfg = _merged_config(args)
    _require(cfg, "out", "p", "alpha")
    out = Path(cfg["out"])
    report = imp.threshold_beta(
        cfg["p"], cfg.get("alpha", 1.0), cfg.get("n", 8), cfg.get("grid_step", 0.05)
    )
    _echo_config(out, cfg)
    with open(out / "threshold.json", "w") as fh:
        fh.write(report.to_json())
    return 0


def _run_one(task: dict) -> dict:
    """One training run inside a worker; failures become lep-1.0 sentinel rows."""
    problem = build_problem(task["problem"])
    seed_seq = neural.derive_seed(
        task["master_seed"], int(round(task["beta"] * 1e6)), task["run_id"]
    )
    rng = np.random.default_rng(seed_seq)
    hp = neural.sample_hyperparameters(neural.SearchSpace(), rng)
    row = {
        "beta": task["beta"],
        "run_id": task["run_id"],
        "seed": int(seed_seq.generate_state(1)[0]),
        **hp,
        "batch_size": task["train"]["batch_size"],
        "lep": 1.0,
        "best_epoch": -1,
        "failed": True,
    }
    if task.get("strategy"):
        row["strategy"] = task["strategy"]
    try:
        arch = neural.arch_for_problem(
            problem, (hp["width"],) * hp["n_layers"], hp["dropout"]
        )
        config = neural.TrainConfig(
            learning_rate=hp["learning_rate"],
            batch_size=task["train"]["batch_size"],
            max_epochs=task["train"]["max_epochs"],
            eval_every=task["train"]["eval_every"],
            early_stop_patience=task["train"]["early_stop_patience"],
            knob_beta=task["beta"],
            mode=task["train"]["mode"],
            n_train=task["train"]["n_train"],
            seed=row["seed"],
        )
        train_model = None
        if task.get("strategy") == "unweighted":
            model = problem.model
            train_model = DepolarizingModel(
                model.n, (task["beta"] * task["mean_p"],) * model.n
            )
        trained = neural.train(problem, arch, config, train_model)
        row["lep"] = trained.best_validation_lep
        row["best_epoch"] = trained.best_epoch
        row["failed"] = False
    except Exception as exc:  # noqa: BLE001 - sweep rows record failures
        row["error"] = repr(exc)
    return row


def _pool_map(tasks: list[dict], workers: int):
    if workers <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, tasks, chunksize=1))


def _train_block(cfg: dict) -> dict:
    return {
        "batch_size": cfg.get("batch_size", 100),
        "max_epochs": cfg.get("max_epochs", 300),
        "eval_every": cfg.get("eval_every", 10),
        "early_stop_patience": cfg.get("early_stop_patience", 10**9),
        "mode": cfg.get("mode", "sampled"),
        "n_train": cfg.get("n_train", 2000),
    }


def _summary_rows(rows: list[dict], keys: tuple[str, ...]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for group_key in sorted(groups):
        leps = np.array([r["lep"] for r in groups[group_key]])
        entry = dict(zip(keys, group_key))
        entry.update(
            runs=len(leps),
            best_lep=float(leps.min()),
            median_lep=float(np.median(leps)),
            q25_lep=float(np.percentile(leps, 25)),
            q75_lep=float(np.percentile(leps, 75)),
        )
        out.append(entry)
    return out


def cmd_sweep(args) -> int:
    cfg = _merged_config(args)
    _require(cfg, "out", "p", "betas", "runs_per_beta")
    out = Path(cfg["out"])
    pcfg = _problem_cfg(cfg)
    problem = build_problem(pcfg)
    betas = sorted(cfg["betas"])
    master = cfg.get("seed", 0)
    train_block = _train_block(cfg)
    tasks = [
        {"problem": pcfg, "beta": beta, "run_id": run_id, "master_seed": master,
         "train": train_block}
        for beta in betas
        for run_id in range(cfg["runs_per_beta"])
    ]
    rows = _pool_map(tasks, cfg.get("workers") or _default_workers())
    rows.sort(key=lambda r: (r["beta"], r["run_id"]))

    base, mld = _tables_for(problem, "default")
    criterion = "nondegenerate" if pcfg["kind"] == "repetition" else "degenerate"
    baseline_lep = problem.lep(base, criterion).lep
    mld_lep = problem.lep(mld, criterion).lep
    lookup_lep = _lookup_reference_lep(problem, pcfg, train_block, master, criterion)
    for row in rows:
        row["beat_lookup_table"] = bool(row["lep"] < lookup_lep)
        row["beat_baseline"] = bool(row["lep"] < baseline_lep)

    header = [
        "beta", "run_id", "seed", "learning_rate", "n_layers", "width", "dropout",
        "batch_size", "lep", "best_epoch", "beat_lookup_table", "beat_baseline",
        "failed",
    ]
    _echo_config(out, cfg)
    _write_csv(out / "rows.csv", "sweep_rows", header,
               [[row.get(k, "") for k in header] for row in rows])
    summary = _summary_rows(rows, ("beta",))
    for entry in summary:
        entry["lookup_lep"] = lookup_lep
        entry["baseline_lep"] = baseline_lep
        entry["mld_lep"] = mld_lep
    sum_header = ["beta", "runs", "best_lep", "median_lep", "q25_lep", "q75_lep",
                  "lookup_lep", "baseline_lep", "mld_lep"]
    _write_csv(out / "summary.csv", "sweep_summary", sum_header,
               [[entry[k] for k in sum_header] for entry in summary])
    if pcfg["kind"] == "repetition":
        report = imp.threshold_beta(pcfg["p"], pcfg["alpha"], pcfg["n"])
        with open(out / "threshold.json", "w") as fh:
            fh.write(report.to_json())
    return 0


def _lookup_reference_lep(problem, pcfg, train_block, master, criterion) -> float:
    """Reference lookup-table decoder built on a fresh beta=1 dataset of equal N."""
    rng = np.random.default_rng(neural.derive_seed(master, 10**6, 10**6))
    label_kind = (
        "classical_error" if pcfg["kind"] == "repetition" else "logical_class"
    )
    dataset, _ = ds.sample_dataset(problem, train_block["n_train"], label_kind, rng)
    lookup = lookup_table_decoder(dataset.entries, problem, label_kind)
    return problem.lep(lookup, criterion).lep


def cmd_misalign(args) -> int:
    cfg = _merged_config(args)
    _require(cfg, "out", "p", "betas")
    out = Path(cfg["out"])
    pcfg = _problem_cfg(cfg)
    problem = build_problem(pcfg)
    criterion = "nondegenerate" if pcfg["kind"] == "repetition" else "degenerate"
    rows = []
    for beta in sorted(cfg["betas"]):
        scaled_model = scale_knob(problem.model, beta)
        scaled = (
            RepetitionProblem(scaled_model)
            if pcfg["kind"] == "repetition"
            else StabilizerProblem(problem.code, scaled_model)
        )
        pr_mis, tv = imp.misalignment(problem, scaled, criterion)
        mld_beta = (
            scaled.mld_table()
            if pcfg["kind"] == "repetition"
            else mld_degenerate(scaled)
        )
        rows.append([beta, pr_mis, tv, problem.lep(mld_beta, criterion).lep])
    _echo_config(out, cfg)
    _write_csv(out / "misalign.csv", "misalign",
               ["beta", "pr_misaligned", "tv_distance", "mld_beta_lep_on_p"], rows)
    return 0


def cmd_strategies(args) -> int:
    cfg = _merged_config(args)
    _require(cfg, "out", "p", "betas", "runs_per_beta")
    out = Path(cfg["out"])
    pcfg = _problem_cfg(cfg)
    if pcfg["kind"] != "qecc":
        raise SystemExit("strategies compares depolarizing training distributions")
    problem = build_problem(pcfg)
    betas = sorted(cfg["betas"])
    master = cfg.get("seed", 0)
    train_block = _train_block(cfg)
    tasks = []
    for beta in betas:
        for run_id in range(cfg["runs_per_beta"]):
            for strategy in ("unweighted", "weighted"):
                tasks.append(
                    {"problem": pcfg, "beta": beta, "run_id": run_id,
                     "master_seed": master, "train": train_block,
                     "strategy": strategy, "mean_p": pcfg["p"]}
                )
    rows = _pool_map(tasks, cfg.get("workers") or _default_workers())
    rows.sort(key=lambda r: (r["beta"], r["strategy"], r["run_id"]))

    refs = {}
    for beta in betas:
        unwt = StabilizerProblem(
            problem.code, DepolarizingModel(problem.n, (beta * pcfg["p"],) * problem.n)
        )
        wt = StabilizerProblem(problem.code, scale_knob(problem.model, beta))
        refs[beta] = (
            problem.lep(mld_degenerate(unwt), "degenerate").lep,
            problem.lep(mld_degenerate(wt), "degenerate").lep,
        )
    summary = _summary_rows(rows, ("beta", "strategy"))
    for entry in summary:
        entry["mld_unwt_lep"], entry["mld_wt_lep"] = refs[entry["beta"]]
    _echo_config(out, cfg)
    row_header = ["beta", "strategy", "run_id", "seed", "learning_rate", "n_layers",
                  "width", "dropout", "batch_size", "lep", "best_epoch", "failed"]
    _write_csv(out / "strategy_rows.csv", "strategy_rows", row_header,
               [[row.get(k, "") for k in row_header] for row in rows])
    sum_header = ["beta", "strategy", "runs", "best_lep", "median_lep", "q25_lep",
                  "q75_lep", "mld_unwt_lep", "mld_wt_lep"]
    _write_csv(out / "strategies.csv", "strategies", sum_header,
               [[entry[k] for k in sum_header] for entry in summary])
    return 0


def cmd_report(args) -> int:
    base = Path(args.dir)
    report: dict = {"directory": str(base), "summaries": {}}
    for path in sorted(base.rglob("*.csv")):
        schema, rows = read_csv(path)
        report["summaries"][str(path.relative_to(base))] = {
            "schema": schema,
            "rows": len(rows),
            "data": rows if "summary" in schema or "strategies" in schema else None,
        }
    out = base / "report.json"
    with open(out, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    print(out)
    return 0


def _default_workers() -> int:
    return int(os.environ.get("DECLAB_WORKERS", "1"))


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override fields")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, default=None)


def _add_problem_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--code", choices=["five_qubit", "steane", "surface_d3"])
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--p", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--sigma2", type=float, default=None)
    parser.add_argument("--rates-seed", dest="rates_seed", type=int, default=None)


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--betas", type=float, nargs="+", default=None)
    parser.add_argument("--runs-per-beta", dest="runs_per_beta", type=int, default=None)
    parser.add_argument("--n-train", dest="n_train", type=int, default=None)
    parser.add_argument("--mode", choices=["sampled", "exact"], default=None)
    parser.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    parser.add_argument("--eval-every", dest="eval_every", type=int, default=None)
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="declab", description="exact decoder analysis and training sweeps"
    )
    sub = parser.add_subparsers(required=True)

    p_gen = sub.add_parser("gen", help="sample a dataset to CSV")
    _add_common(p_gen)
    _add_problem_flags(p_gen)
    p_gen.add_argument("--n-samples", dest="n_samples", type=int, default=None)
    p_gen.add_argument("--label-kind", dest="label_kind", default=None)
    p_gen.set_defaults(func=cmd_gen)

    p_imp = sub.add_parser("importance", help="exact importance masses")
    _add_common(p_imp)
    _add_problem_flags(p_imp)
    p_imp.add_argument("--baseline", choices=["default", "mld"], default=None)
    p_imp.set_defaults(func=cmd_importance)

    p_thr = sub.add_parser("threshold", help="knob-factor threshold report")
    _add_common(p_thr)
    p_thr.add_argument("--p", type=float, default=None)
    p_thr.add_argument("--alpha", type=float, default=None)
    p_thr.add_argument("--n", type=int, default=None)
    p_thr.add_argument("--grid-step", dest="grid_step", type=float, default=None)
    p_thr.set_defaults(func=cmd_threshold)

    p_sweep = sub.add_parser("sweep", help="knob sweep with K training runs per beta")
    _add_common(p_sweep)
    _add_problem_flags(p_sweep)
    _add_train_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_mis = sub.add_parser("misalign", help="misalignment scan over a beta grid")
    _add_common(p_mis)
    _add_problem_flags(p_mis)
    p_mis.add_argument("--betas", type=float, nargs="+", default=None)
    p_mis.set_defaults(func=cmd_misalign)

    p_str = sub.add_parser("strategies", help="weighted vs unweighted knob scaling")
    _add_common(p_str)
    _add_problem_flags(p_str)
    _add_train_flags(p_str)
    p_str.set_defaults(func=cmd_strategies)

    p_rep = sub.add_parser("report", help="aggregate CSV outputs into one JSON")
    p_rep.add_argument("--dir", required=True)
    p_rep.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
