"""Render publication-style figures from declab CSV/JSON outputs.

Reads only the persisted files (schema-stamped CSVs and JSON reports); all
statistics shown are recomputed here from the row-level data, never from any
live computation.  Rendering is deterministic: fixed DPI, a fixed SVG hash
salt, and stripped date metadata make repeated renders byte-identical.

Invoke as a script with a JSON figure spec::

    declab-figures spec.json

where the spec looks like::

    {"kind": "ucurve", "inputs": {"rows": "rows.csv", "threshold":
     "threshold.json"}, "out": "figs/ucurve"}

Figure kinds: ucurve, importance_hist, misalign_overlay, strategies.
Emits <out>.svg and <out>.png.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "declab-figures"

KINDS = ("ucurve", "importance_hist", "misalign_overlay", "strategies")


class FigureInputError(Exception):
    """Raised when an input file does not match the expected schema."""


@dataclass
class FigureSpec:
    kind: str
    inputs: dict[str, str]
    out: str
    title: str = ""
    log_y: bool = True

    @classmethod
    def from_json(cls, payload: str) -> "FigureSpec":
        data = json.loads(payload)
        if data.get("kind") not in KINDS:
            raise FigureInputError(f"unknown figure kind {data.get('kind')!r}")
        return cls(
            kind=data["kind"],
            inputs=data["inputs"],
            out=data["out"],
            title=data.get("title", ""),
            log_y=data.get("log_y", True),
        )


def read_rows(path: str | Path, expected_schema: str) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise FigureInputError(f"missing input file {path}")
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("#") or expected_schema not in first:
            raise FigureInputError(
                f"{path} does not carry schema {expected_schema!r} (got {first!r})"
            )
        return list(csv.DictReader(fh))


def _require_columns(rows: list[dict], columns: tuple[str, ...], path: str) -> None:
    if not rows:
        raise FigureInputError(f"{path} has no data rows")
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise FigureInputError(f"{path} lacks columns {missing}")


def sweep_statistics(rows: list[dict]) -> dict[str, np.ndarray]:
    """Order statistics per beta recomputed from raw sweep rows."""
    by_beta: dict[float, list[float]] = {}
    for row in rows:
        by_beta.setdefault(float(row["beta"]), []).append(float(row["lep"]))
    betas = np.array(sorted(by_beta))
    leps = [np.array(by_beta[b]) for b in betas]
    return {
        "beta": betas,
        "best": np.array([x.min() for x in leps]),
        "median": np.array([np.median(x) for x in leps]),
        "q25": np.array([np.percentile(x, 25) for x in leps]),
        "q75": np.array([np.percentile(x, 75) for x in leps]),
    }


def _save(fig, out_base: str | Path) -> list[Path]:
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    paths = []
    for ext in ("svg", "png"):
        path = out_base.with_suffix(f".{ext}")
        fig.savefig(path, dpi=150, metadata={"Date": None})
        paths.append(path)
    plt.close(fig)
    return paths


def render_ucurve(spec: FigureSpec) -> dict:
    rows = read_rows(spec.inputs["rows"], "sweep_rows")
    _require_columns(rows, ("beta", "lep"), spec.inputs["rows"])
    stats = sweep_statistics(rows)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.fill_between(stats["beta"], stats["q25"], stats["q75"], alpha=0.25,
                    color="tab:blue", label="IQ range")
    ax.plot(stats["beta"], stats["median"], "o--", color="tab:blue", label="median")
    ax.plot(stats["beta"], stats["best"], "-", color="tab:green", label="best")
    if "threshold" in spec.inputs:
        with open(spec.inputs["threshold"]) as fh:
            threshold = json.load(fh)
        beta_star = threshold.get("beta_star_analytic")
        if beta_star is not None:
            ax.axvline(beta_star, color="tab:red", label="predicted harmful knob")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("knob factor")
    ax.set_ylabel("logical error probability")
    ax.set_title(spec.title or "decoder error vs training knob factor")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, spec.out)
    return stats


def render_importance_hist(spec: FigureSpec) -> dict:
    rows = read_rows(spec.inputs["importance"], "importance_weights")
    _require_columns(rows, ("weight", "important_mass", "bad_mass", "good_mass"),
                     spec.inputs["importance"])
    weights = np.array([int(r["weight"]) for r in rows])
    imp = np.array([float(r["important_mass"]) for r in rows])
    bad = np.array([float(r["bad_mass"]) for r in rows])
    unimportant = np.array([float(r["good_mass"]) for r in rows]) - imp
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.bar(weights, unimportant, color="tab:gray", alpha=0.6, label="unimportant")
    ax.bar(weights, imp, bottom=unimportant, color="tab:green", label="important")
    ax.bar(weights, bad, bottom=unimportant + imp, color="tab:red", label="bad")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("error weight")
    ax.set_ylabel("probability mass")
    ax.set_title(spec.title or "example masses by error weight")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, spec.out)
    return {"weight": weights, "important": imp, "bad": bad,
            "unimportant": unimportant}


def render_misalign_overlay(spec: FigureSpec) -> dict:
    rows = read_rows(spec.inputs["misalign"], "misalign")
    _require_columns(rows, ("beta", "pr_misaligned", "mld_beta_lep_on_p"),
                     spec.inputs["misalign"])
    betas = np.array([float(r["beta"]) for r in rows])
    pr_mis = np.array([float(r["pr_misaligned"]) for r in rows])
    mld_lep = np.array([float(r["mld_beta_lep_on_p"]) for r in rows])
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    out = {"beta": betas, "pr_misaligned": pr_mis, "mld_beta_lep_on_p": mld_lep}
    if "rows" in spec.inputs:
        stats = sweep_statistics(read_rows(spec.inputs["rows"], "sweep_rows"))
        ax.fill_between(stats["beta"], stats["q25"], stats["q75"], alpha=0.25,
                        color="tab:blue")
        ax.plot(stats["beta"], stats["median"], "o--", color="tab:blue",
                label="median decoder error")
        out["median"] = stats["median"]
    ax.plot(betas, mld_lep, "-", color="tab:purple", label="scaled-model MLD on truth")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("knob factor")
    ax.set_ylabel("logical error probability")
    twin = ax.twinx()
    twin.plot(betas, pr_mis, ":", color="black", label="misalignment")
    twin.set_ylabel("misaligned syndrome mass")
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = twin.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, fontsize=8)
    ax.set_title(spec.title or "misalignment vs decoder error")
    fig.tight_layout()
    _save(fig, spec.out)
    return out


def render_strategies(spec: FigureSpec) -> dict:
    rows = read_rows(spec.inputs["strategy_rows"], "strategy_rows")
    _require_columns(rows, ("beta", "strategy", "lep"), spec.inputs["strategy_rows"])
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    out = {}
    colors = {"weighted": "tab:blue", "unweighted": "tab:red"}
    for strategy in sorted({r["strategy"] for r in rows}):
        stats = sweep_statistics([r for r in rows if r["strategy"] == strategy])
        ax.fill_between(stats["beta"], stats["q25"], stats["q75"], alpha=0.2,
                        color=colors.get(strategy, "tab:gray"))
        ax.plot(stats["beta"], stats["median"], "o--",
                color=colors.get(strategy, "tab:gray"), label=f"{strategy} median")
        out[strategy] = stats
    if "summary" in spec.inputs:
        srows = read_rows(spec.inputs["summary"], "strategies")
        betas = sorted({float(r["beta"]) for r in srows})
        for col, label, color in (
            ("mld_wt_lep", "MLD (wt)", "tab:purple"),
            ("mld_unwt_lep", "MLD (unwt)", "tab:orange"),
        ):
            vals = [
                float(next(r[col] for r in srows if float(r["beta"]) == b))
                for b in betas
            ]
            ax.plot(betas, vals, "-", color=color, label=label)
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("knob factor")
    ax.set_ylabel("logical error probability")
    ax.set_title(spec.title or "knob scaling with vs without rate structure")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, spec.out)
    return out


RENDERERS = {
    "ucurve": render_ucurve,
    "importance_hist": render_importance_hist,
    "misalign_overlay": render_misalign_overlay,
    "strategies": render_strategies,
}


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns the plotted series for verification."""
    return RENDERERS[spec.kind](spec)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: declab-figures <spec.json>", file=sys.stderr)
        return 2
    try:
        spec = FigureSpec.from_json(Path(argv[0]).read_text())
        render(spec)
    except FigureInputError as exc:
        print(f"figure input error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
