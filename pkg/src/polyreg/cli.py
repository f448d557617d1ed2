"""Experiment orchestration and the command-line interface.

Subcommands: run <config.json>, preset <name>, validate <config.json>,
summarize <results-dir>. Runs are deterministic per (config, seeds); rows
are computed independently per (algorithm, seed, cell), sorted, and written
atomically so identical configs produce byte-identical results.csv.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from math import comb
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from ._kernels import BACKEND_NAME
from .engine import PATH_ALGORITHMS, normalized_columns, run_lovasz_cell, run_path_cell
from .learners import ALGORITHM_NAMES
from .metrics import coeff_variation, loglog_slope

EXPERIMENTS = ("stability_sweep", "dimension_scaling", "shortest_path",
               "transfer_floor", "custom")

CSV_COLUMNS = ("experiment", "algo", "seed", "n_or_k", "T", "target_switches",
               "observed_switches", "oracle_switches", "cum_regret",
               "avg_regret", "struct_norm", "cont_norm")

_CONFIG_KEYS = {
    "experiment", "domain", "n", "k", "T", "targets", "algorithms", "seeds",
    "eta_x", "eta_y", "alpha", "beta", "noise_amplitude",
    "perturbation_scale", "margin", "alphas", "mc_samples", "out_dir",
}


@dataclass
class ExperimentConfig:
    experiment: str
    T: int
    algorithms: list
    seeds: list
    targets: list = field(default_factory=lambda: [0])
    domain: str = ""
    n: object = None
    k: object = None
    eta_x: float | None = None
    eta_y: float | None = None
    alpha: float = 0.01
    beta: float = 0.01
    noise_amplitude: float = 0.0
    perturbation_scale: float = 1.0
    margin: float = 0.3
    alphas: list = field(default_factory=list)
    mc_samples: int = 50  # accepted for config compatibility; unused by in-scope generators
    out_dir: str = "polyreg_out"

    def resolved_domain(self) -> str:
        if self.experiment in ("stability_sweep", "dimension_scaling", "transfer_floor"):
            return "lovasz"
        if self.experiment == "shortest_path":
            return "path"
        if self.domain in ("lovasz", "path"):
            return self.domain
        raise ValueError("custom experiments must set domain to 'lovasz' or 'path'")

    def sizes(self) -> list:
        raw = self.k if self.resolved_domain() == "path" else self.n
        if raw is None:
            raise ValueError("config must set n (lovasz) or k (path)")
        return [int(v) for v in (raw if isinstance(raw, (list, tuple)) else [raw])]

    def cells(self) -> list:
        return [(size, int(t)) for size in self.sizes() for t in self.targets]

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        domain = self.resolved_domain()
        known = ALGORITHM_NAMES if domain == "lovasz" else PATH_ALGORITHMS
        for a in self.algorithms:
            if a not in known:
                raise ValueError(f"unknown algorithm {a!r} for domain {domain}")
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        if not self.targets:
            raise ValueError("target list must be nonempty")
        for t in self.targets:
            if not 0 <= int(t) <= self.T - 1:
                raise ValueError(f"target {t} outside [0, T-1]")
        if self.experiment == "transfer_floor" and not self.alphas:
            raise ValueError("transfer_floor needs an alphas list")
        self.sizes()
        return self


def config_from_dict(d: dict) -> ExperimentConfig:
    unknown = set(d) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**d).validate()


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(asdict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# presets (desk-scale reproductions of the paper's experiment protocols)


def preset_config(name: str, seeds=None, out_dir=None, targets=None) -> ExperimentConfig:
    if name == "stability_sweep":
        cfg = ExperimentConfig(
            experiment="stability_sweep", n=20, T=10_000,
            targets=[0, 1, 5, 20, 50, 200, 1000, 5000, 9999],
            algorithms=["camw_cold", "camw_geometric", "ogd"],
            seeds=list(range(10)))
    elif name == "dimension_scaling":
        cfg = ExperimentConfig(
            experiment="dimension_scaling", n=[10, 20, 50, 100, 200], T=20_000,
            targets=[0], algorithms=["camw_cold", "ogd", "olmda"],
            seeds=list(range(5)))
    elif name == "shortest_path":
        cfg = ExperimentConfig(
            experiment="shortest_path", k=[5, 6, 8], T=20_000,
            targets=[2, 5, 10, 20, 50], algorithms=["mw_restarts", "ogd_fw"],
            seeds=list(range(10)), margin=0.3)
    elif name == "transfer_floor":
        cfg = ExperimentConfig(
            experiment="transfer_floor", n=50, T=10_000, targets=[10],
            algorithms=["camw_cold", "camw_ws", "camw_geometric"],
            seeds=list(range(10)),
            alphas=[0.001, 0.003, 0.01, 0.03, 0.1, 0.3])
    else:
        raise ValueError(f"unknown preset {name!r}")
    if seeds is not None:
        cfg.seeds = list(seeds)
    if targets is not None:
        cfg.targets = list(targets)
    if out_dir is not None:
        cfg.out_dir = str(out_dir)
    return cfg.validate()


# ---------------------------------------------------------------------------
# running


def _run_task(task: dict) -> dict:
    cfg = task
    domain, algo, seed = cfg["domain"], cfg["algo"], cfg["seed"]
    size, target, T = cfg["size"], cfg["target"], cfg["T"]
    if domain == "lovasz":
        res = run_lovasz_cell(
            size, T, target, seed, algo,
            noise_amplitude=cfg["noise_amplitude"],
            perturbation_scale=cfg["perturbation_scale"],
            eta_x=cfg["eta_x"], eta_y=cfg["eta_y"],
            alpha=cfg["alpha"], beta=cfg["beta"])
        v_eff, d_eff = float(size), float(size)
    else:
        res = run_path_cell(size, T, target, seed, algo,
                            margin=cfg["margin"],
                            noise_amplitude=cfg["noise_amplitude"],
                            eta=cfg["eta_x"])
        v_eff = float(comb(2 * (size - 1), size - 1))
        d_eff = float(2 * size * (size - 1))
    struct, cont = normalized_columns(res.avg_regret, target, T, v_eff, d_eff)
    return {
        "experiment": cfg["experiment"], "algo": algo, "seed": seed,
        "n_or_k": size, "T": T, "target_switches": target,
        "observed_switches": res.observed_switches,
        "oracle_switches": res.oracle_switches,
        "cum_regret": res.cum_regret, "avg_regret": res.avg_regret,
        "struct_norm": struct, "cont_norm": cont,
    }


def _tasks_for(cfg: ExperimentConfig, alpha: float | None = None) -> list:
    domain = cfg.resolved_domain()
    tasks = []
    for algo in cfg.algorithms:
        for seed in cfg.seeds:
            for size, target in cfg.cells():
                tasks.append({
                    "experiment": cfg.experiment, "domain": domain,
                    "algo": algo, "seed": int(seed), "size": size,
                    "target": target, "T": cfg.T,
                    "noise_amplitude": cfg.noise_amplitude,
                    "perturbation_scale": cfg.perturbation_scale,
                    "eta_x": cfg.eta_x, "eta_y": cfg.eta_y,
                    "alpha": alpha if alpha is not None else cfg.alpha,
                    "beta": cfg.beta, "margin": cfg.margin,
                })
    return tasks


def _execute(tasks: list) -> list:
    workers = int(os.environ.get("POLYREG_THREADS", "1"))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_task, tasks))
    else:
        rows = [_run_task(t) for t in tasks]
    rows.sort(key=lambda r: (r["algo"], r["seed"], r["n_or_k"], r["target_switches"]))
    return rows


def _atomic_write(path: Path, data: str):
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(data)
    os.replace(tmp, path)


def emit_csv(rows: list, path: Path):
    """results.csv with the fixed column schema, '.' decimals, UTF-8."""
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        lines.append(",".join(str(r[c]) for c in CSV_COLUMNS))
    _atomic_write(path, "\n".join(lines) + "\n")


@dataclass
class RunRecord:
    config: ExperimentConfig
    config_hash: str
    rows: list
    summary: dict


def summarize(rows: list, experiment: str) -> dict:
    """Slopes of mean regret vs (1+target), per-algorithm CVs of the
    normalized columns, and the shortest-path crossover targets."""
    algos = sorted({r["algo"] for r in rows})
    out: dict = {"per_algorithm": {}}
    for algo in algos:
        sub = [r for r in rows if r["algo"] == algo]
        targets = sorted({r["target_switches"] for r in sub})
        means = []
        for t in targets:
            vals = [r["avg_regret"] for r in sub if r["target_switches"] == t]
            means.append(float(np.mean(vals)))
        entry: dict = {"targets": targets, "mean_avg_regret": means}
        if len(targets) >= 3 and all(m > 0 for m in means):
            entry["loglog_slope"] = loglog_slope([1 + t for t in targets], means)
        else:
            entry["loglog_slope"] = None
            entry["slope_omitted_reason"] = "needs >= 3 positive targets"
        for col in ("struct_norm", "cont_norm"):
            cells = sorted({(r["n_or_k"], r["target_switches"]) for r in sub})
            cellmeans = [float(np.mean([r[col] for r in sub
                                        if (r["n_or_k"], r["target_switches"]) == cell]))
                         for cell in cells]
            try:
                entry[f"cv_{col}"] = coeff_variation(cellmeans)
            except ValueError:
                entry[f"cv_{col}"] = None
        out["per_algorithm"][algo] = entry
    if experiment == "shortest_path" and {"mw_restarts", "ogd_fw"} <= set(algos):
        out["crossover"] = {}
        ks = sorted({r["n_or_k"] for r in rows})
        for k in ks:
            targets = sorted({r["target_switches"] for r in rows if r["n_or_k"] == k})
            ratios = []
            for t in targets:
                mw = np.mean([r["avg_regret"] for r in rows
                              if r["n_or_k"] == k and r["target_switches"] == t
                              and r["algo"] == "mw_restarts"])
                fw = np.mean([r["avg_regret"] for r in rows
                              if r["n_or_k"] == k and r["target_switches"] == t
                              and r["algo"] == "ogd_fw"])
                ratios.append(float(mw / fw))
            crossing = next((t for t, rat in zip(targets, ratios) if rat > 1.0), None)
            N = comb(2 * (k - 1), k - 1)
            d = 2 * k * (k - 1)
            rho = stats.spearmanr(targets, ratios).statistic if len(targets) >= 3 else None
            out["crossover"][str(k)] = {
                "targets": targets, "ratio_mw_over_ogdfw": ratios,
                "first_target_ratio_above_1": crossing,
                "theory_crossover_d_over_logN": d / float(np.log(N)),
                "spearman_ratio_vs_target": None if rho is None else float(rho),
            }
    return out


def run_experiment(cfg: ExperimentConfig, quiet: bool = False) -> RunRecord:
    """Run every (algorithm, seed, cell), then write results.csv,
    summary.json and manifest.json under cfg.out_dir (atomically)."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    notes = []
    if cfg.experiment == "dimension_scaling":
        notes.append("paper dimension list truncated at n<=200 for desk scale")
    if cfg.experiment == "shortest_path":
        notes.append("paper grid list truncated at k<=8 for desk scale")
    if cfg.experiment == "transfer_floor":
        all_rows = []
        for alpha in cfg.alphas:
            rows = _execute(_tasks_for(cfg, alpha=alpha))
            sub = out / f"alpha_{alpha}"
            sub.mkdir(parents=True, exist_ok=True)
            emit_csv(rows, sub / "results.csv")
            for r in rows:
                all_rows.append({**r, "_alpha": alpha})
        summary = {"per_alpha": {}}
        for alpha in cfg.alphas:
            rows = [dict(r) for r in all_rows if r["_alpha"] == alpha]
            for r in rows:
                r.pop("_alpha")
            summary["per_alpha"][str(alpha)] = summarize(rows, cfg.experiment)
        rows_out = [dict((k, v) for k, v in r.items() if k != "_alpha") for r in all_rows]
    else:
        rows_out = _execute(_tasks_for(cfg))
        emit_csv(rows_out, out / "results.csv")
        summary = summarize(rows_out, cfg.experiment)
    manifest = {
        "config": asdict(cfg), "config_hash": config_hash(cfg),
        "backend": BACKEND_NAME, "version": __version__, "notes": notes,
        "csv_columns": list(CSV_COLUMNS),
    }
    _atomic_write(out / "summary.json", json.dumps(summary, sort_keys=True, indent=1) + "\n")
    _atomic_write(out / "manifest.json", json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    if not quiet:
        print(f"wrote {len(rows_out)} rows to {out}/results.csv [{BACKEND_NAME} backend]")
    return RunRecord(cfg, config_hash(cfg), rows_out, summary)


def read_results_csv(path) -> list:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            vals = line.strip().split(",")
            row = dict(zip(header, vals))
            for key in ("seed", "n_or_k", "T", "target_switches",
                        "observed_switches", "oracle_switches"):
                row[key] = int(row[key])
            for key in ("cum_regret", "avg_regret", "struct_norm", "cont_norm"):
                row[key] = float(row[key])
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# CLI


def _parse_int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v != ""]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="polyreg",
                                 description="Instability-parameterized online learning experiments")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_pre = sub.add_parser("preset", help="run a named experiment preset")
    p_pre.add_argument("name", choices=["stability_sweep", "dimension_scaling",
                                        "shortest_path", "transfer_floor"])
    p_pre.add_argument("--seeds", type=_parse_int_list, default=None)
    p_pre.add_argument("--targets", type=_parse_int_list, default=None)
    p_pre.add_argument("--out", default=None)
    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    p_sum = sub.add_parser("summarize", help="recompute summary.json from a results directory")
    p_sum.add_argument("results_dir")
    args = ap.parse_args(argv)

    if args.cmd == "run":
        run_experiment(load_config(args.config))
        return 0
    if args.cmd == "preset":
        cfg = preset_config(args.name, seeds=args.seeds, out_dir=args.out,
                            targets=args.targets)
        run_experiment(cfg)
        return 0
    if args.cmd == "validate":
        load_config(args.config)
        print("config ok")
        return 0
    if args.cmd == "summarize":
        d = Path(args.results_dir)
        rows = read_results_csv(d / "results.csv")
        with open(d / "manifest.json") as fh:
            manifest = json.load(fh)
        summary = summarize(rows, manifest["config"]["experiment"])
        _atomic_write(d / "summary.json", json.dumps(summary, sort_keys=True, indent=1) + "\n")
        print(json.dumps(summary, sort_keys=True, indent=1))
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
