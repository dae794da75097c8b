"""Experiment harness: JSON configs in, CSV metrics and manifests out.

A config fully determines a run: same config + same master seed means
byte-identical output files, independent of sweep parallelism or thread
count.  All files are written atomically.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import rng as _rng
from .algorithms import AlgorithmConfig, compute_stepsizes, run
from .compression import CompressorSpec, certified_delta, compress, contraction_test, decode, encode
from .diagnostics import (
    LyapunovTracker,
    theorem_constants,
    write_csv,
)
from .objectives import (
    Objective,
    gradient_check,
    gradient_dispersion,
    least_squares,
    load_idx,
    logistic_regression,
    partition_by_label,
    quadratic_consensus,
    smoothness_check,
    synthetic_blobs,
    two_layer_mlp,
)
from .topology import Graph, build_graph, laplacian, spectral_info

SCHEMA_VERSION = 1
OUT_ENV_VAR = "TICOPD_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 2)."""


# --------------------------------------------------------------------------
# config loading and validation

def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    _require(not unknown, f"unknown keys in {where}: {sorted(unknown)}")


def load_config(path) -> dict:
    try:
        with open(path) as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return raw


_GRAPH_KEYS = {"kind", "n", "p", "seed"}
_ALGO_KEYS = {
    "algorithm", "T", "seed", "alpha_tilde", "theta", "eta", "gamma",
    "inner_steps", "compressor", "stepsize", "gossip", "init",
}
_OBJ_KEYS = {
    "kind", "d", "spread", "centers", "data_seed", "rows", "A", "b",
    "classes", "dim", "samples", "test_samples", "l2", "separation", "noise",
    "partition", "images", "labels", "test_images", "test_labels",
    "hidden", "smoothness",
}
_TOP_KEYS = {"schema", "seed", "stride", "lyapunov", "graph", "objective",
             "algorithms", "algorithm", "out"}
_COMP_KEYS = {"kind", "s", "k"}


def normalize_config(raw: dict) -> dict:
    """Validate and normalize an experiment config (no side effects)."""
    _require(isinstance(raw, dict), "config must be an object")
    _check_keys(raw, _TOP_KEYS, "config")
    _require(raw.get("schema") == SCHEMA_VERSION,
             f"config schema must be {SCHEMA_VERSION}, got {raw.get('schema')!r}")

    seed = raw.get("seed", 0)
    _require(isinstance(seed, int) and 0 <= seed < 2**64, "seed must be a u64")

    stride = raw.get("stride")
    if stride is not None:
        _require(isinstance(stride, int) and stride >= 1, "stride must be an int >= 1")

    graph = raw.get("graph")
    _require(isinstance(graph, dict), "config needs a graph object")
    _check_keys(graph, _GRAPH_KEYS, "graph")
    _require(isinstance(graph.get("kind"), str), "graph.kind must be a string")
    _require(isinstance(graph.get("n"), int) and graph["n"] >= 2, "graph.n must be an int >= 2")

    objective = raw.get("objective")
    if isinstance(objective, str):
        objective = {"kind": objective}
    _require(isinstance(objective, dict), "config needs an objective object")
    _check_keys(objective, _OBJ_KEYS, "objective")
    _require(isinstance(objective.get("kind"), str), "objective.kind must be a string")

    algos = raw.get("algorithms")
    if algos is None and "algorithm" in raw:
        algos = [raw["algorithm"]]
    _require(isinstance(algos, list) and algos, "config needs a non-empty algorithms list")
    normalized_algos = []
    for idx, a in enumerate(algos):
        _require(isinstance(a, dict), f"algorithms[{idx}] must be an object")
        _check_keys(a, _ALGO_KEYS, f"algorithms[{idx}]")
        _require(isinstance(a.get("algorithm"), str), f"algorithms[{idx}].algorithm must be a string")
        _require(isinstance(a.get("T"), int) and a["T"] >= 1, f"algorithms[{idx}].T must be an int >= 1")
        comp = a.get("compressor")
        if comp is not None:
            _require(isinstance(comp, dict), f"algorithms[{idx}].compressor must be an object")
            _check_keys(comp, _COMP_KEYS, f"algorithms[{idx}].compressor")
        normalized_algos.append(dict(a))

    return {
        "schema": SCHEMA_VERSION,
        "seed": seed,
        "stride": stride,
        "lyapunov": bool(raw.get("lyapunov", False)),
        "graph": dict(graph),
        "objective": dict(objective),
        "algorithms": normalized_algos,
        "out": raw.get("out"),
    }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def problem_hash(cfg: dict) -> str:
    """Hash of everything that defines the problem instance (graph,
    objective, master seed) but not the algorithms run on it."""
    part = {"graph": cfg["graph"], "objective": cfg["objective"], "seed": cfg["seed"]}
    return hashlib.sha256(canonical_json(part).encode()).hexdigest()


def resolve_out_dir(cli_value, cfg: dict) -> str:
    """--out flag beats the TICOPD_OUT env var beats the config key."""
    if cli_value:
        return str(cli_value)
    env = os.environ.get(OUT_ENV_VAR)
    if env:
        return env
    if cfg.get("out"):
        return str(cfg["out"])
    return "runs"


# --------------------------------------------------------------------------
# builders

def build_graph_from_config(gcfg: dict, master_seed: int) -> Graph:
    try:
        return build_graph(
            gcfg["kind"], gcfg["n"], p=gcfg.get("p"),
            seed=gcfg.get("seed", master_seed),
        )
    except ValueError as e:
        raise ConfigError(f"graph: {e}") from e


def build_objective_from_config(ocfg: dict, n: int, master_seed: int):
    """Instantiate the objective; returns (objective, eval_data or None)."""
    kind = ocfg["kind"]
    data_seed = ocfg.get("data_seed", master_seed)
    try:
        if kind == "quadratic":
            if "centers" in ocfg:
                centers = np.asarray(ocfg["centers"], dtype=np.float64)
                _require(centers.shape[0] == n, f"need {n} center rows")
            else:
                d = ocfg.get("d")
                _require(isinstance(d, int) and d >= 1, "quadratic needs d >= 1")
                spread = float(ocfg.get("spread", 3.0))
                gen = _rng.RngStream(data_seed).generator(_rng.DATA)
                centers = spread * gen.standard_normal((n, d))
            return quadratic_consensus(centers), None

        if kind == "least_squares":
            if "A" in ocfg or "b" in ocfg:
                _require("A" in ocfg and "b" in ocfg, "need both A and b")
                return least_squares(
                    [np.asarray(A, dtype=np.float64) for A in ocfg["A"]],
                    [np.asarray(b, dtype=np.float64) for b in ocfg["b"]],
                ), None
            d = ocfg.get("d")
            _require(isinstance(d, int) and d >= 1, "least_squares needs d >= 1")
            rows = int(ocfg.get("rows", d))
            gen = _rng.RngStream(data_seed).generator(_rng.DATA)
            A_list = [gen.standard_normal((rows, d)) / np.sqrt(rows) for _ in range(n)]
            x0 = gen.standard_normal(d)
            b_list = [A @ x0 + 0.1 * gen.standard_normal(rows) for A in A_list]
            return least_squares(A_list, b_list), None

        if kind in ("logistic", "mlp"):
            if "images" in ocfg or "labels" in ocfg:
                _require("images" in ocfg and "labels" in ocfg,
                         "need both images and labels paths")
                features, labels = load_idx(ocfg["images"], ocfg["labels"])
                eval_data = None
                if "test_images" in ocfg:
                    eval_data = load_idx(ocfg["test_images"], ocfg["test_labels"])
            else:
                classes = int(ocfg.get("classes", 10))
                dim = int(ocfg.get("dim", 32))
                samples = int(ocfg.get("samples", 1000))
                test = int(ocfg.get("test_samples", 0))
                features, labels, te_f, te_y = synthetic_blobs(
                    classes, dim, samples, test, data_seed,
                    separation=float(ocfg.get("separation", 3.0)),
                    noise=float(ocfg.get("noise", 1.0)),
                )
                eval_data = (te_f, te_y) if test > 0 else None
            part = partition_by_label(
                labels, n, mode=ocfg.get("partition", "label_sorted"), seed=data_seed
            )
            if kind == "logistic":
                obj = logistic_regression(features, labels, part, l2=float(ocfg.get("l2", 0.0)))
            else:
                hidden = ocfg.get("hidden")
                _require(isinstance(hidden, int) and hidden >= 1, "mlp needs hidden >= 1")
                obj = two_layer_mlp(features, labels, part, hidden,
                                    L=ocfg.get("smoothness"))
            return obj, eval_data

        raise ConfigError(f"unknown objective kind {kind!r}")
    except ConfigError:
        raise
    except (ValueError, OSError) as e:
        raise ConfigError(f"objective: {e}") from e


def build_compressor(ccfg: dict | None, d: int) -> CompressorSpec:
    if ccfg is None:
        return CompressorSpec(kind="identity", d=d)
    try:
        return CompressorSpec(kind=ccfg.get("kind", ""), d=d,
                              s=ccfg.get("s"), k=ccfg.get("k"))
    except ValueError as e:
        raise ConfigError(f"compressor: {e}") from e


def build_algorithm_config(acfg: dict, master_seed: int, M: float,
                           objective: Objective) -> AlgorithmConfig:
    kind = acfg["algorithm"]
    seed = acfg.get("seed", master_seed)
    try:
        compressor = None
        if kind in ("ticopd", "dgd_quantized", "choco"):
            compressor = build_compressor(acfg.get("compressor"), objective.d)
        steps = None
        if kind in ("ticopd", "exact_pd"):
            _require("alpha_tilde" in acfg and "theta" in acfg,
                     f"{kind} needs alpha_tilde and theta")
            delta = certified_delta(compressor) if compressor is not None else 1.0
            eta = float(acfg.get("eta", delta))  # default eta = certified delta
            steps = compute_stepsizes(
                float(acfg["alpha_tilde"]), float(acfg["theta"]), eta,
                float(acfg.get("gamma", 1.0)), M,
            )
        gamma_only = None
        if kind == "choco" and "gamma" in acfg:
            gamma_only = compute_stepsizes(1.0, 0.0, 1.0, float(acfg["gamma"]), 0.0)
        return AlgorithmConfig(
            algorithm=kind,
            T=acfg["T"],
            seed=seed,
            steps=steps if steps is not None else gamma_only,
            compressor=compressor,
            inner_steps=int(acfg.get("inner_steps", 1)),
            stepsize=acfg.get("stepsize"),
            gossip=acfg.get("gossip"),
            init=acfg.get("init", "zeros"),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"algorithms entry ({kind}): {e}") from e


# --------------------------------------------------------------------------
# experiment execution

def _write_json_atomic(obj, path) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(obj, f, indent=2, sort_keys=True)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _default_stride(T: int) -> int:
    return 10 if T > 10_000 else 1


def run_experiment(cfg: dict, out_dir, *, seed_override: int | None = None,
                   stride_override: int | None = None, quiet: bool = True) -> tuple[dict, int]:
    """Run every configured algorithm, write CSVs and a manifest.

    Returns (manifest, exit_code); exit code 3 if any run diverged.
    """
    cfg = dict(cfg)
    if seed_override is not None:
        cfg["seed"] = seed_override
    master = cfg["seed"]

    graph = build_graph_from_config(cfg["graph"], master)
    spectral = spectral_info(graph)
    objective, eval_data = build_objective_from_config(cfg["objective"], graph.n, master)

    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "schema": SCHEMA_VERSION,
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "config_hash": config_hash({k: v for k, v in cfg.items() if k != "out"}),
        "problem_hash": problem_hash(cfg),
        "runs": [],
    }
    exit_code = EXIT_OK
    for idx, acfg in enumerate(cfg["algorithms"]):
        rc = build_algorithm_config(acfg, master, spectral.M, objective)
        stride = stride_override or cfg.get("stride") or _default_stride(rc.T)
        tracker = None
        if cfg.get("lyapunov") and rc.algorithm in ("ticopd", "exact_pd"):
            _require(objective.f_star is not None,
                     "lyapunov tracking needs an objective with known f_star")
            delta = certified_delta(rc.compressor) if rc.compressor is not None else 1.0
            constants = theorem_constants(
                delta=delta, eta=rc.steps.eta, rho1=spectral.rho1,
                rho2=spectral.rho2, L=objective.L, n=objective.n,
                M=spectral.M, theta=rc.steps.theta,
            )
            tracker = LyapunovTracker(objective, spectral, constants,
                                      alpha=rc.steps.alpha, theta=rc.steps.theta,
                                      eta=rc.steps.eta)
        record = run(rc, objective, graph, stride=stride,
                     lyapunov_tracker=tracker, eval_data=eval_data,
                     config_snapshot=acfg)
        csv_name = f"run_{idx:02d}_{rc.algorithm}.csv"
        write_csv(record.rows, os.path.join(out_dir, csv_name))
        final = record.final
        entry = {
            "algorithm": rc.algorithm,
            "csv": csv_name,
            "status": record.status,
            "diverged_at": record.diverged_at,
            "seed": rc.seed,
            "bits_total": int(record.bits_per_agent.sum()),
            "final": {
                "t": final.t,
                "loss_max": final.loss_max,
                "grad_norm_avg": final.grad_norm_avg,
                "consensus_err": final.consensus_err,
                "bits_cum": final.bits_cum,
            },
        }
        manifest["runs"].append(entry)
        if record.status == "diverged":
            exit_code = EXIT_DIVERGED
        if not quiet:
            print(f"[{idx}] {rc.algorithm}: {record.status} "
                  f"(t={final.t}, grad={final.grad_norm_avg:.3e}, "
                  f"consensus={final.consensus_err:.3e})")
    _write_json_atomic(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest, exit_code


# --------------------------------------------------------------------------
# sweep

_SWEEP_KEYS = {"schema", "base", "grid", "out"}


def normalize_sweep(raw: dict) -> dict:
    _require(isinstance(raw, dict), "sweep config must be an object")
    _check_keys(raw, _SWEEP_KEYS, "sweep config")
    _require(raw.get("schema") == SCHEMA_VERSION,
             f"sweep schema must be {SCHEMA_VERSION}")
    base = normalize_config(raw.get("base") or {})
    grid = raw.get("grid")
    _require(isinstance(grid, dict) and grid, "sweep needs a non-empty grid")
    for key, values in grid.items():
        _require(isinstance(values, list) and values,
                 f"grid entry {key!r} must be a non-empty list")
        _require(all(isinstance(v, (int, float)) for v in values),
                 f"grid entry {key!r} must hold numbers")
    return {"schema": SCHEMA_VERSION, "base": base, "grid": dict(grid),
            "out": raw.get("out")}


def _grid_points(grid: dict) -> list[dict]:
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _sweep_point_dir(index: int, point: dict) -> str:
    tags = "_".join(f"{k}={point[k]:g}" for k in sorted(point))
    return f"point_{index:03d}_{tags}"


def sweep(sweep_cfg: dict, out_dir, *, workers: int = 1, quiet: bool = True) -> tuple[dict, int]:
    """Run the base config once per grid point; each grid key overrides that
    key in every algorithm entry.  Points run independently (optionally in
    a thread pool) and are summarized by best final grad_norm_avg per
    algorithm kind."""
    base, grid = sweep_cfg["base"], sweep_cfg["grid"]
    points = _grid_points(grid)
    os.makedirs(out_dir, exist_ok=True)

    def run_point(item):
        index, point = item
        cfg = json.loads(json.dumps(base))  # deep copy
        for algo in cfg["algorithms"]:
            algo.update(point)
        sub = _sweep_point_dir(index, point)
        manifest, code = run_experiment(cfg, os.path.join(out_dir, sub), quiet=True)
        return {"point": point, "dir": sub, "exit_code": code,
                "runs": manifest["runs"]}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_point, enumerate(points)))
    else:
        results = [run_point(item) for item in enumerate(points)]

    best: dict[str, dict] = {}
    any_diverged = False
    for res in results:
        for entry in res["runs"]:
            if entry["status"] != "completed":
                any_diverged = True
                continue
            kind = entry["algorithm"]
            value = entry["final"]["grad_norm_avg"]
            if kind not in best or value < best[kind]["grad_norm_avg"]:
                best[kind] = {
                    "grad_norm_avg": value,
                    "point": res["point"],
                    "dir": res["dir"],
                }
    summary = {
        "schema": SCHEMA_VERSION,
        "points": results,
        "best": best,
    }
    _write_json_atomic(summary, os.path.join(out_dir, "summary.json"))
    if not quiet:
        for kind, info in sorted(best.items()):
            print(f"best {kind}: grad_norm_avg={info['grad_norm_avg']:.3e} at {info['point']}")
    return summary, (EXIT_DIVERGED if any_diverged else EXIT_OK)


# --------------------------------------------------------------------------
# compare

def _load_manifest(path) -> tuple[str, dict]:
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    try:
        with open(path) as f:
            return os.path.dirname(os.path.abspath(path)), json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read manifest {path}: {e}") from e


def compare(paths, *, checkpoints: int = 8) -> dict:
    """Align runs from several output directories on shared iteration counts
    and shared cumulative-bit budgets.  All manifests must describe the same
    problem instance (identical problem hash)."""
    from .diagnostics import read_csv

    _require(len(paths) >= 2, "compare needs at least two run directories")
    loaded = [_load_manifest(p) for p in paths]
    hashes = {m["problem_hash"] for _, m in loaded}
    _require(len(hashes) == 1,
             f"runs describe different problems (hashes {sorted(hashes)})")

    columns = []
    for base, manifest in loaded:
        for entry in manifest["runs"]:
            rows = read_csv(os.path.join(base, entry["csv"]))
            columns.append({
                "label": f"{os.path.basename(base)}/{entry['algorithm']}",
                "rows": rows,
            })

    common_ts = set(r.t for r in columns[0]["rows"])
    for col in columns[1:]:
        common_ts &= set(r.t for r in col["rows"])
    ts = sorted(common_ts)
    if len(ts) > checkpoints:
        idx = np.linspace(0, len(ts) - 1, checkpoints).round().astype(int)
        ts = [ts[i] for i in sorted(set(idx))]

    by_iteration = []
    for t in ts:
        line = {"t": t}
        for col in columns:
            row = next(r for r in col["rows"] if r.t == t)
            line[col["label"]] = {
                "grad_norm_avg": row.grad_norm_avg,
                "consensus_err": row.consensus_err,
            }
        by_iteration.append(line)

    max_common_bits = min(col["rows"][-1].bits_cum for col in columns)
    budgets = sorted(set(
        int(b) for b in np.linspace(0, max_common_bits, checkpoints + 1)[1:]
    ))
    by_bits = []
    for budget in budgets:
        line = {"bits": budget}
        for col in columns:
            reached = [r for r in col["rows"] if r.bits_cum <= budget]
            row = reached[-1] if reached else col["rows"][0]
            line[col["label"]] = {
                "t": row.t,
                "grad_norm_avg": row.grad_norm_avg,
                "consensus_err": row.consensus_err,
            }
        by_bits.append(line)

    return {
        "labels": [c["label"] for c in columns],
        "by_iteration": by_iteration,
        "by_bits": by_bits,
    }


def format_compare(result: dict) -> str:
    lines = []
    labels = result["labels"]
    lines.append("== matched iterations ==")
    header = f"{'t':>10} " + " ".join(f"{lb:>34}" for lb in labels)
    lines.append(header)
    lines.append(f"{'':>10} " + " ".join(f"{'grad_norm_avg / consensus_err':>34}" for _ in labels))
    for line in result["by_iteration"]:
        cells = [
            f"{line[lb]['grad_norm_avg']:>16.6e}/{line[lb]['consensus_err']:>16.6e}"
            for lb in labels
        ]
        lines.append(f"{line['t']:>10} " + " ".join(f"{c:>34}" for c in cells))
    lines.append("== matched bit budgets ==")
    lines.append(f"{'bits':>14} " + " ".join(f"{lb:>34}" for lb in labels))
    for line in result["by_bits"]:
        cells = [
            f"{line[lb]['grad_norm_avg']:>16.6e}/{line[lb]['consensus_err']:>16.6e}"
            for lb in labels
        ]
        lines.append(f"{line['bits']:>14} " + " ".join(f"{c:>34}" for c in cells))
    return "\n".join(lines)


# --------------------------------------------------------------------------
# check

_CHECK_KEYS = {"schema", "compressor", "d", "trials", "graph", "objective", "n"}


def check(raw: dict) -> tuple[list[str], bool]:
    """Self-checks for a compressor, a graph, and/or an objective config.

    Returns (report lines, all_passed)."""
    _check_keys(raw, _CHECK_KEYS, "check config")
    lines: list[str] = []
    ok = True

    def report(passed: bool, text: str):
        nonlocal ok
        ok = ok and passed
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {text}")

    if "compressor" in raw:
        d = raw.get("d", 64)
        spec = build_compressor(raw["compressor"], d)
        trials = int(raw.get("trials", 2000))
        gen = _rng.RngStream(0).generator(_rng.CHECK)
        rep = contraction_test(spec, trials, gen)
        report(rep.passed,
               f"contraction {spec.kind}(d={spec.d}): empirical {rep.empirical:.4f} "
               f"<= bound {rep.bound:.4f} + 3se {3 * rep.stderr:.4f}")
        gen_a = _rng.RngStream(1).generator(_rng.CHECK)
        gen_b = _rng.RngStream(1).generator(_rng.CHECK)
        x = _rng.RngStream(2).generator(_rng.CHECK).standard_normal(d)
        same = np.array_equal(decode(encode(x, spec, gen_a)), compress(x, spec, gen_b))
        report(same, f"codec round-trip equals compressor output bit-exactly ({spec.kind})")

    if "graph" in raw:
        g = build_graph_from_config(raw["graph"], 0)
        sp = spectral_info(g)
        report(sp.rho2 > 0, f"connected: rho2 = {sp.rho2:.6f} > 0")
        K = np.eye(g.n) - np.full((g.n, g.n), 1.0 / g.n)
        resid = float(np.abs(sp.laplacian_pinv @ laplacian(g) - K).max())
        report(resid <= 1e-10, f"pinv(L) L = centering projector (residual {resid:.2e})")
        report(sp.rho1 >= sp.rho2,
               f"spectrum ordered: rho1 {sp.rho1:.4f} >= rho2 {sp.rho2:.4f}")

    if "objective" in raw:
        n = raw.get("n") or (raw.get("graph") or {}).get("n")
        _require(isinstance(n, int) and n >= 2, "objective check needs n (or a graph)")
        obj, _ = build_objective_from_config(raw["objective"], n, 0)
        tol = 1e-4 if obj.kind == "mlp" else 1e-5
        err = gradient_check(obj)
        report(err <= tol, f"gradient check ({obj.kind}): max rel err {err:.2e} <= {tol:g}")
        ratio = smoothness_check(obj)
        report(ratio <= 1.0 + 1e-8,
               f"smoothness: max ||dg||/(L ||dx||) = {ratio:.6f} <= 1")
        if obj.kind in ("logistic", "mlp"):
            gen = _rng.RngStream(3).generator(_rng.CHECK)
            x0 = gen.standard_normal(obj.d)
            disp = gradient_dispersion(obj, x0)
            lines.append(f"[info] gradient dispersion at random point: {disp:.4e}")

    _require(bool(lines), "check config names nothing to check")
    return lines, ok
