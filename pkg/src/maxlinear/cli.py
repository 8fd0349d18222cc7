"""Command-line interface: ``python -m maxlinear <subcommand> ...``.

Every subcommand accepts ``--config file.json`` whose keys are the flag
names (dashes or underscores); flags given on the command line win. Each
run writes a manifest (resolved config, seeds, package versions, input
checksums) next to its primary output, or to ``--manifest``, or to stderr
when the output goes to stdout.

Exit codes: 0 success, 2 validation error, 3 infeasible conditioning
event, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
from importlib import metadata

import numpy as np

from . import io as mio
from .bench import DEFAULTS as BENCH_DEFAULTS
from .bench import bench
from .conditional import (
    ConditionalSampler,
    ConditioningEvent,
    InfeasibleEventError,
    sample_conditional,
)
from .independence import ci_test_mc
from .model import (
    NoiseSpec,
    ObservationSet,
    cdf,
    drought_scenario,
    random_network,
    simulate,
    simulate_factors,
)
from .structure import evaluate, learn_tree

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4


class ValidationError(ValueError):
    pass


# -- helpers ------------------------------------------------------------------

def _versions():
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "dcor"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"config {path}: expected a JSON object")
    return {k.replace("-", "_"): v for k, v in obj.items()}


def _resolve(args, defaults, allowed_extra=()):
    """Defaults < config file < explicit flags."""
    given = {k: v for k, v in vars(args).items() if k not in ("command", "func", "config", "manifest")}
    cfg = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = _load_config(args.config)
        unknown = set(file_cfg) - set(defaults) - set(allowed_extra)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    cfg.update(given)
    return cfg


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise ValidationError(f"missing required setting(s): {flags}")


def _require_seed(cfg):
    if cfg.get("seed") is None:
        raise ValidationError("this command is randomized: pass an explicit --seed")
    try:
        cfg["seed"] = int(cfg["seed"])
    except (TypeError, ValueError):
        raise ValidationError("--seed must be an integer") from None
    if cfg["seed"] < 0:
        raise ValidationError("--seed must be nonnegative")


def _index_list(text, d, name):
    try:
        idx = [int(t) - 1 for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"--{name} must be comma-separated 1-based node indices") from None
    for i in idx:
        if not 0 <= i < d:
            raise ValidationError(f"--{name}: node {i + 1} outside 1..{d}")
    return idx


def _parse_event(text, d):
    try:
        ev = ConditioningEvent.parse(text or "")
    except ValueError as exc:
        raise ValidationError(f"bad conditioning spec {text!r}: {exc}") from None
    for k in ev.K:
        if not 0 <= k < d:
            raise ValidationError(f"conditioned node {k + 1} outside 1..{d}")
    return ev


class Run:
    """Collects inputs, outputs and seeds for the manifest."""

    def __init__(self, command, cfg, manifest_path):
        self.command = command
        self.cfg = cfg
        self.manifest_path = manifest_path
        self.inputs = {}
        self.outputs = []
        self.seeds = {}

    def input(self, path):
        self.inputs[str(path)] = _sha256(path)
        return path

    def write(self, path, text):
        mio.atomic_write(path, text)
        self.outputs.append(str(path))

    def emit(self, text, out_key="out"):
        """Primary output: to ``cfg[out_key]`` if set, else stdout."""
        path = self.cfg.get(out_key)
        if path:
            self.write(path, text)
        else:
            sys.stdout.write(text)

    def finish(self):
        manifest = {
            "command": self.command,
            "config": self.cfg,
            "seeds": self.seeds,
            "versions": _versions(),
            "inputs": self.inputs,
            "outputs": self.outputs,
        }
        text = mio.dumps_json(manifest)
        path = self.manifest_path
        if path is None and self.outputs:
            path = self.outputs[0] + ".manifest.json"
        if path:
            mio.atomic_write(path, text)
        else:
            sys.stderr.write(text)


# -- subcommands --------------------------------------------------------------

SIMULATE_DEFAULTS = {
    "model": None, "random_d": None, "shape": "tree", "coeff_min": 0.5, "coeff_max": 2.0,
    "density": 0.3, "n": None, "seed": None, "sigma": 0.0, "mcar_rate": 0.0,
    "extreme_missing_prob": 0.0, "extreme_quantile": 0.9, "extreme_rate": None,
    "base_level": 0.0, "base_scale": 0.1, "out": None, "model_out": None, "truth_out": None,
}


def cmd_simulate(args):
    cfg = _resolve(args, SIMULATE_DEFAULTS)
    _require(cfg, "n", "out")
    _require_seed(cfg)
    run = Run("simulate", cfg, args.manifest)
    if (cfg["model"] is None) == (cfg["random_d"] is None):
        raise ValidationError("give exactly one of --model and --random-d")
    labels = None
    if cfg["model"]:
        net, labels = mio.read_model(run.input(cfg["model"]))
    else:
        net = random_network(int(cfg["random_d"]), cfg["shape"], (cfg["coeff_min"], cfg["coeff_max"]),
                             seed=cfg["seed"], density=cfg["density"])
        run.seeds["network"] = cfg["seed"]
    noise = NoiseSpec(cfg["sigma"], cfg["mcar_rate"], cfg["extreme_missing_prob"], cfg["extreme_quantile"])
    n = int(cfg["n"])
    if cfg["extreme_rate"] is None:
        obs = simulate(net, n, noise, cfg["seed"], labels)
    else:
        obs = drought_scenario(net, n, cfg["base_level"], cfg["extreme_rate"], cfg["seed"],
                               cfg["base_scale"], noise, labels)
    run.seeds["data"] = cfg["seed"]
    run.write(cfg["out"], mio.format_csv(obs))
    if cfg["model_out"]:
        run.write(cfg["model_out"], mio.dumps_json(mio.model_to_dict(net, labels)))
    if cfg["truth_out"]:
        run.write(cfg["truth_out"], mio.format_edge_list(net.edges()))
    run.finish()


LEARN_DEFAULTS = {
    "input": None, "method": "qtree", "r": 0.5, "min_support": 20, "root": None,
    "log": False, "extreme_quantile": None, "coef_quantile": 0.0, "absolute": False, "out": None,
}


def cmd_learn(args):
    cfg = _resolve(args, LEARN_DEFAULTS)
    _require(cfg, "input")
    run = Run("learn", cfg, args.manifest)
    obs = mio.ingest_csv(run.input(cfg["input"]), log_transform=bool(cfg["log"]))
    root = None
    if cfg["root"] is not None:
        root = int(cfg["root"]) - 1
        if not 0 <= root < obs.d:
            raise ValidationError(f"--root {cfg['root']} outside 1..{obs.d}")
    method = "correlation" if cfg["method"] in ("corr", "correlation") else cfg["method"]
    result = learn_tree(obs, method, r=float(cfg["r"]), min_support=int(cfg["min_support"]), root=root,
                        coef_quantile=float(cfg["coef_quantile"]),
                        extreme_quantile=cfg["extreme_quantile"], absolute=bool(cfg["absolute"]))
    params = {"r": cfg["r"], "min_support": cfg["min_support"], "log": cfg["log"],
              "extreme_quantile": cfg["extreme_quantile"]}
    run.emit(mio.dumps_json(mio.tree_to_dict(result.tree, obs.labels, method, params)))
    run.finish()


EVAL_DEFAULTS = {"estimate": None, "truth": None, "dot": None, "out": None}


def cmd_eval(args):
    cfg = _resolve(args, EVAL_DEFAULTS)
    _require(cfg, "estimate", "truth")
    run = Run("eval", cfg, args.manifest)
    tree, labels = mio.read_tree(run.input(cfg["estimate"]))
    edges = mio.read_edge_list(run.input(cfg["truth"]), labels)
    try:
        truth = mio.truth_from_edges(edges, tree.d)
    except ValueError as exc:
        raise ValidationError(f"truth edges: {exc}") from None
    rep = evaluate(tree, truth)

    def one_based(es):
        return [[p + 1, c + 1] for p, c in es]

    report = {
        "precision": rep.precision,
        "recall": rep.recall,
        "counts": {**rep.counts, "missed": len(rep.missed)},
        "correct": one_based(rep.correct),
        "wrong": one_based(rep.wrong),
        "reversed": one_based(rep.reversed),
        "missed": one_based(rep.missed),
    }
    if cfg["dot"]:
        run.write(cfg["dot"], mio.export_dot(tree, truth, labels))
    run.emit(mio.dumps_json(report))
    run.finish()


SAMPLE_DEFAULTS = {"model": None, "condition": None, "n": None, "seed": None, "out": None}


def cmd_sample(args):
    cfg = _resolve(args, SAMPLE_DEFAULTS)
    _require(cfg, "model", "condition", "n")
    _require_seed(cfg)
    run = Run("sample", cfg, args.manifest)
    net, labels = mio.read_model(run.input(cfg["model"]))
    event = _parse_event(cfg["condition"], net.d)
    if not event.K:
        raise ValidationError("--condition needs at least one 'node=value' pair")
    n = int(cfg["n"])
    if n < 1:
        raise ValidationError("--n must be >= 1")
    sampler = ConditionalSampler(net.Cstar, event, net.innovations)
    draws = sample_conditional(sampler, n, cfg["seed"])
    run.seeds["sample"] = cfg["seed"]
    obs = ObservationSet(draws.X, None, labels)
    run.emit(mio.format_csv(obs, ("scenario", draws.scenario)))
    run.finish()


CDF_DEFAULTS = {"model": None, "x": None, "mc": None, "seed": None, "out": None}


def cmd_cdf(args):
    cfg = _resolve(args, CDF_DEFAULTS)
    _require(cfg, "model", "x")
    run = Run("cdf", cfg, args.manifest)
    net, _ = mio.read_model(run.input(cfg["model"]))
    try:
        x = np.array([float(t) for t in str(cfg["x"]).split(",")])
    except ValueError:
        raise ValidationError("--x must be comma-separated numbers") from None
    out = {"x": x.tolist(), "cdf": cdf(net, x)}
    if cfg["mc"] is not None:
        _require_seed(cfg)
        m = int(cfg["mc"])
        if m < 1:
            raise ValidationError("--mc must be >= 1")
        X = simulate_factors(net, m, cfg["seed"])[1]
        hit = np.all(X <= x, axis=1)
        p = float(hit.mean())
        out.update({"mc_n": m, "mc_estimate": p, "mc_se": float(np.sqrt(p * (1 - p) / m))})
        run.seeds["mc"] = cfg["seed"]
    run.emit(mio.dumps_json(out))
    run.finish()


CI_DEFAULTS = {"model": None, "i": None, "j": None, "k": "", "m": 2000, "perms": 999, "seed": None, "out": None}


def cmd_ci(args):
    cfg = _resolve(args, CI_DEFAULTS)
    _require(cfg, "model", "i", "j")
    _require_seed(cfg)
    run = Run("ci", cfg, args.manifest)
    net, _ = mio.read_model(run.input(cfg["model"]))
    I = _index_list(cfg["i"], net.d, "i")
    J = _index_list(cfg["j"], net.d, "j")
    event = _parse_event(cfg["k"], net.d)
    perms = int(cfg["perms"])
    if perms < 499:
        raise ValidationError("--perms must be at least 499")
    res = ci_test_mc(net, I, J, event.K, event.x, m=int(cfg["m"]), perms=perms, seed=cfg["seed"])
    run.seeds["ci"] = cfg["seed"]
    out = {
        "statistic": res.statistic,
        "p_value": res.p_value,
        "samples_used": res.samples_used,
        "degenerate_flags": {str(v + 1): flag for v, flag in sorted(res.degenerate_flags.items())},
    }
    if res.note:
        out["note"] = res.note
    run.emit(mio.dumps_json(out))
    run.finish()


def cmd_bench(args):
    cfg = _resolve(args, {**{k: None for k in BENCH_DEFAULTS}, "out": None, "timing_out": None})
    _require_seed(cfg)
    run = Run("bench", cfg, args.manifest)
    bench_cfg = {k: cfg[k] for k in BENCH_DEFAULTS}
    metrics, timing = bench(bench_cfg)
    run.seeds["base"] = cfg["seed"]
    run.seeds["per_trial"] = [[t["network_seed"], t["data_seed"]] for t in metrics["trials"]]
    run.emit(mio.dumps_json(metrics))
    timing_text = mio.dumps_json(timing)
    if cfg["timing_out"]:
        mio.atomic_write(cfg["timing_out"], timing_text)
    elif cfg["out"]:
        mio.atomic_write(cfg["out"] + ".timing.json", timing_text)
    else:
        sys.stderr.write(timing_text)
    run.finish()


# -- parser -------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON file of settings; flags override it")
    p.add_argument("--manifest", default=None, help="manifest path (default: <out>.manifest.json)")


def build_parser():
    parser = argparse.ArgumentParser(prog="maxlinear", description="Max-linear Bayesian network toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("simulate", help="simulate observations", argument_default=S)
    _common(p)
    p.add_argument("--model", help="model JSON")
    p.add_argument("--random-d", type=int, help="draw a random network with this many nodes")
    p.add_argument("--shape", choices=["tree", "dag"])
    p.add_argument("--coeff-min", type=float)
    p.add_argument("--coeff-max", type=float)
    p.add_argument("--density", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma", type=float, help="log-normal noise scale")
    p.add_argument("--mcar-rate", type=float)
    p.add_argument("--extreme-missing-prob", type=float)
    p.add_argument("--extreme-quantile", type=float)
    p.add_argument("--extreme-rate", type=float, help="use the drought mixture with this extreme-row rate")
    p.add_argument("--base-level", type=float)
    p.add_argument("--base-scale", type=float)
    p.add_argument("--out")
    p.add_argument("--model-out")
    p.add_argument("--truth-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", help="learn a directed tree from observations", argument_default=S)
    _common(p)
    p.add_argument("--input")
    p.add_argument("--method", choices=["qtree", "corr", "correlation"])
    p.add_argument("--r", type=float)
    p.add_argument("--min-support", type=int)
    p.add_argument("--root", type=int, help="1-based root node")
    p.add_argument("--log", action="store_true", help="log-transform observations on ingest")
    p.add_argument("--extreme-quantile", type=float, help="keep rows whose row max exceeds this quantile")
    p.add_argument("--coef-quantile", type=float)
    p.add_argument("--absolute", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", help="compare an estimated tree with the truth", argument_default=S)
    _common(p)
    p.add_argument("--estimate")
    p.add_argument("--truth")
    p.add_argument("--dot")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample", help="exact conditional samples", argument_default=S)
    _common(p)
    p.add_argument("--model")
    p.add_argument("--condition", help='e.g. "3=4.0,5=2.5" (1-based)')
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("cdf", help="joint CDF, optionally with a Monte-Carlo check", argument_default=S)
    _common(p)
    p.add_argument("--model")
    p.add_argument("--x", help='comma-separated point, e.g. "1,2,6"')
    p.add_argument("--mc", type=int, help="Monte-Carlo sample size")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("ci", help="Monte-Carlo conditional independence test", argument_default=S)
    _common(p)
    p.add_argument("--model")
    p.add_argument("--i", help="1-based node list, e.g. 1 or 1,2")
    p.add_argument("--j")
    p.add_argument("--k", help='context, e.g. "2=4.0"; empty for unconditional')
    p.add_argument("--m", type=int)
    p.add_argument("--perms", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("bench", help="synthetic structure-learning benchmark", argument_default=S)
    _common(p)
    p.add_argument("--generator", choices=["tree", "drought"])
    p.add_argument("--trials", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--coeff-min", type=float)
    p.add_argument("--coeff-max", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--mcar-rate", type=float)
    p.add_argument("--extreme-missing-prob", type=float)
    p.add_argument("--extreme-quantile-missing", type=float)
    p.add_argument("--extreme-rate", type=float)
    p.add_argument("--base-level", type=float)
    p.add_argument("--base-scale", type=float)
    p.add_argument("--method", choices=["qtree", "corr", "correlation"])
    p.add_argument("--r", type=float)
    p.add_argument("--min-support", type=int)
    p.add_argument("--extreme-quantile", type=float)
    p.add_argument("--log-transform", action="store_true")
    p.add_argument("--out")
    p.add_argument("--timing-out", help="runtime report (default: <out>.timing.json)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "manifest"):
        args.manifest = None
    try:
        args.func(args)
    except InfeasibleEventError as exc:
        node = "" if exc.coordinate is None else f" at node {exc.coordinate + 1}"
        print(f"infeasible event{node}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
