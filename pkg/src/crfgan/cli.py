"""Command line entry point tying the pipeline together.

Subcommands: preprocess, phantoms, train, bench, generate, evaluate,
serve, report. Every artifact-producing run writes exactly one
``manifest.json`` whose resolved config reruns the command
(``--config manifest.json``). Exit codes are distinct per failure class
and every error is a single machine-parsable line on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .errors import (
    CheckpointError,
    ConfigError,
    ConflictError,
    CrfganError,
    DataError,
    DomainError,
    ExpiredError,
    NonFiniteError,
    NotFoundError,
    NumericalError,
    ShapeError,
    ValidationError,
)

EXIT_OK = 0
EXIT_USAGE = 2        # unknown flags / malformed invocation
EXIT_CONFIG = 3       # config validation failed
EXIT_MISSING = 4      # missing input file or directory
EXIT_RUNTIME = 5      # numerical or training failure
EXIT_CONFLICT = 6     # artifact or protocol conflict

DATA_ROOT_ENV = "CRFGAN_DATA_ROOT"


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    """Argparse that fails with one stderr line and exit code 2."""

    def error(self, message):
        print(f"crfgan: error[usage]: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# option schema: name -> (type, default, help); None default means optional.
# Config files are validated against this schema before any work happens.
_SCHEMAS: Dict[str, Dict[str, tuple]] = {
    "preprocess": {
        "input": (str, None, "directory of .mhd volumes in HU"),
        "output": (str, None, "artifact directory"),
        "target": (str, "32,32,32", "output grid D,H,W"),
    },
    "phantoms": {
        "n": (int, 16, "number of phantoms"),
        "resolution": (int, 32, "cubic resolution"),
        "seed": (int, 0, "base seed"),
        "nodules": (int, 2, "nodules per phantom"),
        "output": (str, None, "artifact directory"),
    },
    "train": {
        "data": (str, None, "directory of normalized .mhd volumes"),
        "arch": (str, "crfgan", "crfgan or baseline"),
        "steps": (int, 200, "optimizer steps"),
        "batch": (int, 2, "batch size"),
        "seed": (int, 0, "training seed"),
        "precision": (str, "float32", "float32 or float64"),
        "lr-g": (float, 1e-4, "generator learning rate"),
        "lr-d": (float, 4e-4, "discriminator learning rate"),
        "log-every": (int, 50, "steps between log lines"),
        "output": (str, None, "artifact directory"),
    },
    "bench": {
        "resolution": (int, 64, "cubic resolution preset"),
        "batch": (str, "2,4", "comma-separated batch sizes"),
        "arch": (str, "both", "crfgan, baseline, or both"),
        "steps": (int, 3, "training steps per memory probe"),
        "throughput-steps": (int, 0, "timed steps (0 skips throughput)"),
        "budget-mb": (float, None, "peak-memory budget; over-budget "
                                   "cells render as '-'"),
        "seed": (int, 0, "bundle seed"),
        "output": (str, None, "artifact directory"),
    },
    "generate": {
        "checkpoint": (str, None, "checkpoint file"),
        "n": (int, 8, "number of volumes"),
        "seed": (int, 0, "latent seed"),
        "mode": (str, "stitched", "stitched or full decoding"),
        "output": (str, None, "artifact directory"),
    },
    "evaluate": {
        "real": (str, None, "directory of real volumes"),
        "generated": (list, None, "name=dir, repeatable"),
        "extractor": (str, "avgpool", "avgpool or encoder:<checkpoint>"),
        "output": (str, None, "artifact directory"),
    },
    "serve": {
        "host": (str, "127.0.0.1", "bind address"),
        "port": (int, 8000, "bind port"),
        "log": (str, None, "event log path (JSONL, appended)"),
        "ttl-minutes": (float, 60.0, "session expiry"),
        "ui": (str, None, "static rater UI directory to mount at /"),
    },
    "report": {
        "log": (str, None, "event log path"),
        "study": (str, None, "study id (default: the only study)"),
        "output": (str, None, "artifact directory (optional)"),
    },
}

_REQUIRED = {
    "preprocess": ("input", "output"),
    "phantoms": ("output",),
    "train": ("data", "output"),
    "bench": ("output",),
    "generate": ("checkpoint", "output"),
    "evaluate": ("real", "generated", "output"),
    "serve": ("log",),
    "report": ("log",),
}


def build_parser() -> _Parser:
    p = _Parser(prog="crfgan", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", metavar="command")
    for name, schema in _SCHEMAS.items():
        sp = sub.add_parser(name, help=f"{name} stage")
        sp.add_argument("--config", default=None,
                        help="JSON config or manifest; flags override")
        sp.add_argument("--force", action="store_true",
                        help="replace an existing manifest in the output dir")
        for key, (typ, default, help_) in schema.items():
            flag = f"--{key}"
            if typ is list:
                sp.add_argument(flag, action="append", default=None,
                                help=help_)
            else:
                sp.add_argument(flag, type=typ, default=None, help=help_)
    return p


def _load_config_file(path: str, command: str) -> dict:
    try:
        with open(path) as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise CliError(EXIT_MISSING, "missing", f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise CliError(EXIT_CONFIG, "config", f"config is not valid JSON: {e}")
    if "command" in raw and "config" in raw:     # manifest wrapper
        if raw["command"] != command:
            raise CliError(EXIT_CONFIG, "config",
                           f"manifest is for {raw['command']!r}, "
                           f"not {command!r}")
        raw = raw["config"]
    if not isinstance(raw, dict):
        raise CliError(EXIT_CONFIG, "config", "config must be a JSON object")
    return raw


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags, schema-checked."""
    schema = _SCHEMAS[command]
    cfg = {k: d for k, (t, d, _) in schema.items()}
    if args.config:
        file_cfg = _load_config_file(args.config, command)
        for k, v in file_cfg.items():
            if k not in schema:
                raise CliError(EXIT_CONFIG, "config",
                               f"unknown config key {k!r} for {command}")
            typ = schema[k][0]
            if typ is list:
                if not isinstance(v, list):
                    raise CliError(EXIT_CONFIG, "config",
                                   f"config key {k!r} must be a list")
            elif v is not None:
                try:
                    v = typ(v)
                except (TypeError, ValueError):
                    raise CliError(EXIT_CONFIG, "config",
                                   f"config key {k!r} must be {typ.__name__}")
            cfg[k] = v
    for k in schema:
        v = getattr(args, k.replace("-", "_"))
        if v is not None:
            cfg[k] = v
    for k in _REQUIRED[command]:
        if cfg.get(k) in (None, []):
            raise CliError(EXIT_CONFIG, "config",
                           f"{command} requires --{k}")
    return cfg


def _resolve_input(path: str) -> str:
    """An input path, optionally relative to $CRFGAN_DATA_ROOT."""
    if os.path.exists(path):
        return path
    root = os.environ.get(DATA_ROOT_ENV)
    if root and not os.path.isabs(path):
        rooted = os.path.join(root, path)
        if os.path.exists(rooted):
            return rooted
    raise CliError(EXIT_MISSING, "missing", f"input not found: {path}")


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def claim_output(out_dir: str, force: bool) -> str:
    """Reserve an artifact directory before any work writes into it."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "manifest.json")
    if os.path.exists(path) and not force:
        raise CliError(EXIT_CONFLICT, "conflict",
                       f"{out_dir} already holds a manifest "
                       f"(rerun with --force to replace)")
    return out_dir


def write_manifest(out_dir: str, command: str, cfg: dict,
                   outputs: List[str], force: bool,
                   seed: Optional[int] = None,
                   precision: Optional[str] = None,
                   extra: Optional[dict] = None) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "manifest.json")
    payload = {
        "command": command,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": seed,
        "precision": precision,
        "code_version": __version__,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "outputs": sorted(outputs),
    }
    if extra:
        payload.update(extra)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _parse_ints(text: str, what: str) -> List[int]:
    try:
        vals = [int(t) for t in str(text).split(",") if t.strip() != ""]
    except ValueError:
        raise CliError(EXIT_CONFIG, "config", f"{what} must be integers, "
                                              f"got {text!r}")
    if not vals:
        raise CliError(EXIT_CONFIG, "config", f"{what} is empty")
    return vals


def _preset_for(resolution: int):
    from .models.config import PRESETS
    for cfg in PRESETS.values():
        if cfg.resolution == resolution:
            return cfg
    known = sorted(c.resolution for c in PRESETS.values())
    raise CliError(EXIT_CONFIG, "config",
                   f"no preset at resolution {resolution}; known: {known}")


# -- subcommands ------------------------------------------------------------------


def cmd_preprocess(cfg: dict, force: bool) -> int:
    from .data import preprocess, read_metaimage, write_metaimage

    src = _resolve_input(cfg["input"])
    claim_output(cfg["output"], force)
    target = tuple(_parse_ints(cfg["target"], "target"))
    if len(target) != 3:
        raise CliError(EXIT_CONFIG, "config",
                       f"target needs three dims, got {cfg['target']!r}")
    names = sorted(f for f in os.listdir(src) if f.endswith(".mhd"))
    if not names:
        raise CliError(EXIT_MISSING, "missing", f"no .mhd volumes in {src}")
    os.makedirs(cfg["output"], exist_ok=True)
    outputs = []
    for f in names:
        vol = read_metaimage(os.path.join(src, f))
        out = preprocess(vol, target)
        dst = os.path.join(cfg["output"], f)
        write_metaimage(out, dst)
        outputs += [f, f[:-4] + ".raw"]
    write_manifest(cfg["output"], "preprocess", cfg, outputs, force,
                   precision="float32")
    print(f"preprocessed {len(names)} volumes -> {cfg['output']}")
    return EXIT_OK


def cmd_phantoms(cfg: dict, force: bool) -> int:
    from .data import Volume, phantom_batch, write_metaimage

    claim_output(cfg["output"], force)
    x = phantom_batch(cfg["n"], cfg["resolution"], seed=cfg["seed"],
                      nodules=cfg["nodules"])
    outputs = []
    for i in range(x.shape[0]):
        name = f"phantom-{i:04d}.mhd"
        vol = Volume(voxels=x[i, 0], spacing=(1.0, 1.0, 1.0),
                     domain="normalized")
        write_metaimage(vol, os.path.join(cfg["output"], name))
        outputs += [name, name[:-4] + ".raw"]
    write_manifest(cfg["output"], "phantoms", cfg, outputs, force,
                   seed=cfg["seed"], precision="float32")
    print(f"wrote {x.shape[0]} phantoms at {cfg['resolution']}^3 "
          f"-> {cfg['output']}")
    return EXIT_OK


def cmd_train(cfg: dict, force: bool) -> int:
    from .metrics import load_volume_dir
    from .models import make_bundle
    from .training import TrainConfig, Trainer, save_checkpoint

    if cfg["arch"] not in ("crfgan", "baseline"):
        raise CliError(EXIT_CONFIG, "config",
                       f"arch must be crfgan or baseline, got {cfg['arch']!r}")
    if cfg["precision"] not in ("float32", "float64"):
        raise CliError(EXIT_CONFIG, "config",
                       f"precision must be float32 or float64")
    claim_output(cfg["output"], force)
    data = load_volume_dir(_resolve_input(cfg["data"]))
    d, h, w = data.shape[2:]
    if not (d == h == w):
        raise CliError(EXIT_CONFIG, "config",
                       f"training expects cubic volumes, got {(d, h, w)}")
    arch = _preset_for(d).with_precision(cfg["precision"])
    bundle = make_bundle(arch, cfg["seed"], baseline=cfg["arch"] == "baseline")
    tcfg = TrainConfig(batch_size=cfg["batch"], steps=cfg["steps"],
                       seed=cfg["seed"], lr_g=cfg["lr-g"], lr_d=cfg["lr-d"])
    trainer = Trainer(bundle, tcfg)

    every = max(1, cfg["log-every"])

    def log(step, loss):
        if step % every == 0 or step == cfg["steps"]:
            print(f"step {step:>6d}  total {loss.l_total:.4f}  "
                  f"gan {loss.l_gan:.4f}  crf {loss.l_crf:.4f}  "
                  f"rec {loss.l_reconstruction:.4f}")

    metrics = trainer.fit(data, log_fn=log)
    ckpt = os.path.join(cfg["output"], "checkpoint.crfg")
    save_checkpoint(trainer, ckpt)
    hist = os.path.join(cfg["output"], "history.json")
    with open(hist, "w") as f:
        json.dump([l.to_dict() for l in trainer.history], f)
        f.write("\n")
    write_manifest(cfg["output"], "train", cfg,
                   ["checkpoint.crfg", "history.json"], force,
                   seed=cfg["seed"], precision=cfg["precision"],
                   extra={"steps_per_sec": metrics.iters_per_sec,
                          "peak_bytes": metrics.peak_bytes})
    print(f"trained {cfg['arch']} for {cfg['steps']} steps "
          f"({metrics.iters_per_sec:.3f} it/s, "
          f"peak {metrics.peak_bytes / 2**20:.2f} MB) -> {ckpt}")
    return EXIT_OK


def cmd_bench(cfg: dict, force: bool) -> int:
    from .models import make_bundle
    from .training import TrainConfig, measure_peak_memory, measure_throughput

    batches = _parse_ints(cfg["batch"], "batch")
    archs = {"both": ["crfgan", "baseline"],
             "crfgan": ["crfgan"], "baseline": ["baseline"]}.get(cfg["arch"])
    if archs is None:
        raise CliError(EXIT_CONFIG, "config",
                       f"arch must be crfgan, baseline, or both")
    arch_cfg = _preset_for(cfg["resolution"])
    claim_output(cfg["output"], force)
    budget = cfg["budget-mb"]
    budget_bytes = None if budget is None else budget * 2**20

    cells: Dict[str, Dict[int, Optional[int]]] = {}
    params: Dict[str, int] = {}
    speed = {}
    for arch in archs:
        cells[arch] = {}
        for b in batches:
            bundle = make_bundle(arch_cfg, cfg["seed"],
                                 baseline=arch == "baseline")
            if arch not in params:
                params[arch] = bundle.count_parameters()["total"]
            try:
                peak = measure_peak_memory(bundle, b, steps=cfg["steps"])
            except MemoryError:
                peak = None
            if peak is not None and budget_bytes is not None \
                    and peak > budget_bytes:
                peak = None
            cells[arch][b] = peak
        if cfg["throughput-steps"] > 0:
            bundle = make_bundle(arch_cfg, cfg["seed"],
                                 baseline=arch == "baseline")
            r = measure_throughput(bundle, steps=cfg["throughput-steps"],
                                   batch_size=batches[0])
            speed[arch] = r

    lines = [f"peak training memory (MB), resolution "
             f"{cfg['resolution']}^3, {cfg['steps']} steps"]
    header = f"  {'arch':<12}" + "".join(f"{f'batch={b}':>12}" for b in batches)
    lines.append(header)
    for arch in archs:
        row = f"  {arch:<12}"
        for b in batches:
            peak = cells[arch][b]
            row += f"{'-':>12}" if peak is None \
                else f"{peak / 2**20:>12.2f}"
        lines.append(row)
    if budget is not None:
        lines.append(f'  "-" exceeds the memory budget of {budget:.1f} MB')
    lines.append("")
    lines.append("parameters")
    for arch in archs:
        lines.append(f"  {arch:<12}{params[arch]:>12d}")
    if speed:
        lines.append("")
        lines.append(f"throughput (batch {batches[0]}, "
                     f"{cfg['throughput-steps']} timed steps)")
        for arch in archs:
            r = speed[arch]
            lines.append(f"  {arch:<12}{r.iters_per_sec:>12.3f} it/s "
                         f"(std {r.std:.3f})")
    text = "\n".join(lines) + "\n"

    with open(os.path.join(cfg["output"], "bench.txt"), "w") as f:
        f.write(text)
    blob = {
        "resolution": cfg["resolution"],
        "budget_mb": budget,
        "parameters": params,
        "peak_bytes": {a: {str(b): cells[a][b] for b in batches}
                       for a in archs},
        "throughput": {a: {"iters_per_sec": r.iters_per_sec, "std": r.std}
                       for a, r in speed.items()},
    }
    with open(os.path.join(cfg["output"], "bench.json"), "w") as f:
        json.dump(blob, f, indent=2, sort_keys=True)
        f.write("\n")
    write_manifest(cfg["output"], "bench", cfg, ["bench.txt", "bench.json"],
                   force, seed=cfg["seed"])
    print(text, end="")
    return EXIT_OK


def cmd_generate(cfg: dict, force: bool) -> int:
    from .data import Volume, write_metaimage
    from .models.bundle import sample_latent
    from .training import load_checkpoint

    if cfg["mode"] not in ("stitched", "full"):
        raise CliError(EXIT_CONFIG, "config",
                       f"mode must be stitched or full, got {cfg['mode']!r}")
    trainer = load_checkpoint(_resolve_input(cfg["checkpoint"]))
    claim_output(cfg["output"], force)
    bundle = trainer.bundle
    rng = np.random.default_rng(cfg["seed"])
    z = sample_latent(rng, cfg["n"], bundle.cfg)
    x = bundle.generate_stitched(z) if cfg["mode"] == "stitched" \
        else bundle.generate_full(z)
    outputs = []
    for i in range(x.shape[0]):
        name = f"gen-{i:04d}.mhd"
        vol = Volume(voxels=np.asarray(x[i, 0], dtype=np.float32),
                     spacing=(1.0, 1.0, 1.0), domain="normalized")
        write_metaimage(vol, os.path.join(cfg["output"], name))
        outputs += [name, name[:-4] + ".raw"]
    write_manifest(cfg["output"], "generate", cfg, outputs, force,
                   seed=cfg["seed"], precision=bundle.cfg.precision)
    print(f"generated {x.shape[0]} volumes ({cfg['mode']}) -> {cfg['output']}")
    return EXIT_OK


def cmd_evaluate(cfg: dict, force: bool) -> int:
    from .metrics import (AvgPoolFeatures, HalfEncoderFeatures,
                          evaluate_arrays, load_volume_dir)

    claim_output(cfg["output"], force)
    real = load_volume_dir(_resolve_input(cfg["real"]))
    generated = {}
    for spec in cfg["generated"]:
        if "=" not in spec:
            raise CliError(EXIT_CONFIG, "config",
                           f"--generated wants name=dir, got {spec!r}")
        name, path = spec.split("=", 1)
        generated[name] = load_volume_dir(_resolve_input(path))

    extractor_spec = cfg["extractor"]
    if extractor_spec == "avgpool":
        extractor = AvgPoolFeatures()
    elif extractor_spec.startswith("encoder:"):
        from .training import load_checkpoint
        trainer = load_checkpoint(_resolve_input(extractor_spec[8:]))
        extractor = HalfEncoderFeatures(trainer.bundle.he)
    else:
        raise CliError(EXIT_CONFIG, "config",
                       f"extractor must be avgpool or encoder:<checkpoint>")

    report = evaluate_arrays(real, generated, extractor)
    text = report.render()
    with open(os.path.join(cfg["output"], "report.txt"), "w") as f:
        f.write(text)
    blob = {
        "extractor": report.extractor_fingerprint,
        "bandwidth": report.kernel_bandwidth,
        "n_real": report.n_real,
        "scores": {n: {"fid": s.fid, "mmd2": s.mmd2, "n": s.n_samples}
                   for n, s in report.scores.items()},
    }
    with open(os.path.join(cfg["output"], "report.json"), "w") as f:
        json.dump(blob, f, indent=2, sort_keys=True)
        f.write("\n")
    write_manifest(cfg["output"], "evaluate", cfg,
                   ["report.txt", "report.json"], force)
    print(text, end="")
    return EXIT_OK


def cmd_serve(cfg: dict, force: bool) -> int:
    import uvicorn

    from .study import EventLog, StudyService, create_app

    ui_dir = _resolve_input(cfg["ui"]) if cfg.get("ui") else None
    service = StudyService(log=EventLog(cfg["log"]),
                           session_ttl=cfg["ttl-minutes"] * 60.0)
    app = create_app(service, static_dir=ui_dir)
    print(f"serving study API on http://{cfg['host']}:{cfg['port']}/v1 "
          f"(log: {cfg['log']}, session ttl {cfg['ttl-minutes']:g} min)")
    uvicorn.run(app, host=cfg["host"], port=cfg["port"], log_level="warning")
    return EXIT_OK


def render_study_report(rep: dict) -> str:
    lines = [
        f"study report: {rep['study_id']} ({rep['name']})",
        f"  pairs: section 1 = {rep['sections']['1']}, "
        f"section 2 = {rep['sections']['2']}",
        f"  sessions: completed {rep['sessions']['completed']}, "
        f"active {rep['sessions']['active']}, "
        f"expired {rep['sessions']['expired']}",
        f"  resolved votes: {rep['total_votes']}",
    ]
    if rep["model_totals"]:
        lines.append("  section 2 totals (most realistic):")
        for name in sorted(rep["model_totals"]):
            lines.append(f"    {name:<20}{rep['model_totals'][name]:>6d}")
        lines.append(f"  votes per pair: mean {rep['votes_per_pair_mean']:.3f}"
                     f"  std {rep['votes_per_pair_std']:.3f}")
    chi = rep.get("chi_square")
    if chi:
        lines.append(f"  chi-square ({chi['models'][0]} vs {chi['models'][1]})"
                     f": {chi['statistic']:.3f}  p = {chi['p_value']:.4g}")
    if rep["section1_resolved"]:
        lines.append("  section 1 picks (which is real):")
        for name in sorted(rep["section1_resolved"]):
            lines.append(f"    {name:<20}{rep['section1_resolved'][name]:>6d}")
    hist = rep["likert_histogram"]
    lines.append("  likert difficulty histogram: " +
                 "  ".join(f"{k}:{hist[k]}" for k in sorted(hist)))
    return "\n".join(lines) + "\n"


def cmd_report(cfg: dict, force: bool) -> int:
    from .study import EventLog, StudyService

    log_path = _resolve_input(cfg["log"])
    service = StudyService(log=EventLog(log_path))
    study_id = cfg["study"]
    if study_id is None:
        if len(service.studies) != 1:
            raise CliError(EXIT_CONFIG, "config",
                           f"log holds {len(service.studies)} studies; "
                           f"pass --study")
        study_id = next(iter(service.studies))
    rep = service.report(study_id)
    text = render_study_report(rep)
    if cfg["output"]:
        claim_output(cfg["output"], force)
        with open(os.path.join(cfg["output"], "report.txt"), "w") as f:
            f.write(text)
        with open(os.path.join(cfg["output"], "report.json"), "w") as f:
            json.dump(rep, f, indent=2, sort_keys=True)
            f.write("\n")
        write_manifest(cfg["output"], "report", cfg,
                       ["report.txt", "report.json"], force)
    print(text, end="")
    return EXIT_OK


_COMMANDS = {
    "preprocess": cmd_preprocess,
    "phantoms": cmd_phantoms,
    "train": cmd_train,
    "bench": cmd_bench,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
    "report": cmd_report,
}

_ERROR_EXITS = (
    ((ConfigError, DomainError, ShapeError, ValidationError),
     EXIT_CONFIG, "config"),
    ((DataError, NotFoundError, FileNotFoundError), EXIT_MISSING, "missing"),
    ((ConflictError, ExpiredError), EXIT_CONFLICT, "conflict"),
    ((NonFiniteError, NumericalError, CheckpointError, CrfganError),
     EXIT_RUNTIME, "runtime"),
)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        cfg = resolve_config(args.command, args)
        return _COMMANDS[args.command](cfg, args.force)
    except CliError as e:
        print(f"crfgan: error[{e.kind}]: {e}", file=sys.stderr)
        return e.code
    except tuple(t for ts, _, _ in _ERROR_EXITS for t in ts) as e:
        for types, code, kind in _ERROR_EXITS:
            if isinstance(e, types):
                msg = " ".join(str(e).split())
                print(f"crfgan: error[{kind}]: {msg}", file=sys.stderr)
                return code
        raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
