"""Command-line entry point: ``rotorlab <subcommand> [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 step cap exhausted,
4 I/O or checkpoint failure, 130 interrupted (checkpoint saved).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import tempfile
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import aggregation, experiments
from .config import ConfigRule, parse_rule
from .engine import RotorOrder, WalkState, parse_order, snapshot_digest
from .errors import CapExhausted, CheckpointError, ContractViolation, SweepInterrupted
from .lattice import Box

log = logging.getLogger("rotorlab")

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_IO, EXIT_INTERRUPTED = 0, 2, 3, 4, 130

COUNTING_HELP = f"Counting convention: {experiments.COUNTING_CONVENTION}."


class ConfigError(ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"invalid {field}: {message}")


@dataclass
class RunConfig:
    d: int = 3
    rule: str = "toward-origin"
    order: str = "default"
    out: str | None = None
    cap: int | None = None
    quiet: bool = False
    n: int = 1
    n_max: int = 20
    inner_radius: int = 3
    k: int = 500
    trials: int = 10_000
    seed: int = 42
    idla_trials: int = 0
    checkpoint_every: int | None = None
    checkpoint: str | None = None
    resume: str | None = None
    halt_after: int | None = None
    trajectory: bool = False
    timing: bool = False

    def validate(self, command: str | None = None) -> tuple[ConfigRule, RotorOrder]:
        if not isinstance(self.d, int) or self.d < 1:
            raise ConfigError("d", f"dimension must be a positive integer, got {self.d!r}")
        for name in ("n", "n_max", "inner_radius", "k", "idla_trials"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ConfigError(name, f"must be a non-negative integer, got {v!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials", f"must be a positive integer, got {self.trials!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")
        for name in ("cap", "checkpoint_every", "halt_after"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or v < 1):
                raise ConfigError(name, f"must be a positive integer, got {v!r}")
        if command == "stabilize" and self.inner_radius > self.n_max:
            raise ConfigError("inner_radius", f"{self.inner_radius} exceeds n_max={self.n_max}")
        try:
            rule = parse_rule(self.rule, self.d)
        except (ContractViolation, OSError) as exc:
            raise ConfigError("rule", str(exc)) from None
        try:
            order = parse_order(self.order, self.d)
        except ContractViolation as exc:
            raise ConfigError("order", str(exc)) from None
        return rule, order

    def header(self, command: str, keys: tuple[str, ...]) -> str:
        shown = {"command": command, "d": self.d, "rule": self.rule, "order": self.order}
        shown.update((k, getattr(self, k)) for k in keys)
        if self.cap is not None:
            shown["cap"] = self.cap
        return experiments.header_line(shown)


def parse_count(text: str) -> int:
    """Accept ``100000000``, ``1e8`` or ``10^8``."""
    text = text.strip().replace("_", "")
    m = re.fullmatch(r"(\d+)\^(\d+)", text)
    if m:
        return int(m.group(1)) ** int(m.group(2))
    m = re.fullmatch(r"(\d+)[eE](\d+)", text)
    if m:
        return int(m.group(1)) * 10 ** int(m.group(2))
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a count: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    g.add_argument("--d", type=int, help="lattice dimension (default 3)")
    g.add_argument("--rule", help="toward-origin | paper-literal | uniform:<label> | table:<path>")
    g.add_argument("--order", help="rotor order: default | cycle:<l0>,<l1>,...")
    g.add_argument("--out", help="output directory (default $ROTORLAB_OUT or ./rotorlab-out)")
    g.add_argument("--cap", type=parse_count, help="step cap per box exit")
    g.add_argument("--quiet", action="store_true", default=None, help="no progress on stderr")

    parser = argparse.ArgumentParser(prog="rotorlab", description=f"Rotor walks on Z^d. {COUNTING_HELP}",
                                     argument_default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, summary):
        return sub.add_parser(name, parents=[common], help=summary, description=f"{summary} {COUNTING_HELP}",
                              argument_default=argparse.SUPPRESS)

    p = add("walk", "Run one walk from the origin until it first leaves B[0,n].")
    p.add_argument("--n", type=int, help="box radius (default 1)")
    p.add_argument("--trajectory", action="store_true", default=None, help="also write trajectory.csv")

    p = add("conjecture", "Origin visits before each first exit of B[0,n], n=0..n_max, checked against 2dn+1.")
    p.add_argument("--n-max", type=int, dest="n_max", help="largest radius (default 20)")
    p.add_argument("--checkpoint-every", type=parse_count, dest="checkpoint_every",
                   help="save a checkpoint every this many steps (accepts 10^8, 1e8)")
    p.add_argument("--checkpoint", help="checkpoint path (default: --resume path or <out>/conjecture.ckpt.json)")
    p.add_argument("--resume", help="continue from this checkpoint")
    p.add_argument("--halt-after", type=parse_count, dest="halt_after",
                   help="save a checkpoint and stop once the step count reaches this value")
    p.add_argument("--timing", action="store_true", default=None,
                   help="fill the elapsed_s column (makes output run-dependent)")

    p = add("stabilize", "Labels of B[0,inner_radius] at each box exit and where they stop changing.")
    p.add_argument("--n-max", type=int, dest="n_max", help="largest exit radius (default 20)")
    p.add_argument("--inner-radius", type=int, dest="inner_radius", help="snapshot radius (default 3)")

    p = add("balance", "Per-site departure counts per direction after the sweep to n_max.")
    p.add_argument("--n-max", type=int, dest="n_max", help="largest radius (default 20)")

    p = add("srw", "Seeded simple random walk baseline: origin visits before leaving B[0,n].")
    p.add_argument("--n", type=int, help="box radius (default 1)")
    p.add_argument("--trials", type=int, help="number of walks (default 10000)")
    p.add_argument("--seed", type=int, help="PCG64 seed (default 42)")

    p = add("aggregate", "Rotor-router aggregation of k particles, with optional seeded IDLA baseline.")
    p.add_argument("--k", type=int, help="particles released (default 500)")
    p.add_argument("--idla-trials", type=int, dest="idla_trials", help="IDLA trials to compare (default 0)")
    p.add_argument("--seed", type=int, help="IDLA seed (default 42)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then flags."""
    cfg = RunConfig()
    names = {f.name for f in fields(RunConfig)}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config", "top level must be a JSON object")
        unknown = set(doc) - names
        if unknown:
            raise ConfigError("config", f"unknown keys {sorted(unknown)}")
        cfg = replace(cfg, **doc)
    flags = {k: v for k, v in vars(args).items() if k in names and v is not None}
    cfg = replace(cfg, **flags)
    if cfg.out is None:
        cfg.out = os.environ.get("ROTORLAB_OUT", "rotorlab-out")
    return cfg


def write_outputs(out_dir: str | Path, files: dict[str, str]):
    """Write every file under a temp name, then rename them all into place."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
            staged.append((tmp, out / name))
            with os.fdopen(fd, "w", newline="\n", encoding="ascii") as fh:
                fh.write(text)
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def cmd_walk(cfg: RunConfig, rule: ConfigRule, order: RotorOrder) -> int:
    radius = cfg.n if (2 * cfg.n + 1) ** cfg.d <= 10**8 else None
    state = WalkState.start(rule, order, dense_radius=radius)
    traj = [] if cfg.trajectory else None
    rec = state.run_until_norm_exceeds(cfg.n, cfg.cap, trajectory=traj)
    labels = state.snapshot(Box(cfg.n, cfg.d))
    header = cfg.header("walk", ("n",))
    doc = {"config": header[2:].strip(), "exit_record": rec.to_json(), "step_count": state.step_count,
           "max_norm_seen": state.max_norm_seen}
    files = {
        "exit_record.json": json.dumps(doc, indent=2) + "\n",
        "snapshot.json": json.dumps({"d": cfg.d, "n": cfg.n, "digest": snapshot_digest(labels),
                                     "labels": labels.tolist()}) + "\n",
    }
    if traj is not None:
        cols = experiments.coord_names(cfg.d)
        files["trajectory.csv"] = experiments._csv(header, ["t"] + cols, ([t, *p] for t, p in enumerate(traj)))
    write_outputs(cfg.out, files)
    print(json.dumps(rec.to_json()))
    return EXIT_OK


def cmd_conjecture(cfg: RunConfig, rule: ConfigRule, order: RotorOrder) -> int:
    ckpt = cfg.checkpoint or cfg.resume or str(Path(cfg.out) / "conjecture.ckpt.json")
    if cfg.checkpoint_every is not None or cfg.halt_after is not None:
        Path(ckpt).parent.mkdir(parents=True, exist_ok=True)

    def show(row):
        log.info("n=%d origin_visits=%d expected=%d match=%s", row.n, row.origin_visits, row.expected, row.match)

    rows = experiments.conjecture_sweep(
        cfg.n_max, rule, order, on_row=show, resume=cfg.resume, checkpoint_path=ckpt,
        checkpoint_every=cfg.checkpoint_every, halt_after=cfg.halt_after, step_cap=cfg.cap)
    text = experiments.conjecture_csv(rows, cfg.header("conjecture", ("n_max",)), timing=cfg.timing)
    write_outputs(cfg.out, {"conjecture.csv": text})
    sys.stdout.write(text)
    return EXIT_OK


def cmd_stabilize(cfg: RunConfig, rule: ConfigRule, order: RotorOrder) -> int:
    rows = experiments.stabilization_study(cfg.n_max, cfg.inner_radius, rule, order, step_cap=cfg.cap)
    text = experiments.stabilization_csv(rows, cfg.header("stabilize", ("n_max", "inner_radius")))
    write_outputs(cfg.out, {"stabilization.csv": text})
    unstable = sum(r.stabilized_at is None for r in rows)
    worst = max((r.stabilized_at for r in rows if r.stabilized_at is not None), default=None)
    print(json.dumps({"sites": len(rows), "unstable": unstable, "max_stabilized_at": worst}))
    return EXIT_OK


def cmd_balance(cfg: RunConfig, rule: ConfigRule, order: RotorOrder) -> int:
    state = None
    for _, state in experiments.walk_exits(cfg.n_max, rule, order, instrument=True, step_cap=cfg.cap):
        pass
    rows = experiments.balance_report(state)
    text = experiments.balance_csv(rows, cfg.d, cfg.header("balance", ("n_max",)))
    write_outputs(cfg.out, {"balance.csv": text})
    print(json.dumps({"sites": len(rows), "violations": sum(not r.ok for r in rows),
                      "step_count": state.step_count}))
    return EXIT_OK


def cmd_srw(cfg: RunConfig, rule: ConfigRule, order: RotorOrder) -> int:
    s = experiments.srw_comparison(cfg.n, cfg.trials, cfg.seed, cfg.d)
    text = experiments.srw_csv(s, cfg.header("srw", ("n", "trials", "seed")))
    write_outputs(cfg.out, {"srw.csv": text})
    sys.stdout.write(text)
    return EXIT_OK


def cmd_aggregate(cfg: RunConfig, rule: ConfigRule, order: RotorOrder) -> int:
    state = aggregation.aggregate(cfg.k, rule, order)
    rep = aggregation.shape_report(state)
    header = cfg.header("aggregate", ("k",))
    files = {"cluster.json": aggregation.cluster_json(state),
             "shells.csv": header + aggregation.shells_csv(state)}
    summary = {"k": cfg.k, "inradius": rep.inradius, "outradius": rep.outradius,
               "sphericity": float(rep.sphericity)}
    if cfg.idla_trials:
        b = aggregation.idla_baseline(cfg.k, cfg.seed, cfg.idla_trials, cfg.d)
        rows = [[i, r.inradius, r.outradius, repr(float(r.sphericity))] for i, r in enumerate(b.reports)]
        files["idla.csv"] = experiments._csv(
            cfg.header("aggregate", ("k", "seed", "idla_trials")),
            ["trial", "inradius", "outradius", "sphericity"], rows)
        summary["idla"] = {"mean": b.mean_sphericity, "min": b.min_sphericity, "max": b.max_sphericity}
    write_outputs(cfg.out, files)
    print(json.dumps(summary))
    return EXIT_OK


COMMANDS = {"walk": cmd_walk, "conjecture": cmd_conjecture, "stabilize": cmd_stabilize,
            "balance": cmd_balance, "srw": cmd_srw, "aggregate": cmd_aggregate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        rule, order = cfg.validate(args.command)
    except (ConfigError, TypeError) as exc:
        print(f"rotorlab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING if cfg.quiet else logging.INFO,
                        format="%(asctime)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](cfg, rule, order)
    except ContractViolation as exc:
        print(f"rotorlab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExhausted as exc:
        print(f"rotorlab: {exc}", file=sys.stderr)
        return EXIT_CAP
    except SweepInterrupted as exc:
        print(f"rotorlab: {exc}", file=sys.stderr)
        return EXIT_INTERRUPTED
    except (OSError, CheckpointError) as exc:
        print(f"rotorlab: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
