"""Command-line interface: animate, metrics, ablate.

Configuration precedence is flag > config file (--config, JSON with keys
named like the long flags, underscored) > built-in default, validated
before any computation.  Exit codes: 0 success, 1 malformed input,
2 config validation failure, 3 non-finite loss.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError, NonFiniteLoss, SketchAnimError
from .geometry import QuadratureSpec
from .losses import (
    ANCHOR_INITIAL,
    ANCHOR_PREVIOUS,
    FIT_ROTATION_ONLY,
    FIT_ROTATION_SCALE,
    ArapConfig,
    LaConfig,
)
from .metrics import MetricsReport, compute_metrics
from .motion import EncodingSpec, save_checkpoint
from .optim import WIRING_JOINT, WIRING_POST_HOC, TrainConfig, export_history_csv, train
from .oracles import ORACLE_BUILDERS, GuidanceOracle, TargetVideoOracle
from .render import rasterize_frame, write_ppm
from .sketch import ANCHORED, RECURRENT
from .svg_io import load_video_dir, parse_svg, write_frame

__all__ = ["RunConfig", "run_animate", "run_metrics", "run_ablation", "main"]

ABLATION_LABELS = ("full", "no_la", "no_arap")
ABLATION_COLUMNS = (
    "max_length_deviation",
    "mean_length_deviation",
    "total_swept_area",
    "arap_energy",
    "mean_speed",
    "mean_acceleration",
)


@dataclass
class RunConfig:
    input: str | None = None
    out: str | None = None
    frames: int = 24
    iters: int = 1000
    lambda_l: float = 0.1
    lambda_a: float = 1e-5
    lambda_arap: float = 0.1
    oracle: str = "static"
    seed: int = 0
    lr: float = 1e-3
    cosine_decay: bool = False
    wiring: str = WIRING_JOINT
    composition: str = RECURRENT
    length_anchor: str = ANCHOR_INITIAL
    fit_mode: str = FIT_ROTATION_SCALE
    samples_u: int = 1000
    samples_t: int = 16
    frequencies: int = 6
    feature_dim: int = 128
    log_every: int = 0
    ppm: bool = False

    def validate(self):
        if not self.input:
            raise ConfigError("--input is required")
        if not self.out:
            raise ConfigError("--out is required")
        if self.lambda_l < 0 or self.lambda_a < 0 or self.lambda_arap < 0:
            raise ConfigError("loss weights must be non-negative")
        try:
            la = LaConfig(self.lambda_l, self.lambda_a, self.length_anchor)
            arap = ArapConfig(self.lambda_arap, self.fit_mode)
            quad = QuadratureSpec(self.samples_u, self.samples_t)
            enc = EncodingSpec(self.frequencies)
            tcfg = TrainConfig(
                iterations=self.iters,
                frames=self.frames,
                wiring=self.wiring,
                seed=self.seed,
                log_every=self.log_every,
                lr=self.lr,
                cosine_decay=self.cosine_decay,
                composition=self.composition,
                quadrature=quad,
                encoding=enc,
                feature_dim=self.feature_dim,
            )
        except (ValueError, ConfigError) as exc:
            raise ConfigError(str(exc)) from None
        return la, arap, tcfg


def _parse_oracle_spec(spec: str, frames: int) -> GuidanceOracle:
    """Build an oracle from 'name' or 'name:key=value,key=value'."""
    name, _, arg_str = spec.partition(":")
    params = {}
    if arg_str:
        for item in arg_str.split(","):
            key, eq, value = item.partition("=")
            if not eq or not key:
                raise ConfigError(f"bad oracle parameter {item!r} in {spec!r}")
            params[key.strip()] = value.strip()
    if name == "target":
        directory = params.pop("dir", None)
        if not directory:
            raise ConfigError("target oracle needs dir=<frame directory>")
        weight = float(params.pop("weight", 1.0))
        targets = load_video_dir(directory)
        if targets.frame_count != frames:
            raise ConfigError(
                f"target video has {targets.frame_count} frames, run wants {frames}"
            )
        oracle = TargetVideoOracle(targets.points, weight)
    elif name in ORACLE_BUILDERS:
        try:
            oracle = ORACLE_BUILDERS[name](params)
        except ValueError as exc:
            raise ConfigError(f"bad oracle parameter in {spec!r}: {exc}") from None
    else:
        known = ", ".join(sorted(ORACLE_BUILDERS) + ["target"])
        raise ConfigError(f"unknown oracle {name!r} (known: {known})")
    if params:
        raise ConfigError(f"unused oracle parameters {sorted(params)} in {spec!r}")
    return oracle


def _load_sketch(path_str: str):
    path = Path(path_str)
    if not path.is_file():
        raise FileNotFoundError(f"input sketch not found: {path}")
    return parse_svg(path.read_text(encoding="utf-8"))


def _write_video(out_dir: Path, video, ppm: bool):
    for i in range(video.frame_count):
        frame = video.frame(i)
        write_frame(out_dir / f"frame_{i:04d}.svg", frame)
        if ppm:
            write_ppm(out_dir / f"frame_{i:04d}.ppm", rasterize_frame(frame))


def _metrics_json(report: MetricsReport) -> str:
    return json.dumps(report.to_json_dict(), indent=2) + "\n"


def run_animate(cfg: RunConfig) -> int:
    """Parse, train, and export frames + loss history + metrics + checkpoint."""
    la, arap, tcfg = cfg.validate()
    oracle = _parse_oracle_spec(cfg.oracle, cfg.frames)
    sketch = _load_sketch(cfg.input)

    report = train(sketch, oracle, la, arap, tcfg)

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_video(out_dir, report.final_video, cfg.ppm)
    export_history_csv(report.history, out_dir / "loss.csv")
    metrics = compute_metrics(report.final_video, q=tcfg.quadrature, arap=arap)
    (out_dir / "metrics.json").write_text(_metrics_json(metrics), encoding="utf-8")
    save_checkpoint(out_dir / "params.smv1", report.params)
    print(
        f"wrote {report.final_video.frame_count} frames to {out_dir} "
        f"(final loss {report.final_breakdown.total:.6g})"
    )
    return 0


def run_metrics(
    video_dir,
    q: QuadratureSpec = QuadratureSpec(),
    arap: ArapConfig = ArapConfig(),
) -> MetricsReport:
    """Recompute metrics for an exported frame sequence."""
    video = load_video_dir(video_dir)
    return compute_metrics(video, q=q, arap=arap)


def _ablation_variants(cfg: RunConfig):
    import dataclasses

    yield "full", cfg
    yield "no_la", dataclasses.replace(cfg, lambda_l=0.0, lambda_a=0.0)
    yield "no_arap", dataclasses.replace(cfg, lambda_arap=0.0)


def run_ablation(cfg: RunConfig):
    """Run full / no_la / no_arap with a shared seed; tabulate final metrics.

    Returns a list of (label, row dict) in that fixed order.
    """
    cfg.validate()
    rows = []
    for label, variant in _ablation_variants(cfg):
        la, arap, tcfg = variant.validate()
        oracle = _parse_oracle_spec(variant.oracle, variant.frames)
        sketch = _load_sketch(variant.input)
        report = train(sketch, oracle, la, arap, tcfg)
        metrics = compute_metrics(report.final_video, q=tcfg.quadrature, arap=arap)
        rows.append(
            (
                label,
                {
                    "max_length_deviation": metrics.max_length_deviation,
                    "mean_length_deviation": metrics.mean_length_deviation,
                    "total_swept_area": metrics.total_swept_area,
                    "arap_energy": float(metrics.per_frame_arap_energy.sum()),
                    "mean_speed": metrics.mean_speed,
                    "mean_acceleration": metrics.mean_acceleration,
                },
            )
        )
    return rows


def _format_ablation_table(rows) -> str:
    header = ["config"] + list(ABLATION_COLUMNS)
    lines = [",".join(header)]
    for label, row in rows:
        lines.append(label + "," + ",".join(f"{row[c]:.17g}" for c in ABLATION_COLUMNS))
    return "\n".join(lines) + "\n"


def _print_ablation_table(rows):
    widths = [10] + [22] * len(ABLATION_COLUMNS)
    header = ["config"] + list(ABLATION_COLUMNS)
    print("".join(h.ljust(w) for h, w in zip(header, widths)))
    for label, row in rows:
        cells = [label] + [f"{row[c]:.6g}" for c in ABLATION_COLUMNS]
        print("".join(c.ljust(w) for c, w in zip(cells, widths)))


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    file_values = {}
    if args.config:
        cfg_path = Path(args.config)
        if not cfg_path.is_file():
            raise ConfigError(f"config file not found: {cfg_path}")
        try:
            file_values = json.loads(cfg_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {cfg_path} is not valid JSON: {exc}") from None
        if not isinstance(file_values, dict):
            raise ConfigError(f"config file {cfg_path} must hold a JSON object")

    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    for key, value in file_values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    for key in known:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            setattr(cfg, key, flag_value)
    return cfg


def _add_run_flags(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="JSON config file (flags override it)")
    sub.add_argument("--input", help="input sketch SVG")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--frames", type=int, help="number of frames (default 24)")
    sub.add_argument("--iters", type=int, help="training iterations (default 1000)")
    sub.add_argument("--lambda-l", dest="lambda_l", type=float, help="length weight")
    sub.add_argument("--lambda-a", dest="lambda_a", type=float, help="area weight")
    sub.add_argument("--lambda-arap", dest="lambda_arap", type=float, help="rigidity weight")
    sub.add_argument("--oracle", help="guidance oracle, e.g. rigid:angle=0.1 (default static)")
    sub.add_argument("--seed", type=int, help="random seed (default 0)")
    sub.add_argument("--lr", type=float, help="Adam learning rate (default 1e-3)")
    sub.add_argument("--cosine-decay", dest="cosine_decay", action="store_const", const=True)
    sub.add_argument("--wiring", choices=[WIRING_JOINT, WIRING_POST_HOC])
    sub.add_argument("--composition", choices=[RECURRENT, ANCHORED])
    sub.add_argument("--length-anchor", dest="length_anchor", choices=[ANCHOR_INITIAL, ANCHOR_PREVIOUS])
    sub.add_argument("--fit-mode", dest="fit_mode", choices=[FIT_ROTATION_ONLY, FIT_ROTATION_SCALE])
    sub.add_argument("--samples-u", dest="samples_u", type=int, help="curve quadrature samples")
    sub.add_argument("--samples-t", dest="samples_t", type=int, help="time quadrature samples")
    sub.add_argument("--frequencies", type=int, help="positional encoding frequencies")
    sub.add_argument("--feature-dim", dest="feature_dim", type=int, help="shared feature width")
    sub.add_argument("--log-every", dest="log_every", type=int, help="progress print period")
    sub.add_argument("--ppm", action="store_const", const=True, help="also write PPM rasters")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchanim",
        description="Animate a vector sketch by optimizing control-point trajectories.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    animate = subs.add_parser("animate", help="train and export an animation")
    _add_run_flags(animate)

    metrics = subs.add_parser("metrics", help="recompute metrics for exported frames")
    metrics.add_argument("--dir", required=True, help="directory with frame_*.svg")
    metrics.add_argument("--out", help="write metrics JSON here (default: stdout)")
    metrics.add_argument("--fit-mode", dest="fit_mode",
                         choices=[FIT_ROTATION_ONLY, FIT_ROTATION_SCALE],
                         default=FIT_ROTATION_SCALE)
    metrics.add_argument("--samples-u", dest="samples_u", type=int, default=1000)
    metrics.add_argument("--samples-t", dest="samples_t", type=int, default=16)

    ablate = subs.add_parser("ablate", help="run full / no_la / no_arap comparison")
    _add_run_flags(ablate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "animate":
            return run_animate(_merge_config(args, parser))
        if args.command == "metrics":
            report = run_metrics(
                args.dir,
                q=QuadratureSpec(args.samples_u, args.samples_t),
                arap=ArapConfig(fit_mode=args.fit_mode),
            )
            text = _metrics_json(report)
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
            return 0
        if args.command == "ablate":
            cfg = _merge_config(args, parser)
            rows = run_ablation(cfg)
            _print_ablation_table(rows)
            out_dir = Path(cfg.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "ablation.csv").write_text(_format_ablation_table(rows), encoding="utf-8")
            return 0
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteLoss as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, SketchAnimError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
