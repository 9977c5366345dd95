"""Command-line front end.

Commands: ``depth-profile``, ``sampling-plan``, ``closing-speed``,
``simulate``.  Each writes CSV plus a rendered PNG into ``--output``.

Exit codes: 0 success, 2 validation error, 3 parse error, 4 wait timeout.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_depth_model, load_scenario_config
from .depth import DepthErrorModel, depth_bounds, error_at
from .sampling import (
    DepthStream,
    EpsilonInfeasibleError,
    SamplingPlan,
    StreamParseError,
    next_sample_depth,
    sample_stream,
)
from .simulate import TrackParseError, run_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARSE = 3
EXIT_TIMEOUT = 4


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="scenario config providing [model]")
    parser.add_argument("--beta1", type=float, help="quadratic error coefficient [1/m]")
    parser.add_argument("--beta2", type=float, help="linear error coefficient")
    parser.add_argument("--beta3", type=float, help="constant error offset [m]")
    parser.add_argument("--r-squared", type=float, help="coefficient of determination in (0,1)")
    # Analysis commands are seed-free; the flag is accepted for interface
    # uniformity with `simulate`.
    parser.add_argument("--seed", type=int, help=argparse.SUPPRESS)


def _resolve_model(args) -> DepthErrorModel:
    flags = (args.beta1, args.beta2, args.beta3, args.r_squared)
    if args.config is not None and all(f is None for f in flags):
        return load_depth_model(args.config)
    if any(f is None for f in flags):
        raise ConfigError(
            "model: provide --config or all of --beta1/--beta2/--beta3/--r-squared"
        )
    try:
        return DepthErrorModel(
            beta1=args.beta1, beta2=args.beta2, beta3=args.beta3, r_squared=args.r_squared
        )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None


def _outdir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(x_min: float, x_max: float, step: float) -> list[float]:
    if x_min < 0.0 or x_max < x_min:
        raise ConfigError(f"range: need 0 <= x-min <= x-max, got [{x_min}, {x_max}]")
    if not step > 0.0:
        raise ConfigError(f"range: step must be > 0, got {step}")
    n = int(round((x_max - x_min) / step))
    xs = [x_min + i * step for i in range(n + 1) if x_min + i * step <= x_max + 1e-12]
    if not xs or xs[-1] < x_max - 1e-12:
        xs.append(x_max)
    return xs


def _cmd_depth_profile(args) -> int:
    from . import report

    model = _resolve_model(args)
    out = _outdir(args)
    uf = model.uncertainty_factor
    rows = []
    for x in _grid(args.x_min, args.x_max, args.step):
        fx = error_at(model, x)
        lower, upper = depth_bounds(model, x)
        rows.append((x, fx, lower, upper, uf * fx))
    for path in report.write_depth_profile(out, rows):
        print(path)
    return EXIT_OK


def _cmd_sampling_plan(args) -> int:
    from . import report

    model = _resolve_model(args)
    epsilons = args.epsilon or [0.2]
    for eps in epsilons:
        if not eps > 0.0:
            raise ConfigError(f"epsilon: must be > 0, got {eps}")
    out = _outdir(args)
    xs = _grid(args.x_min, args.x_max, args.step)
    columns = []
    for eps in epsilons:
        plan = SamplingPlan(epsilon=eps, model=model)
        col = []
        for x1 in xs:
            try:
                col.append(x1 - next_sample_depth(plan, x1))
            except (ValueError, EpsilonInfeasibleError):
                col.append(None)  # infeasible at this depth; reported per-row
        columns.append(col)
    for path in report.write_sampling_plan(out, epsilons, xs, columns):
        print(path)
    return EXIT_OK


def _cmd_closing_speed(args) -> int:
    from . import report

    model = _resolve_model(args)
    if not args.epsilon_value > 0.0:
        raise ConfigError(f"epsilon: must be > 0, got {args.epsilon_value}")
    stream = DepthStream.from_csv(args.stream)
    plan = SamplingPlan(epsilon=args.epsilon_value, model=model)
    samples = sample_stream(plan, stream)
    out = _outdir(args)
    for path in report.write_closing_speed(out, samples):
        print(path)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    from . import report

    config = load_scenario_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    out = _outdir(args)
    trace = run_scenario(config)
    for path in report.write_trace(out, trace):
        print(path)
    for path in report.render_trace_figures(out, trace, config):
        print(path)
    if not trace.completed:
        print(
            f"wait timeout at intersection {trace.timeout_intersection}; trace incomplete",
            file=sys.stderr,
        )
        return EXIT_TIMEOUT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laneexit",
        description="Depth-uncertainty-aware lane-exit analysis and simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("depth-profile", help="depth error and bound band over a range")
    _add_model_args(p)
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, default=100.0)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--output", default="out", help="output directory")
    p.set_defaults(func=_cmd_depth_profile)

    p = sub.add_parser("sampling-plan", help="sampling distance per epsilon over a depth range")
    _add_model_args(p)
    p.add_argument(
        "--epsilon", type=float, action="append",
        help="deviation threshold (repeatable; default 0.2)",
    )
    p.add_argument("--x-min", type=float, default=10.0)
    p.add_argument("--x-max", type=float, default=100.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--output", default="out")
    p.set_defaults(func=_cmd_sampling_plan)

    p = sub.add_parser("closing-speed", help="replay a depth stream through the sampler")
    _add_model_args(p)
    p.add_argument("--epsilon", dest="epsilon_value", type=float, default=0.2)
    p.add_argument("--stream", type=Path, required=True, help="CSV with header t_s,x_m_m")
    p.add_argument("--output", default="out")
    p.set_defaults(func=_cmd_closing_speed)

    p = sub.add_parser("simulate", help="run a configured scenario and write traces")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--output", default="out")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StreamParseError, TrackParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
