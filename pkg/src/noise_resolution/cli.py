"""Command-line entry point: ``nru <command> [options]``.

Commands: constants, verify, state, heisenberg, simulate, analyze, sweep.
Exit codes: 0 success, 1 bound violated beyond tolerance, 2 usage or
format error. JSON outputs embed the tool version and a config echo; CSV
outputs stay plain and, when written to a file, get a ``.meta.json`` sidecar
with the same echo.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from . import detector as det
from . import functionals as fn
from . import heisenberg_ext as hx
from . import modes as md
from . import photon_states as ps

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(rows: list[dict], fmt: str, out: str | None, echo: dict) -> None:
    if fmt == "json":
        text = json.dumps({"version": __version__, "config": echo, "rows": rows}, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
        if fmt == "csv":
            meta = {"version": __version__, "config": echo}
            Path(out + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)


def _echo(args) -> dict:
    skip = {"func", "out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _load_json_arg(value: str | None):
    if value is None:
        return None
    path = Path(value)
    try:
        if path.exists():
            return json.loads(path.read_text())
        return json.loads(value)
    except json.JSONDecodeError as exc:
        raise UsageError(f"cannot parse JSON spec {value!r}: {exc}") from None


def _mode_from_args(args):
    spec = _load_json_arg(getattr(args, "mode", None))
    if spec is None:
        raise UsageError("a --mode spec is required")
    spec.setdefault("dim", args.dim)
    return md.mode_from_dict(spec)


# ------------------------------------------------------------------ commands


def cmd_constants(args) -> int:
    rows = [
        {"d": d, "C_d": fn.cd_constant(d), "C_tilde_d": fn.cd_tilde(d), "inv_C_d": 1.0 / fn.cd_constant(d)}
        for d in (1, 2, 3)
    ]
    _emit(rows, args.format, args.out, _echo(args))
    return EXIT_OK


def cmd_verify(args) -> int:
    d = args.dim
    n = args.N or md.DEFAULT_N[d]
    if args.grid_file:
        f = fn.GridField.from_dict(_load_json_arg(args.grid_file))
        d = f.dim
    elif args.density == "mixture":
        spec = _load_json_arg(args.mixture) or {}
        try:
            f = fn.sample_density("mixture", d, n, centers=spec["centers"], widths=spec["widths"],
                                  weights=spec.get("weights"))
        except KeyError as exc:
            raise UsageError(f"mixture spec needs {exc}") from None
    else:
        f = fn.sample_density(args.density, d, n, scale=args.scale)
    value = fn.noise_resolution_functional(f)
    bound = fn.cd_tilde(d)
    row = {
        "density": "grid" if args.grid_file else args.density,
        "dim": d,
        "N": f.samples_per_axis,
        "value": value,
        "bound": bound,
        "margin": value - bound,
        "relative_margin": value / bound - 1.0,
    }
    _emit([row], args.format, args.out, _echo(args))
    return EXIT_VIOLATION if row["relative_margin"] < -args.tolerance else EXIT_OK


def cmd_state(args) -> int:
    spec = _load_json_arg(args.state)
    if spec is None:
        raise UsageError("a --state spec is required")
    state = ps.state_from_dict(spec)
    mode = _mode_from_args(args)
    rep = ps.noise_resolution_product(state, mode, path=args.path)
    row = rep.as_row()
    _emit([row], args.format, args.out, _echo(args))
    tol = args.tolerance * rep.bound
    violated = rep.product_margin < -tol or rep.gamma_margin < -args.tolerance * rep.gamma_bound
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_heisenberg(args) -> int:
    mode = _mode_from_args(args)
    rep = hx.extended_heisenberg(mode, hbar=args.hbar, path=args.path)
    row = rep.as_row()
    _emit([row], args.format, args.out, _echo(args))
    if math.isfinite(rep.product) and rep.product < rep.classical_bound * (1 - args.tolerance):
        return EXIT_VIOLATION
    return EXIT_OK


def _experiment_config(args) -> det.ExperimentConfig:
    data = _load_json_arg(args.config) or {}
    for key in ("seed", "flux_per_pixel", "n_frames", "width", "height"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    return det.ExperimentConfig.from_dict(data)


def cmd_simulate(args) -> int:
    cfg = _experiment_config(args)
    stack = det.simulate_frames(cfg.flux_per_pixel, cfg.width, cfg.height, cfg.n_frames,
                                det.psf_from_dict(cfg.psf), cfg.seed, cfg.pixel_pitch)
    det.write_nru1(args.output, stack)
    meta = {"version": __version__, "config": cfg.to_dict(), "provenance": stack.provenance}
    Path(str(args.output) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _surface_out(surface: det.Q2Surface, args) -> None:
    if args.out:
        base = Path(args.out)
        base.with_suffix(".csv").write_text(surface.to_csv())
        base.with_suffix(".json").write_text(surface.to_json() + "\n")
    elif args.format == "json":
        sys.stdout.write(surface.to_json() + "\n")
    else:
        sys.stdout.write(surface.to_csv())


def _surface_status(surface: det.Q2Surface, tolerance: float) -> int:
    limit = surface.reference["inv_C2"] * (1 + tolerance)
    return EXIT_VIOLATION if any(r.q2 > limit for r in surface.rows) else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args)
    surface = det.experiment_table(cfg, workers=args.workers)
    _surface_out(surface, args)
    return _surface_status(surface, args.tolerance)


def cmd_analyze(args) -> int:
    paths = args.frames
    if len(paths) == 1 and not paths[0].endswith(".csv"):
        stack = det.read_nru1(paths[0])
    else:
        stack = det.read_csv_frames(paths, args.pixel_pitch)
    cfg = _load_json_arg(args.config) or {}
    psf_spec = _load_json_arg(args.psf) or cfg.get("psf")
    psf = det.psf_from_dict(psf_spec) if psf_spec else None
    bins_x = _ints(args.bins_x) or tuple(cfg.get("bins_x", (1,)))
    bins_y = _ints(args.bins_y) or tuple(cfg.get("bins_y", (1,)))
    bunches = _ints(args.bunches) or tuple(cfg.get("bunches", (1,)))
    width_mode = cfg.get("width_mode", "area")
    width_source = cfg.get("width_source", "response")
    echo = {"source": [str(p) for p in paths], "bins_x": list(bins_x), "bins_y": list(bins_y),
            "bunches": list(bunches), "width_mode": width_mode, "width_source": width_source}
    if psf is not None:
        echo["psf"] = det.psf_to_dict(psf)
    surface = det.analyze_stack(stack, bins_x, bins_y, bunches, psf, width_mode,
                                int(cfg.get("bootstrap", 0)), args.workers, echo, width_source)
    _surface_out(surface, args)
    return _surface_status(surface, args.tolerance)


def _ints(text: str | None):
    if not text:
        return None
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nru", description="Noise-resolution uncertainty laboratory")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=True):
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--tolerance", type=float, default=0.02,
                        help="relative tolerance before a bound counts as violated")

    sp = sub.add_parser("constants", help="C_d, C~_d and 1/C_d for d = 1, 2, 3")
    common(sp)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("verify", help="evaluate the noise-resolution functional of a density")
    sp.add_argument("--density", choices=fn.DENSITY_KINDS, default="epanechnikov")
    sp.add_argument("--dim", type=int, choices=(1, 2, 3), default=3)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--mixture", default=None, help="JSON {centers, widths, weights} or file")
    sp.add_argument("--grid-file", default=None, help="JSON grid field (dim, extent, N, values)")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    for name, func, helptext in (("state", cmd_state, "uncertainty report for a (state, mode) pair"),
                                 ("heisenberg", cmd_heisenberg, "extended Heisenberg report for a mode")):
        sp = sub.add_parser(name, help=helptext)
        if name == "state":
            sp.add_argument("--state", required=True, help='JSON, e.g. {"kind": "fock", "n": 0}')
        else:
            sp.add_argument("--hbar", type=float, default=1.0)
        sp.add_argument("--mode", required=True, help='JSON, e.g. {"kind": "plane_wave", "side": 1}')
        sp.add_argument("--dim", type=int, choices=(1, 2, 3), default=3)
        sp.add_argument("--path", choices=("analytic", "grid"), default="analytic")
        common(sp)
        sp.set_defaults(func=func)

    def experiment_flags(sp):
        sp.add_argument("--config", default=None, help="JSON experiment config (file or inline)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--flux-per-pixel", type=float, default=None)
        sp.add_argument("--n-frames", type=int, default=None)
        sp.add_argument("--width", type=int, default=None)
        sp.add_argument("--height", type=int, default=None)

    sp = sub.add_parser("simulate", help="simulate a frame stack and write it as NRU1")
    experiment_flags(sp)
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="simulate and tabulate the full Q_2^2 surface")
    experiment_flags(sp)
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("analyze", help="Q_2^2 surface of an NRU1 file or CSV frames")
    sp.add_argument("frames", nargs="+")
    sp.add_argument("--psf", default=None)
    sp.add_argument("--config", default=None, help="take bins/bunches/psf from an experiment config")
    sp.add_argument("--bins-x", default=None)
    sp.add_argument("--bins-y", default=None)
    sp.add_argument("--bunches", default=None)
    sp.add_argument("--pixel-pitch", type=float, default=1.0)
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, det.FrameFormatError, ValueError, KeyError, OSError) as exc:
        print(f"nru {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
