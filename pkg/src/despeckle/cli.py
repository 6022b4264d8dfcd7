"""Command-line interface.

Subcommands: synth, noise, denoise, metrics, bench. Exit codes: 0 on
success, 1 on numerical divergence, 2 on usage or file-format errors.

Option values resolve in this order: the DESPECKLE_SEED environment
variable (seed only), explicit flags, a --config key=value file, built-in
defaults. Every artifact written embeds or is accompanied by the resolved
configuration so a run can be reproduced bit-identically from its record.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .bench import DEFAULT_LOOKS, bench_report, run_bench
from .diffusivity import ShanParams, TdeParams
from .fileio import (PgmFormatError, load_image, read_config, save_image,
                     write_config, write_surface_csv, write_trace_csv)
from .grid import StencilMode
from .metrics import (SsimParams, GaussianWindow, psnr, ratio_image,
                      rescale_minmax, ssim, surface_and_contour_table)
from .phantoms import (Checker, Circles, Stripes, SynthSpec, synthesize)
from .solver import (BestPsnr, DivergenceError, FixedIterations,
                     RelativeChange, run)
from .speckle import NoiseSpec, apply_multiplicative, sample_speckle_field

SCALES = {"desk": 256, "small": 128}


class UsageError(Exception):
    pass


def _resolve(cli_value, config: dict, key: str, convert, default):
    """Precedence: explicit flag > config file entry > default."""
    if cli_value is not None:
        return cli_value
    if key in config:
        try:
            return convert(config[key])
        except ValueError as e:
            raise UsageError(f"config key {key}: {e}") from None
    return default


def _resolve_seed(cli_value, config: dict, default=0) -> int:
    env = os.environ.get("DESPECKLE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"DESPECKLE_SEED={env!r} is not an integer") from None
    return _resolve(cli_value, config, "seed", int, default)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_stop(text: str):
    if text == "best-psnr":
        return ("best-psnr", None)
    if text.startswith("fixed:"):
        return ("fixed", int(text.split(":", 1)[1]))
    if text.startswith("reltol:"):
        return ("reltol", float(text.split(":", 1)[1]))
    raise UsageError(
        f"bad --stop value {text!r}; use best-psnr, fixed:N or reltol:T")


def _parse_stencil(text: str) -> StencilMode:
    try:
        return StencilMode(text)
    except ValueError:
        raise UsageError(
            f"bad --stencil value {text!r}; use conservative or paper-central"
        ) from None


def _int_list(text: str) -> tuple[int, ...]:
    items = [p for p in text.split(",") if p.strip()]
    return tuple(int(p) for p in items)


def _float_list(text: str) -> tuple[float, ...]:
    items = [p for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in items)


def _config_of(args) -> dict:
    return read_config(args.config) if getattr(args, "config", None) else {}


def _echo_lines(echo: dict) -> tuple[str, ...]:
    return tuple(f"{k}={v}" for k, v in echo.items())


# ---------------------------------------------------------------- synth


def _cmd_synth(args) -> int:
    cfg = _config_of(args)
    kind = _resolve(args.kind, cfg, "kind", str, "circles")
    width = _resolve(args.width, cfg, "width", int, 256)
    height = _resolve(args.height, cfg, "height", int, 256)
    out = _resolve(args.out, cfg, "out", str, f"{kind}.pgm")

    if kind == "circles":
        radii = _resolve(args.radii, cfg, "radii", _float_list, (20, 28, 36, 44))
        intens = _resolve(args.intensities, cfg, "intensities", _float_list,
                          (90, 140, 190, 240))
        background = _resolve(args.background, cfg, "background", float, 40.0)
        shape = Circles(count=len(radii), radii=tuple(radii),
                        intensities=tuple(intens), background=background)
    elif kind == "stripes":
        shape = Stripes(period=_resolve(args.period, cfg, "period", int, 16),
                        low=_resolve(args.low, cfg, "low", float, 60.0),
                        high=_resolve(args.high, cfg, "high", float, 220.0))
    elif kind == "checker":
        shape = Checker(cell=_resolve(args.cell, cfg, "cell", int, 8),
                        low=_resolve(args.low, cfg, "low", float, 60.0),
                        high=_resolve(args.high, cfg, "high", float, 220.0))
    else:
        raise UsageError(f"unknown phantom kind {kind!r}")

    grid = synthesize(SynthSpec(kind=shape, width=width, height=height))
    echo = {"command": "synth", "kind": kind, "width": width, "height": height}
    save_image(grid, out, comments=_echo_lines(echo))
    print(f"wrote {out} ({width}x{height} {kind})")
    return 0


# ---------------------------------------------------------------- noise


def _cmd_noise(args) -> int:
    cfg = _config_of(args)
    looks = _resolve(args.looks, cfg, "looks", int, 1)
    seed = _resolve_seed(args.seed, cfg)
    out = _resolve(args.out, cfg, "out", str, None)
    if out is None:
        raise UsageError("noise: --out is required")

    clean = load_image(args.input)
    eta = sample_speckle_field(NoiseSpec(looks=looks, seed=seed),
                               clean.width, clean.height)
    noisy = apply_multiplicative(clean, eta)
    echo = {"command": "noise", "input": args.input, "looks": looks, "seed": seed}
    save_image(noisy, out, comments=_echo_lines(echo))
    print(f"wrote {out} (L={looks}, seed={seed})")
    return 0


# -------------------------------------------------------------- denoise


def _make_params(args, cfg):
    model = _resolve(args.model, cfg, "model", str, "tde")
    stencil = _parse_stencil(_resolve(args.stencil, cfg, "stencil", str,
                                      "conservative"))
    stop_kind, stop_arg = _parse_stop(_resolve(args.stop, cfg, "stop", str,
                                               "reltol:1e-4"))
    max_iter = _resolve(args.max_iter, cfg, "max-iter", int, 2000)
    common = {"xi": _resolve(args.xi, cfg, "xi", float, 1.0),
              "tau": _resolve(args.tau, cfg, "tau", float, 0.2),
              "max_iter": max_iter, "stencil": stencil}
    if model == "tde":
        params = TdeParams(gamma=_resolve(args.gamma, cfg, "gamma", float, 2.0),
                           nu=_resolve(args.nu, cfg, "nu", float, 1.0),
                           k_edge=_resolve(args.k, cfg, "k", float, 1.0),
                           **common)
    elif model == "shan":
        params = ShanParams(nu=_resolve(args.nu, cfg, "nu", float, 2.0),
                            beta_exp=_resolve(args.beta, cfg, "beta", float, 2.25),
                            **common)
    else:
        raise UsageError(f"unknown model {model!r} (expected tde or shan)")
    return model, params, (stop_kind, stop_arg)


def _cmd_denoise(args) -> int:
    cfg = _config_of(args)
    model, params, (stop_kind, stop_arg) = _make_params(args, cfg)
    out = _resolve(args.out, cfg, "out", str, None)
    if out is None:
        raise UsageError("denoise: --out is required")
    ref_path = _resolve(args.reference, cfg, "reference", str, None)

    noisy = load_image(args.input)
    reference = load_image(ref_path) if ref_path else None

    if stop_kind == "best-psnr":
        if reference is None:
            raise UsageError("--stop best-psnr needs --reference")
        stop = BestPsnr(reference=reference,
                        patience=_resolve(args.patience, cfg, "patience", int, 20))
    elif stop_kind == "fixed":
        stop = FixedIterations(stop_arg)
    else:
        stop = RelativeChange(stop_arg)
    params = type(params)(**{**params.__dict__, "stop": stop})

    want_trace = _resolve(args.trace, cfg, "trace", _parse_bool, False)
    report = run(noisy, params, reference=reference, trace_ssim=want_trace)

    echo = {"command": "denoise", "input": args.input,
            "reference": ref_path or "", **report.params_echo}
    save_image(report.final, out, comments=_echo_lines(echo))
    messages = [f"wrote {out} after {report.iterations_run} iterations"]

    stem = str(Path(out).with_suffix(""))
    if _resolve(args.export_ratio, cfg, "export-ratio", _parse_bool, False):
        ratio = ratio_image(noisy, report.final)
        save_image(rescale_minmax(ratio), stem + ".ratio.pgm",
                   comments=_echo_lines(echo))
        write_surface_csv(stem + ".ratio.csv", surface_and_contour_table(ratio))
        write_config(stem + ".ratio.csv.cfg", echo)
        messages.append(f"ratio image: {stem}.ratio.pgm (raw: {stem}.ratio.csv)")
    if _resolve(args.export_surface, cfg, "export-surface", _parse_bool, False):
        write_surface_csv(stem + ".surface.csv",
                          surface_and_contour_table(report.final))
        write_config(stem + ".surface.csv.cfg", echo)
        messages.append(f"surface table: {stem}.surface.csv")
    if want_trace:
        write_trace_csv(stem + ".trace.csv", report.trace)
        write_config(stem + ".trace.csv.cfg", echo)
        messages.append(f"trace: {stem}.trace.csv")

    if reference is not None:
        messages.append(f"PSNR {psnr(reference, report.final):.4f} dB, "
                        f"SSIM {ssim(reference, report.final):.6f}")
    print("\n".join(messages))
    return 0


# -------------------------------------------------------------- metrics


def _cmd_metrics(args) -> int:
    cfg = _config_of(args)
    mode = _resolve(args.ssim_mode, cfg, "ssim-mode", str, "global")
    if mode not in ("global", "windowed"):
        raise UsageError(f"bad --ssim-mode {mode!r}; use global or windowed")
    reference = load_image(args.reference)
    test = load_image(args.test)
    sp = SsimParams() if mode == "global" else SsimParams(window=GaussianWindow())
    print(f"PSNR: {psnr(reference, test):.4f} dB")
    print(f"SSIM: {ssim(reference, test, sp):.6f}")
    return 0


# ---------------------------------------------------------------- bench


def _cmd_bench(args) -> int:
    cfg = _config_of(args)
    scale = _resolve(args.scale, cfg, "scale", str, "desk")
    if scale not in SCALES:
        raise UsageError(f"unknown --scale {scale!r}; use desk or small")
    size = _resolve(args.size, cfg, "size", int, SCALES[scale])
    looks = _resolve(args.looks, cfg, "looks", _int_list, DEFAULT_LOOKS)
    if not looks:
        raise UsageError("bench: the looks list is empty")
    models = _resolve(args.models, cfg, "models",
                      lambda s: tuple(p for p in s.split(",") if p), ("tde", "shan"))
    phantoms = _resolve(args.phantoms, cfg, "phantoms",
                        lambda s: tuple(p for p in s.split(",") if p),
                        ("circles", "stripes", "checker"))
    env_seed = os.environ.get("DESPECKLE_SEED")
    if env_seed is not None:
        try:
            seeds = (int(env_seed),)
        except ValueError:
            raise UsageError(f"DESPECKLE_SEED={env_seed!r} is not an integer") from None
    else:
        seeds = _resolve(args.seeds, cfg, "seeds", _int_list, (0,))
    max_iter = _resolve(args.max_iter, cfg, "max-iter", int, None)
    patience = _resolve(args.patience, cfg, "patience", int, 20)
    out = _resolve(args.out, cfg, "out", str, "bench_results.csv")

    def progress(row):
        if not args.quiet:
            print(f"  {row.image} L={row.looks} {row.model} seed={row.seed}: "
                  f"{row.psnr_noisy:.2f} -> {row.psnr_restored:.2f} dB "
                  f"({row.iterations} it, {row.wall_ms:.0f} ms)")

    try:
        rows = run_bench(phantoms=phantoms, looks=looks, models=models,
                         seeds=seeds, size=size, max_iter=max_iter,
                         patience=patience, progress=progress)
    except ValueError as e:
        raise UsageError(str(e)) from None

    echo = {"command": "bench", "phantoms": ",".join(phantoms),
            "looks": ",".join(map(str, looks)),
            "models": ",".join(models), "seeds": ",".join(map(str, seeds)),
            "size": size, "patience": patience,
            "max_iter": max_iter if max_iter is not None else ""}
    summary = bench_report(rows, out, config=echo)
    print(summary)
    print(f"wrote {out}")
    return 0


# ----------------------------------------------------------------- main


def _add_common(p):
    p.add_argument("--config", help="key=value file supplying defaults")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="despeckle",
        description="Gray-level telegraph diffusion despeckling toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a clean test phantom")
    sp.add_argument("--kind", choices=("circles", "stripes", "checker"))
    sp.add_argument("--width", type=int)
    sp.add_argument("--height", type=int)
    sp.add_argument("--radii", type=_float_list)
    sp.add_argument("--intensities", type=_float_list)
    sp.add_argument("--background", type=float)
    sp.add_argument("--period", type=int)
    sp.add_argument("--cell", type=int)
    sp.add_argument("--low", type=float)
    sp.add_argument("--high", type=float)
    sp.add_argument("--out", "-o")
    _add_common(sp)
    sp.set_defaults(func=_cmd_synth)

    np_ = sub.add_parser("noise", help="apply multiplicative L-look speckle")
    np_.add_argument("input")
    np_.add_argument("--looks", type=int)
    np_.add_argument("--seed", type=int)
    np_.add_argument("--out", "-o")
    _add_common(np_)
    np_.set_defaults(func=_cmd_noise)

    dp = sub.add_parser("denoise", help="despeckle an image")
    dp.add_argument("input")
    dp.add_argument("--model", choices=("tde", "shan"))
    dp.add_argument("--gamma", type=float, help="damping (tde)")
    dp.add_argument("--nu", type=float, help="gray-level exponent")
    dp.add_argument("--k", type=float, help="edge-stopper gradient scale (tde)")
    dp.add_argument("--beta", type=float, help="gradient exponent (shan)")
    dp.add_argument("--xi", type=float, help="presmoothing sigma")
    dp.add_argument("--tau", type=float, help="time step")
    dp.add_argument("--stop", help="best-psnr | fixed:N | reltol:T")
    dp.add_argument("--patience", type=int, help="best-psnr patience")
    dp.add_argument("--max-iter", type=int, dest="max_iter")
    dp.add_argument("--reference", help="clean image for PSNR tracking")
    dp.add_argument("--stencil", help="conservative | paper-central")
    dp.add_argument("--export-ratio", action="store_const", const=True,
                    dest="export_ratio")
    dp.add_argument("--export-surface", action="store_const", const=True,
                    dest="export_surface")
    dp.add_argument("--trace", action="store_const", const=True)
    dp.add_argument("--out", "-o")
    _add_common(dp)
    dp.set_defaults(func=_cmd_denoise)

    mp = sub.add_parser("metrics", help="PSNR/SSIM between two images")
    mp.add_argument("reference")
    mp.add_argument("test")
    mp.add_argument("--ssim-mode", dest="ssim_mode", choices=("global", "windowed"))
    _add_common(mp)
    mp.set_defaults(func=_cmd_metrics)

    bp = sub.add_parser("bench", help="run the phantom x looks x model grid")
    bp.add_argument("--scale", choices=tuple(SCALES))
    bp.add_argument("--size", type=int, help="canvas override in pixels")
    bp.add_argument("--looks", type=_int_list, help="comma list, e.g. 1,3,5,10,33")
    bp.add_argument("--models", help="comma list from: tde,shan")
    bp.add_argument("--phantoms", help="comma list from: circles,stripes,checker")
    bp.add_argument("--seeds", type=_int_list, help="comma list of base seeds")
    bp.add_argument("--max-iter", type=int, dest="max_iter")
    bp.add_argument("--patience", type=int)
    bp.add_argument("--quiet", action="store_true")
    bp.add_argument("--out", "-o")
    _add_common(bp)
    bp.set_defaults(func=_cmd_bench)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except PgmFormatError as e:
        print(f"format error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DivergenceError as e:
        print(f"numerical divergence: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
