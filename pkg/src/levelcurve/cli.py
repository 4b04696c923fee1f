"""Command-line entry point.

Exit codes: 0 success, 1 validation error (including bad usage), 2 I/O error.
Every subcommand reads and validates all inputs before it writes anything.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import registry
from .config import load_config, parse_config
from .evolve import evolve
from .exceptions import IoError, LevelCurveError, ValidationError
from .grid import Rect, init_levelset_rect
from .harness import experiment_preset, run_experiment, write_report
from .io import encode, read_image, read_mask, write_image, write_mask
from .metrics import prf
from .models_som import diagnostic_field
from .som import TrainingSchedule, csom_train, format_maps, load_maps, train_som
from .synth import Box, Disc, PRESETS, SynthSpec, add_gaussian_noise, add_salt_pepper, gen_synthetic

PROG = "levelcurve"


class _Parser(argparse.ArgumentParser):
    """Report usage problems as validation errors (exit 1), not argparse's 2."""

    def error(self, message):
        raise ValidationError(message)


# CLI flag -> registry parameter name
_MODEL_FLAGS = {
    "sigma": float, "sigma_prime": float, "sigma_star": float, "alpha": float,
    "lambda_plus": float, "lambda_minus": float, "mu": float, "nu": float, "beta": float,
    "k": int, "eps": float, "dt": float, "rho": float, "t_max_evol": int,
    "stable_window": int, "scheme": str, "map_rows": int, "map_cols": int, "eta0": float,
    "r0": float, "t_max_train": int,
}


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description="Level-set segmentation with SOM-driven speed models.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="render a synthetic preset or spec file")
    g.add_argument("spec", help=f"preset name ({', '.join(sorted(PRESETS))}) or spec file")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("-t", "--truth")
    g.add_argument("--noise", choices=("none", "gaussian", "salt_pepper"), default="none")
    g.add_argument("--sd", type=float, default=0.0)
    g.add_argument("--density", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train-som", help="train a map pair (CSOM) or a single map (--unsup)")
    t.add_argument("-i", "--image", required=True)
    t.add_argument("-o", "--output", required=True)
    t.add_argument("--fg")
    t.add_argument("--bg")
    t.add_argument("--unsup", action="store_true")
    t.add_argument("--rows", type=int, default=None)
    t.add_argument("--cols", type=int, default=None)
    t.add_argument("--eta0", type=float, default=0.9)
    t.add_argument("--r0", type=float, default=None)
    t.add_argument("--t-max", type=int, default=10000)
    t.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("segment", help="evolve a contour with one model")
    s.add_argument("--model", required=True, choices=registry.MODEL_NAMES)
    s.add_argument("--init", help="initial rectangle x,y,w,h")
    s.add_argument("-i", "--image", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--fg", help="foreground training mask (P5, nonzero = selected)")
    s.add_argument("--bg", help="background training mask")
    s.add_argument("--maps", help="pre-trained map file from train-som")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dump-masks", metavar="DIR", help="write one mask per iteration")
    s.add_argument("--dump-field", metavar="PGM",
                   help="write the min-max scaled per-pixel data term (soac, kde, gmm)")
    for name, kind in _MODEL_FLAGS.items():
        s.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, default=None)

    b = sub.add_parser("bench", help="run an experiment config and write a CSV report")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--preset", help="bundled experiment, e.g. table4_1")
    b.add_argument("-o", "--output", required=True)
    b.add_argument("--threads", type=int, default=None)
    b.add_argument("--record-time", action="store_true")

    c = sub.add_parser("score", help="precision, recall and F-measure of a mask")
    c.add_argument("--mask", required=True)
    c.add_argument("--truth", required=True)
    return p


# -- helpers ---------------------------------------------------------------------

def _parse_spec_file(path) -> SynthSpec:
    """Spec files use the config syntax: width, height, background, ramp = l,r,
    box = x,y,w,h,v [; ...], disc = cx,cy,r,v [; ...]."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read spec {path!r}: {exc.strerror or exc}") from exc
    fields: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        k, v = (x.strip() for x in line.split("=", 1))
        if k not in ("width", "height", "background", "ramp", "box", "disc"):
            raise ValidationError(f"{path}:{lineno}: unknown key {k!r}")
        fields[k] = v

    def nums(text, n, what):
        parts = [x.strip() for x in text.split(",")]
        try:
            vals = [float(x) for x in parts]
        except ValueError:
            raise ValidationError(f"{what} needs {n} numbers, got {text!r}") from None
        if len(vals) != n:
            raise ValidationError(f"{what} needs {n} numbers, got {text!r}")
        return vals

    for k in ("width", "height"):
        if k not in fields:
            raise ValidationError(f"spec file lacks {k!r}")
    shapes = []
    for item in filter(None, (x.strip() for x in fields.get("box", "").split(";"))):
        x, y, w, h, v = nums(item, 5, "box")
        shapes.append(Box(int(x), int(y), int(w), int(h), v))
    for item in filter(None, (x.strip() for x in fields.get("disc", "").split(";"))):
        shapes.append(Disc(*nums(item, 4, "disc")))
    ramp = tuple(nums(fields["ramp"], 2, "ramp")) if "ramp" in fields else (0.0, 0.0)
    return SynthSpec(int(nums(fields["width"], 1, "width")[0]),
                     int(nums(fields["height"], 1, "height")[0]),
                     nums(fields.get("background", "0"), 1, "background")[0],
                     tuple(shapes), ramp)


def _check_writable(*paths) -> None:
    for path in filter(None, paths):
        parent = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(parent):
            raise IoError(f"output directory {parent!r} does not exist")


def _samples(image, mask):
    flat = image.reshape(-1, image.shape[2]) if image.ndim == 3 else image.reshape(-1, 1)
    if mask.shape != image.shape[:2]:
        raise ValidationError(f"training mask {mask.shape} does not match image {image.shape[:2]}")
    return flat[mask.ravel()]


def _write_text(path, text) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path!r}: {exc.strerror or exc}") from exc


# -- subcommands -----------------------------------------------------------------

def _cmd_gen(a) -> int:
    spec = PRESETS[a.spec] if a.spec in PRESETS else (
        _parse_spec_file(a.spec) if os.path.exists(a.spec) else None)
    if spec is None:
        raise ValidationError(f"{a.spec!r} is neither a preset ({', '.join(sorted(PRESETS))}) "
                              "nor an existing spec file")
    if a.sd < 0 or not 0 <= a.density <= 1:
        raise ValidationError("sd must be >= 0 and density within [0, 1]")
    _check_writable(a.output, a.truth)
    image, truth = gen_synthetic(spec)
    if a.noise == "gaussian":
        image = add_gaussian_noise(image, a.sd, a.seed)
    elif a.noise == "salt_pepper":
        image = add_salt_pepper(image, a.density, a.seed)
    payload = encode(image)
    try:
        with open(a.output, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {a.output!r}: {exc.strerror or exc}") from exc
    if a.truth:
        write_mask(a.truth, truth)
    return 0


def _cmd_train(a) -> int:
    image = read_image(a.image)
    dim = image.shape[2] if image.ndim == 3 else 1
    if a.unsup:
        if a.fg or a.bg:
            raise ValidationError("--unsup trains on the whole image; drop --fg/--bg")
        rows = a.rows or (3 if dim > 1 else 5)
        cols = a.cols or (3 if dim > 1 else 1)
    else:
        if not (a.fg and a.bg):
            raise ValidationError("train-som needs --fg and --bg masks, or --unsup")
        rows, cols = a.rows or 3, a.cols or 3
    schedule = TrainingSchedule.preset(rows, cols, eta0=a.eta0, r0=a.r0, t_max=a.t_max, seed=a.seed)
    if a.unsup:
        data = image.reshape(-1, dim)
    else:
        fg = _samples(image, read_mask(a.fg))
        bg = _samples(image, read_mask(a.bg))
    _check_writable(a.output)
    if a.unsup:
        maps = {"map": train_som(data, rows, cols, schedule)}
    else:
        fg_map, bg_map = csom_train(fg, bg, rows, cols, schedule)
        maps = {"fg": fg_map, "bg": bg_map}
    _write_text(a.output, format_maps(maps))
    return 0


def _heat(field: np.ndarray) -> np.ndarray:
    lo, hi = float(field.min()), float(field.max())
    return np.zeros_like(field) if hi == lo else (field - lo) * (255.0 / (hi - lo))


def _cmd_segment(a) -> int:
    if a.init is None:
        raise ValidationError("segment requires --init x,y,w,h")
    rect = Rect.parse(a.init)
    image = read_image(a.image)
    rect.check(image.shape[:2])
    params = {k: getattr(a, k) for k in _MODEL_FLAGS if getattr(a, k) is not None}
    registry.resolve(a.model, params, channels=image.shape[2] if image.ndim == 3 else 1)
    fg = bg = None
    if a.fg or a.bg:
        if not (a.fg and a.bg):
            raise ValidationError("--fg and --bg must be given together")
        fg, bg = _samples(image, read_mask(a.fg)), _samples(image, read_mask(a.bg))
    elif a.model in registry.SUPERVISED and not (a.maps and a.model in ("csomcv", "soac")):
        raise ValidationError(f"model {a.model} is supervised: pass --fg and --bg masks")
    maps = load_maps(a.maps) if a.maps else None
    if a.dump_field and a.model not in ("soac", "kde", "gmm"):
        raise ValidationError("--dump-field is available for soac, kde and gmm only")
    _check_writable(a.output, a.dump_field)
    model, setup = registry.prepare(a.model, image, params, seed=a.seed,
                                    fg_samples=fg, bg_samples=bg, maps=maps)
    phi0 = init_levelset_rect(image.shape[:2], rect, setup.evolve_params.rho)
    history = []
    cb = (lambda it, phi, mask: history.append(mask.copy())) if a.dump_masks else None
    result = evolve(image, phi0, model, setup.evolve_params, callback=cb)
    write_mask(a.output, result.mask)
    if a.dump_masks:
        os.makedirs(a.dump_masks, exist_ok=True)
        for i, m in enumerate(history, 1):
            write_mask(os.path.join(a.dump_masks, f"iter_{i:04d}.pgm"), m)
    if a.dump_field:
        write_image(a.dump_field, _heat(diagnostic_field(image, result.phi, model)))
    print(f"iterations={result.iterations} converged={str(result.converged).lower()}")
    return 0


def _cmd_bench(a) -> int:
    cfg = load_config(a.config) if a.config else experiment_preset(a.preset)
    overrides = {}
    if a.threads is not None:
        if a.threads < 1:
            raise ValidationError("--threads must be >= 1")
        overrides["threads"] = a.threads
    if a.record_time:
        overrides["record_time"] = True
    if overrides:
        cfg = replace(cfg, **overrides)
    for p in cfg.input_paths():
        if not os.path.exists(p):
            raise IoError(f"input file {p!r} does not exist")
    _check_writable(a.output)
    report = run_experiment(cfg)
    write_report(a.output, report)
    return 0


def _cmd_score(a) -> int:
    score = prf(read_mask(a.mask), read_mask(a.truth))
    print(f"{score.precision:.6f} {score.recall:.6f} {score.fmeasure:.6f}")
    return 0


_COMMANDS = {"gen": _cmd_gen, "train-som": _cmd_train, "segment": _cmd_segment,
             "bench": _cmd_bench, "score": _cmd_score}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except IoError as exc:
        print(f"{PROG}: io error: {exc}", file=sys.stderr)
        return 2
    except LevelCurveError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
