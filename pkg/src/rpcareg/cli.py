"""Command-line entry points.

Subcommands: synth (render the benchmark scene), register (multilevel
groupwise registration), landscape (measure sweeps over prescribed
deformations), eval-landmarks (landmark accuracy before/after).  Exit
codes: 0 success, 2 usage or configuration error, 3 numeric failure,
1 I/O failure.  Directory-producing commands stage their outputs in a
temporary sibling directory and move files into place only on success.
"""

from __future__ import annotations

import argparse
import glob as globmod
import logging
import os
import shutil
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import fileio
from .grid import DisplacementField, LandmarkSet, map_landmarks, warp
from .landscape import METRICS, landscape_sweep
from .metrics import landmark_accuracy
from .multilevel import register
from .operators import unvec_stack
from .solver import NumericFailure
from .synth import DEFORMATION_KINDS, generate_ellipse_sequence

logger = logging.getLogger(__name__)


@contextmanager
def _staged_dir(out_dir):
    """Write into a temp sibling of out_dir; move files into place on success."""
    out_dir = Path(out_dir)
    parent = out_dir.absolute().parent
    stage = Path(tempfile.mkdtemp(prefix=".stage-", dir=parent))
    try:
        yield stage
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    out_dir.mkdir(parents=True, exist_ok=True)
    for item in sorted(stage.iterdir()):
        os.replace(item, out_dir / item.name)
    stage.rmdir()


def _staged_file_write(path, write_fn):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=str(path.absolute().parent))
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_image_group(pattern: str):
    paths = sorted(globmod.glob(pattern))
    if len(paths) < 2:
        raise ValueError(f"need at least 2 images, glob {pattern!r} matched {len(paths)}")
    images = [fileio.read_pgm16(p) for p in paths]
    shape = images[0].shape
    for p, im in zip(paths, images):
        if im.shape != shape:
            raise ValueError(f"{p}: image size {im.shape} differs from {shape}")
    return paths, images


def cmd_synth(args) -> int:
    config = fileio.scene_config_from_file(args.config)
    t0 = time.perf_counter()
    images, landmark_sets = generate_ellipse_sequence(config)
    t_generate = time.perf_counter() - t0
    width = max(2, len(str(config.frames)))
    t0 = time.perf_counter()
    with _staged_dir(args.out) as stage:
        outputs = []
        for k, im in enumerate(images, start=1):
            name = f"frame_{k:0{width}d}.pgm"
            fileio.write_pgm16(stage / name, im.values)
            outputs.append(name)
        fileio.write_landmarks(stage / "landmarks.txt", landmark_sets)
        outputs.append("landmarks.txt")
        inputs = {str(args.config): fileio.sha256_file(args.config)} if args.config else {}
        fileio.write_manifest(
            stage / "manifest.json",
            "synth",
            fileio.scene_config_snapshot(config),
            inputs,
            outputs,
            {"generate": t_generate, "write": time.perf_counter() - t0},
        )
    return 0


def cmd_register(args) -> int:
    paths, images = _read_image_group(args.images)
    config = fileio.registration_config_from_file(args.config)
    t0 = time.perf_counter()
    result = register(images, config)
    t_solve = time.perf_counter() - t0
    N = len(images)
    m, n = images[0].shape
    width = max(2, len(str(N)))
    t0 = time.perf_counter()
    with _staged_dir(args.out) as stage:
        outputs = []
        fields = np.stack([f.components for f in result.fields])
        fileio.write_fields(stage / "fields.bin", fields)
        outputs.append("fields.bin")
        low_planes = unvec_stack(result.low_rank, m, n)
        sparse_planes = unvec_stack(result.sparse, m, n)
        for k in range(N):
            warped = warp(images[k], result.fields[k]).values
            for name, values in (
                (f"warped_{k + 1:0{width}d}.pgm", warped),
                (f"lowrank_{k + 1:0{width}d}.pgm", low_planes[k]),
                # sparse parts are signed; remap [-1, 1] -> [0, 1] for the graymap
                (f"sparse_{k + 1:0{width}d}.pgm", 0.5 + 0.5 * sparse_planes[k]),
            ):
                fileio.write_pgm16(stage / name, values)
                outputs.append(name)
        fileio.write_diagnostics_csv(stage / "diagnostics.csv", list(result.records))
        fileio.write_singular_values_csv(stage / "singular_values.csv", list(result.records))
        outputs += ["diagnostics.csv", "singular_values.csv"]
        inputs = {p: fileio.sha256_file(p) for p in paths}
        if args.config:
            inputs[str(args.config)] = fileio.sha256_file(args.config)
        fileio.write_manifest(
            stage / "manifest.json",
            "register",
            fileio.registration_config_snapshot(config),
            inputs,
            outputs,
            {"solve": t_solve, "write": time.perf_counter() - t0},
        )
    return 0


def cmd_landscape(args) -> int:
    paths, images = _read_image_group(args.images)
    t0 = time.perf_counter()
    rows = landscape_sweep(images, args.metric, args.kind, args.k, threads=args.threads)
    t_sweep = time.perf_counter() - t0
    out = Path(args.out)
    _staged_file_write(out, lambda tmp: fileio.write_landscape_csv(tmp, rows))
    manifest = out.with_name(out.name + ".manifest.json")
    config = {"metric": args.metric, "kind": args.kind, "k": args.k, "threads": args.threads}
    inputs = {p: fileio.sha256_file(p) for p in paths}
    _staged_file_write(
        manifest,
        lambda tmp: fileio.write_manifest(tmp, "landscape", config, inputs, [out.name], {"sweep": t_sweep}),
    )
    return 0


def cmd_eval_landmarks(args) -> int:
    positions = fileio.read_landmarks(args.landmarks)
    fields = fileio.read_fields(args.fields)
    if fields.shape[0] != positions.shape[0]:
        raise ValueError(
            f"frame count mismatch: {positions.shape[0]} landmark frames, {fields.shape[0]} fields"
        )
    t0 = time.perf_counter()
    before = landmark_accuracy(positions)
    mapped = []
    for k in range(fields.shape[0]):
        field = DisplacementField(fields[k])
        moved = map_landmarks(LandmarkSet(positions[k]), field)
        if moved.converged is not None and not np.all(moved.converged):
            bad = np.flatnonzero(~moved.converged) + 1
            logger.warning("landmark inversion did not converge for landmarks %s", bad.tolist())
        mapped.append(moved.positions)
    after = landmark_accuracy(np.stack(mapped))
    t_eval = time.perf_counter() - t0
    out = Path(args.out)
    _staged_file_write(out, lambda tmp: fileio.write_landmark_eval_csv(tmp, before, after))
    manifest = out.with_name(out.name + ".manifest.json")
    inputs = {
        str(args.landmarks): fileio.sha256_file(args.landmarks),
        str(args.fields): fileio.sha256_file(args.fields),
    }
    _staged_file_write(
        manifest,
        lambda tmp: fileio.write_manifest(tmp, "eval-landmarks", {}, inputs, [out.name], {"eval": t_eval}),
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpcareg",
        description="Groupwise registration with a constrained low-rank/sparse dissimilarity",
    )
    parser.add_argument(
        "--log-level",
        default="warning",
        choices=["debug", "info", "warning", "error"],
        help="logging verbosity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render the textured-ellipse benchmark scene")
    p.add_argument("--config", default=None, help="flat key=value scene config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("register", help="run the multilevel groupwise registration")
    p.add_argument("images", help="glob matching the input PGM frames (sorted order)")
    p.add_argument("--config", default=None, help="flat key=value registration config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("landscape", help="sweep a group measure over a deformation family")
    p.add_argument("images", help="glob matching the input PGM frames (sorted order)")
    p.add_argument("--metric", required=True, choices=METRICS)
    p.add_argument("--kind", required=True, choices=DEFORMATION_KINDS)
    p.add_argument("--k", type=int, required=True, help="sweep covers j = -k..k")
    p.add_argument("--threads", type=int, default=1, help="parallel workers across j")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("eval-landmarks", help="landmark accuracy before/after registration")
    p.add_argument("landmarks", help="landmark text file")
    p.add_argument("fields", help="displacement-field file from register")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_eval_landmarks)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
