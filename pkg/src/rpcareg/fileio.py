"""File formats and run manifests.

Images are 16-bit binary portable graymaps (big-endian samples per the PGM
convention, row-major).  Landmark files are plain text, one line per
landmark: frame index, landmark index (both 1-based), x1, x2 in pixel
coordinates.  Displacement-field files are binary: magic "DRPCAF1", then
m, n, N as little-endian uint32, then N*m*n*2 little-endian float64 in
frame-major, row-major, component-minor order.  Config files are flat
key = value text with '#' comments; unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .grid import Image, LandmarkSet
from .multilevel import RegistrationConfig, StepRecord
from .synth import EllipseSceneConfig

__all__ = [
    "write_pgm16",
    "read_pgm16",
    "write_landmarks",
    "read_landmarks",
    "write_fields",
    "read_fields",
    "FIELD_MAGIC",
    "parse_flat_config",
    "registration_config_from_file",
    "scene_config_from_file",
    "write_diagnostics_csv",
    "write_singular_values_csv",
    "write_landscape_csv",
    "write_landmark_eval_csv",
    "sha256_file",
    "write_manifest",
]

FIELD_MAGIC = b"DRPCAF1"


# ---------------------------------------------------------------------------
# images

def write_pgm16(path, values: np.ndarray) -> None:
    values = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    m, n = values.shape
    data = np.round(values * 65535.0).astype(">u2")
    header = f"P5\n{n} {m}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def read_pgm16(path) -> Image:
    """Read a binary PGM (8- or 16-bit); intensities are clamped to [0, 1] on ingestion."""
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM file")
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != ord("\n"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(int(raw[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = tokens
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    if data.size != count:
        raise ValueError(f"{path}: truncated PGM data")
    values = np.clip(data.reshape(height, width).astype(float) / maxval, 0.0, 1.0)
    return Image(values)


# ---------------------------------------------------------------------------
# landmarks

def write_landmarks(path, landmark_sets: list[LandmarkSet]) -> None:
    lines = []
    for k, lm in enumerate(landmark_sets, start=1):
        for i, (x1, x2) in enumerate(lm.positions, start=1):
            lines.append(f"{k},{i},{x1!r},{x2!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_landmarks(path) -> np.ndarray:
    """Landmark positions as an array of shape (frames, count, 2)."""
    per_frame: dict[int, dict[int, tuple[float, float]]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 'frame,landmark,x1,x2'")
        k, i = int(parts[0]), int(parts[1])
        per_frame.setdefault(k, {})[i] = (float(parts[2]), float(parts[3]))
    if not per_frame:
        raise ValueError(f"{path}: no landmarks found")
    frames = sorted(per_frame)
    counts = {len(per_frame[k]) for k in frames}
    if len(counts) != 1:
        raise ValueError(f"{path}: landmark counts differ across frames")
    count = counts.pop()
    out = np.empty((len(frames), count, 2))
    for fi, k in enumerate(frames):
        marks = per_frame[k]
        if sorted(marks) != list(range(1, count + 1)):
            raise ValueError(f"{path}: frame {k} has non-contiguous landmark indices")
        for i in range(1, count + 1):
            out[fi, i - 1] = marks[i]
    return out


# ---------------------------------------------------------------------------
# displacement fields

def write_fields(path, fields: np.ndarray) -> None:
    arr = np.asarray(fields, dtype="<f8")
    if arr.ndim != 4 or arr.shape[3] != 2:
        raise ValueError(f"fields must have shape (N, m, n, 2), got {arr.shape}")
    N, m, n, _ = arr.shape
    header = FIELD_MAGIC + struct.pack("<III", m, n, N)
    Path(path).write_bytes(header + np.ascontiguousarray(arr).tobytes())


def read_fields(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if not raw.startswith(FIELD_MAGIC):
        raise ValueError(f"{path}: bad field-file magic")
    m, n, N = struct.unpack_from("<III", raw, len(FIELD_MAGIC))
    offset = len(FIELD_MAGIC) + 12
    count = N * m * n * 2
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
    if data.size != count:
        raise ValueError(f"{path}: truncated field file")
    return data.reshape(N, m, n, 2).copy()


# ---------------------------------------------------------------------------
# flat key = value configs

def parse_flat_config(text: str, allowed: dict[str, object], source: str = "<config>") -> dict:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in allowed:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    out = {}
    for key, value in values.items():
        convert = allowed[key]
        try:
            out[key] = convert(value)
        except ValueError as exc:
            raise ValueError(f"{source}: bad value for {key!r}: {exc}") from exc
    return out


def _int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(part.strip()) for part in text.split(",") if part.strip())


_REGISTRATION_KEYS = {
    "mu": float,
    "alpha": float,
    "n_lev": int,
    "n_iter": _int_tuple,
    "solver_tol": float,
    "solver_max_iter": int,
    "constraint": str,
    "reference_index": int,
}

_SCENE_KEYS = {
    "height": int,
    "width": int,
    "frames": int,
    "path_radius_frac": float,
    "path_center_row_frac": float,
    "path_center_col_frac": float,
    "semi_axis_row_frac": float,
    "semi_axis_col_frac": float,
    "stripe_period": float,
    "stripe_bright": float,
    "stripe_dark": float,
    "ring_outer_frac": float,
    "ring_inner_frac": float,
    "rect_row_lo_frac": float,
    "rect_row_hi_frac": float,
    "rect_col_lo_frac": float,
    "rect_col_hi_frac": float,
    "supersample": int,
}


def registration_config_from_file(path=None) -> RegistrationConfig:
    if path is None:
        return RegistrationConfig()
    text = Path(path).read_text(encoding="utf-8")
    return RegistrationConfig(**parse_flat_config(text, _REGISTRATION_KEYS, str(path)))


def scene_config_from_file(path=None) -> EllipseSceneConfig:
    if path is None:
        return EllipseSceneConfig()
    text = Path(path).read_text(encoding="utf-8")
    raw = parse_flat_config(text, _SCENE_KEYS, str(path))
    kwargs: dict = {}
    pairs = {
        "path_center_frac": ("path_center_row_frac", "path_center_col_frac"),
        "semi_axes_frac": ("semi_axis_row_frac", "semi_axis_col_frac"),
    }
    for target, (a, b) in pairs.items():
        if a in raw or b in raw:
            default = getattr(EllipseSceneConfig, target)
            kwargs[target] = (raw.pop(a, default[0]), raw.pop(b, default[1]))
    rect_keys = ("rect_row_lo_frac", "rect_row_hi_frac", "rect_col_lo_frac", "rect_col_hi_frac")
    if any(k in raw for k in rect_keys):
        default = EllipseSceneConfig.rect_frac
        kwargs["rect_frac"] = tuple(raw.pop(k, default[i]) for i, k in enumerate(rect_keys))
    kwargs.update(raw)
    return EllipseSceneConfig(**kwargs)


def scene_config_snapshot(config: EllipseSceneConfig) -> dict:
    return {
        "height": config.height,
        "width": config.width,
        "frames": config.frames,
        "path_radius_frac": config.path_radius_frac,
        "path_center_row_frac": config.path_center_frac[0],
        "path_center_col_frac": config.path_center_frac[1],
        "semi_axis_row_frac": config.semi_axes_frac[0],
        "semi_axis_col_frac": config.semi_axes_frac[1],
        "stripe_period": config.stripe_period,
        "stripe_bright": config.stripe_bright,
        "stripe_dark": config.stripe_dark,
        "ring_outer_frac": config.ring_outer_frac,
        "ring_inner_frac": config.ring_inner_frac,
        "rect_row_lo_frac": config.rect_frac[0],
        "rect_row_hi_frac": config.rect_frac[1],
        "rect_col_lo_frac": config.rect_frac[2],
        "rect_col_hi_frac": config.rect_frac[3],
        "supersample": config.supersample,
    }


def registration_config_snapshot(config: RegistrationConfig) -> dict:
    return {
        "mu": config.mu,
        "alpha": config.alpha,
        "n_lev": config.n_lev,
        "n_iter": list(config.n_iter),
        "solver_tol": config.solver_tol,
        "solver_max_iter": config.solver_max_iter,
        "constraint": config.constraint,
        "reference_index": config.reference_index,
    }


# ---------------------------------------------------------------------------
# CSV outputs (repr floats round-trip exactly)

def write_diagnostics_csv(path, records: list[StepRecord]) -> None:
    lines = ["level,step,nu,norm_estimate,solver_iters,residual,data_energy,tv_energy"]
    for r in records:
        lines.append(
            f"{r.level},{r.step},{r.nu!r},{r.norm_estimate!r},{r.solver_iterations},"
            f"{r.residual!r},{r.data_energy!r},{r.tv_energy!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_singular_values_csv(path, records: list[StepRecord]) -> None:
    n_sv = len(records[0].singular_values) if records else 0
    header = "level,step," + ",".join(f"sigma{i + 1}" for i in range(n_sv))
    lines = [header]
    for r in records:
        lines.append(f"{r.level},{r.step}," + ",".join(repr(float(s)) for s in r.singular_values))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_landscape_csv(path, rows) -> None:
    lines = ["j,total_energy,term1,term2"]
    for j, total, t1, t2 in rows:
        s1 = "" if t1 is None else repr(float(t1))
        s2 = "" if t2 is None else repr(float(t2))
        lines.append(f"{j},{float(total)!r},{s1},{s2}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_landmark_eval_csv(path, before: np.ndarray, after: np.ndarray) -> None:
    lines = ["landmark,before,after"]
    for i, (b, a) in enumerate(zip(before, after), start=1):
        lines.append(f"{i},{float(b)!r},{float(a)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


# ---------------------------------------------------------------------------
# manifests

def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, command: str, config: dict, inputs: dict, outputs: list, timings: dict) -> None:
    payload = {
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": sorted(str(o) for o in outputs),
        "timings_seconds": timings,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
