"""Run artifacts: field persistence, plot data, manifests, error records.

Everything written here is deterministic text: floats go out through
``repr`` and round-trip bit-exactly, collections are emitted in sorted
order, and no timestamps appear anywhere, so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import hashlib
import platform
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .exceptions import ChecksumError, FieldFormatError
from .fields import AzimuthalField
from .fixedpoint import IterationTrace
from .grids import RadialGrid, ScalarRadialProfile
from .selfsimilar import NormCurve

_MAGIC = "renormflow-field\t1"


def _model_token(value: float | None) -> str:
    return "-" if value is None else repr(float(value))


def _model_value(token: str) -> float | None:
    return None if token == "-" else float(token)


def _profile_lines(tag: str, head: list[str], prof: ScalarRadialProfile) -> list[str]:
    lines = [
        "\t".join(
            [tag, *head,
             _model_token(prof.origin_power),
             _model_token(prof.tail_power),
             repr(float(prof.tail_rate)),
             str(prof.values.size)]
        )
    ]
    lines.extend(f"v\t{v!r}" for v in prof.values.tolist())
    return lines


def save_field(path: str | Path, field_: AzimuthalField) -> Path:
    """Write a field to a checksummed text file.

    The file carries the grid nodes and weights verbatim, so any grid
    (built or derived) survives the round-trip; a second save of the
    loaded field is byte-identical to the first.
    """
    grid = field_.grid
    lines = [
        _MAGIC,
        f"dim\t{field_.dim}",
        "parity\todd",
        "flags\tnone",
        "\t".join(
            ["grid", repr(grid.r_min), repr(grid.r_break), repr(grid.r_max),
             str(grid.size)]
        ),
    ]
    for node, weight in zip(grid.nodes.tolist(), grid.weights.tolist()):
        lines.append(f"g\t{node!r}\t{weight!r}")
    if field_.dim == 2:
        for (deg, kind) in sorted(field_.harmonics):
            prof = field_.harmonics[(deg, kind)]
            lines.extend(_profile_lines("harmonic", [str(deg), kind], prof))
    else:
        for angle, prof in zip(
            field_.polar_nodes.tolist(), field_.polar_profiles
        ):
            lines.extend(_profile_lines("polar", [repr(angle)], prof))
    payload = "\n".join(lines) + "\n"
    digest = hashlib.sha256(payload.encode()).hexdigest()
    path = Path(path)
    path.write_text(payload + f"checksum\t{digest}\n")
    return path


class _Reader:
    def __init__(self, lines: list[str]):
        self.lines = lines
        self.pos = 0

    def done(self) -> bool:
        return self.pos >= len(self.lines)

    def peek(self) -> str:
        return self.lines[self.pos]

    def take(self, tag: str) -> list[str]:
        if self.done():
            raise FieldFormatError(f"file ends where a {tag} record was expected")
        parts = self.lines[self.pos].split("\t")
        if parts[0] != tag:
            raise FieldFormatError(
                f"expected a {tag} record, found {parts[0]!r}"
            )
        self.pos += 1
        return parts[1:]


def _take_values(reader: _Reader, count: int) -> np.ndarray:
    vals = np.empty(count)
    for i in range(count):
        (tok,) = reader.take("v")
        vals[i] = float(tok)
    return vals


def _take_profile(
    reader: _Reader, grid: RadialGrid, rest: list[str]
) -> ScalarRadialProfile:
    origin, tail, rate, count = rest
    n = int(count)
    if n != grid.size:
        raise FieldFormatError(
            f"profile holds {n} values on a grid of {grid.size} nodes"
        )
    return ScalarRadialProfile(
        grid=grid,
        values=_take_values(reader, n),
        origin_power=_model_value(origin),
        tail_power=_model_value(tail),
        tail_rate=float(rate),
    )


def load_field(path: str | Path) -> AzimuthalField:
    """Read a field file, verifying checksum and header."""
    text = Path(path).read_text()
    idx = text.rfind("checksum\t")
    if idx < 0 or (idx > 0 and text[idx - 1] != "\n") or not text.endswith("\n"):
        raise ChecksumError(f"{path}: checksum record missing (truncated file?)")
    payload = text[:idx]
    recorded = text[idx:].strip().split("\t")
    if len(recorded) != 2:
        raise ChecksumError(f"{path}: malformed checksum record")
    digest = hashlib.sha256(payload.encode()).hexdigest()
    if digest != recorded[1]:
        raise ChecksumError(f"{path}: content does not match its checksum")

    lines = payload.splitlines()
    if not lines or lines[0] != _MAGIC:
        raise FieldFormatError(f"{path}: not a field file (bad magic line)")
    reader = _Reader(lines)
    reader.pos = 1
    (dim_tok,) = reader.take("dim")
    if dim_tok not in ("2", "3"):
        raise FieldFormatError(f"{path}: unsupported dimension {dim_tok}")
    dim = int(dim_tok)
    (parity,) = reader.take("parity")
    if parity != "odd":
        raise FieldFormatError(f"{path}: unsupported parity {parity!r}")
    (flags,) = reader.take("flags")
    if flags not in ("none", ""):
        raise FieldFormatError(f"{path}: unknown flags {flags!r}")
    r_min, r_break, r_max, size_tok = reader.take("grid")
    size = int(size_tok)
    nodes = np.empty(size)
    weights = np.empty(size)
    for i in range(size):
        node, weight = reader.take("g")
        nodes[i], weights[i] = float(node), float(weight)
    grid = RadialGrid(
        nodes=nodes, weights=weights,
        r_min=float(r_min), r_break=float(r_break), r_max=float(r_max),
    )
    if dim == 2:
        harmonics = {}
        while not reader.done():
            deg, kind, *rest = reader.take("harmonic")
            if kind not in ("cos", "sin"):
                raise FieldFormatError(f"{path}: unknown harmonic kind {kind!r}")
            harmonics[(int(deg), kind)] = _take_profile(reader, grid, rest)
        return AzimuthalField(dim=2, grid=grid, harmonics=harmonics)
    angles = []
    profiles = []
    while not reader.done():
        angle, *rest = reader.take("polar")
        angles.append(float(angle))
        profiles.append(_take_profile(reader, grid, rest))
    if not profiles:
        raise FieldFormatError(f"{path}: three-dimensional file has no sections")
    return AzimuthalField.from_polar(grid, np.array(angles), profiles)


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _curve_rows(curve: NormCurve) -> tuple[list[str], list[tuple]]:
    cols = ["t", "tau", "value", "predicted", "ratio"]
    rows = [
        (p.t, p.tau, p.value, p.predicted,
         p.value / p.predicted if p.predicted != 0.0 else float("nan"))
        for p in curve.points
    ]
    return cols, rows


def _trace_rows(trace: IterationTrace) -> tuple[list[str], list[tuple]]:
    cols = ["iter", "residual", "norm", "I", "damping"]
    rows = [
        (s.iteration, s.residual, s.norm, s.mass, s.damping)
        for s in trace.steps
    ]
    return cols, rows


def emit_plot_data(out_dir: str | Path, results: dict) -> list[Path]:
    """Write one schema-headed, tab-separated file per named result.

    Norm curves emit ``(t, tau, value, predicted, ratio)`` rows and
    iteration traces ``(iter, residual, norm, I, damping)``; anything
    else must be a ``(columns, rows)`` pair. An empty row set leaves a
    header-only file.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(results):
        value = results[name]
        if isinstance(value, NormCurve):
            cols, rows = _curve_rows(value)
        elif isinstance(value, IterationTrace):
            cols, rows = _trace_rows(value)
        else:
            cols, rows = value
        lines = ["\t".join(cols)]
        lines.extend("\t".join(_cell(c) for c in row) for row in rows)
        path = out_dir / f"{name}.tsv"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def write_manifest(out_dir: str | Path, config_text: str) -> Path:
    """Record versions and the verbatim configuration of a run.

    Deliberately timestamp-free: two runs of the same configuration on
    the same installation produce byte-identical manifests.
    """
    lines = [
        "renormflow-run\t1",
        f"package\t{__version__}",
        f"python\t{platform.python_version()}",
        f"numpy\t{np.__version__}",
        f"scipy\t{scipy.__version__}",
        "config-begin",
        config_text.rstrip("\n"),
        "config-end",
    ]
    path = Path(out_dir) / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def write_error_record(out_dir: str | Path, exc: BaseException) -> Path:
    """Machine-readable record of why a run failed."""
    message = " ".join(str(exc).split())
    path = Path(out_dir) / "error.txt"
    path.write_text(f"kind\t{type(exc).__name__}\nmessage\t{message}\n")
    return path
