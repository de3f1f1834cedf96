"""Experiment configuration: one flat, diff-friendly text file per run.

The format is plain key-value sections (configparser dialect), no
interpolation and no includes. Every value a run needs is in the file,
so the manifest echo of the file is sufficient to re-run; floats are
written with ``repr`` and therefore round-trip bit-exactly.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass
from pathlib import Path

from .exceptions import ParameterError
from .grids import RadialGrid
from .params import Params

COMMANDS = (
    "feasibility",
    "renorm-apply",
    "fixed-point",
    "verify-invariants",
    "wk-check",
    "leray-profile",
    "evolve-check",
    "symmetry-check",
)


@dataclass(frozen=True)
class GridSpec:
    """Constructor arguments of the shared radial grid."""

    r_min: float = 1e-4
    r_break: float = 1.0
    r_max: float = 20.0
    n_log: int = 257
    n_lin: int = 257

    def build(self) -> RadialGrid:
        return RadialGrid.build(
            r_min=self.r_min, r_break=self.r_break, r_max=self.r_max,
            n_log=self.n_log, n_lin=self.n_lin,
        )


@dataclass(frozen=True)
class EnvelopeSettings:
    """Power-exponential envelope used for sampling and membership."""

    k: float
    sigma: float
    decay: float


@dataclass(frozen=True)
class IterationSettings:
    """Operator discretization plus fixed-point loop controls."""

    n_t: int = 32
    n_angle: int = 64
    harmonic_cap: int = 4
    kernel_rho_points: int = 640
    damping: float = 0.5
    tol: float = 1e-9
    max_iter: int = 40
    anderson: bool = False
    start_scale: float = 0.05


@dataclass(frozen=True)
class LeraySettings:
    """Norm-history request for the blow-up family."""

    kind: str = "lebesgue"
    m: float = 2.0
    x_max: float = 16.0
    route: str = "transform"
    times: tuple[float, ...] = (0.0, 0.15, 0.3, 0.45, 0.6)


@dataclass(frozen=True)
class EvolveSettings:
    """Mild-evolution request."""

    times: tuple[float, ...] = (0.1, 0.2)
    inner_tol: float = 1e-10
    max_inner: int = 10
    nonlinear: bool = True


@dataclass(frozen=True)
class InvarianceSettings:
    """Random-membership audit request."""

    set_spec: str = "envelope"
    samples: int = 50
    betas: tuple[float, ...] = (0.7, 0.9, 0.99)


@dataclass(frozen=True)
class WkSettings:
    """Dissipation-weight check request."""

    k_values: tuple[float, ...] = (0.0, 1.0, 2.0)
    samples: int = 20


@dataclass(frozen=True)
class FieldIO:
    """Where command inputs come from and outputs go."""

    input_path: str = ""
    output_name: str = "field_out.tsv"


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: Params
    grid: GridSpec = GridSpec()
    envelope: EnvelopeSettings | None = None
    iteration: IterationSettings = IterationSettings()
    leray: LeraySettings = LeraySettings()
    evolve: EvolveSettings = EvolveSettings()
    invariance: InvarianceSettings = InvarianceSettings()
    wk: WkSettings = WkSettings()
    field_io: FieldIO = FieldIO()
    seed: int = 0
    threads: int = 1
    deterministic: bool = False
    out_dir: str = "runs/out"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ParameterError(f"unknown command {self.command!r}")
        if self.seed < 0:
            raise ParameterError(f"seed must be nonnegative, got {self.seed}")
        if self.threads < 1:
            raise ParameterError(f"threads must be at least 1, got {self.threads}")
        if self.envelope is None:
            object.__setattr__(
                self,
                "envelope",
                EnvelopeSettings(
                    k=self.params.k_env,
                    sigma=self.params.sigma,
                    decay=self.params.b_env,
                ),
            )

    def to_text(self) -> str:
        """Render the full configuration as flat sectioned text."""
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["run"] = {
            "command": self.command,
            "seed": str(self.seed),
            "threads": str(self.threads),
            "deterministic": _format(self.deterministic),
            "out_dir": self.out_dir,
        }
        cp["params"] = _section_of(self.params)
        cp["grid"] = _section_of(self.grid)
        cp["envelope"] = _section_of(self.envelope)
        cp["iteration"] = _section_of(self.iteration)
        cp["leray"] = _section_of(self.leray)
        cp["evolve"] = _section_of(self.evolve)
        cp["invariance"] = _section_of(self.invariance)
        cp["wk"] = _section_of(self.wk)
        cp["fields"] = _section_of(self.field_io)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        """Parse sectioned text; missing keys fall back to defaults.

        Unknown sections or keys are rejected so that typos surface
        instead of silently reverting a setting to its default.
        """
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ParameterError(f"config parse failure: {exc}") from exc
        known = {
            "run", "params", "grid", "envelope", "iteration", "leray",
            "evolve", "invariance", "wk", "fields",
        }
        extra = set(cp.sections()) - known
        if extra:
            raise ParameterError(f"unknown config sections: {sorted(extra)}")

        run = dict(cp["run"]) if cp.has_section("run") else {}
        run_known = {"command", "seed", "threads", "deterministic", "out_dir"}
        _reject_extra("run", run, run_known)
        if "command" not in run:
            raise ParameterError("config must set run.command")
        params = _build(Params, cp, "params")
        envelope = (
            _build(EnvelopeSettings, cp, "envelope")
            if cp.has_section("envelope")
            else None
        )
        return cls(
            command=run["command"],
            params=params,
            grid=_build(GridSpec, cp, "grid"),
            envelope=envelope,
            iteration=_build(IterationSettings, cp, "iteration"),
            leray=_build(LeraySettings, cp, "leray"),
            evolve=_build(EvolveSettings, cp, "evolve"),
            invariance=_build(InvarianceSettings, cp, "invariance"),
            wk=_build(WkSettings, cp, "wk"),
            field_io=_build(FieldIO, cp, "fields"),
            seed=_convert("run", "seed", run.get("seed", "0"), "int"),
            threads=_convert("run", "threads", run.get("threads", "1"), "int"),
            deterministic=_convert(
                "run", "deterministic", run.get("deterministic", "false"), "bool"
            ),
            out_dir=run.get("out_dir", "runs/out"),
        )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an experiment configuration file."""
    return ExperimentConfig.from_text(Path(path).read_text())


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _section_of(obj) -> dict[str, str]:
    return {
        f.name: _format(getattr(obj, f.name)) for f in dataclasses.fields(obj)
    }


def _convert(section: str, key: str, raw: str, kind: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind == "str":
            return raw
        if kind.startswith("tuple"):
            toks = [tok.strip() for tok in raw.split(",")]
            return tuple(float(tok) for tok in toks if tok)
    except ValueError as exc:
        raise ParameterError(
            f"config value {section}.{key} = {raw!r} is not a {kind}"
        ) from exc
    raise ParameterError(f"unsupported config field type {kind} for {key}")


def _reject_extra(section: str, got: dict, known: set[str]) -> None:
    extra = set(got) - known
    if extra:
        raise ParameterError(f"unknown keys in [{section}]: {sorted(extra)}")


def _build(cls, cp: configparser.ConfigParser, section: str):
    spec = {f.name: f.type for f in dataclasses.fields(cls)}
    raw = dict(cp[section]) if cp.has_section(section) else {}
    _reject_extra(section, raw, set(spec))
    kwargs = {}
    for name, raw_value in raw.items():
        kind = spec[name].replace(" ", "")
        kind = {"int": "int", "float": "float", "bool": "bool", "str": "str"}.get(
            kind, "tuple" if kind.startswith("tuple") else kind
        )
        kwargs[name] = _convert(section, name, raw_value, kind)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ParameterError(f"bad [{section}] section: {exc}") from exc
