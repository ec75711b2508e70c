"""Synthetic test signals and the file formats shared with other tools.

Three formats live here: haptic trace CSV (wide rows of per-side force,
velocity and position channels), mode CSV (one decomposition, metadata in
'#' comment lines), and the report JSON that mirrors DecompositionReport.
All floats are written with repr() so a write/read cycle is bit exact.
"""
import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import List, Mapping, Optional, Tuple

import numpy as np

from .errors import (
    FormatError,
    InvalidInputError,
    InvalidRecipeError,
    SchemaError,
    TraceParseError,
)
from .metrics import DecompositionReport, inject_noise
from .solver import ModeSet
from .spectral import SampledSignal

COMPONENT_KINDS = ("tone", "am_tone", "chirp", "transient")
QUANTITIES = ("force", "velocity", "position")
AXES = ("x", "y", "z")
MODES_FORMAT_VERSION = 1


class TraceSide(str, Enum):
    HUMAN = "human"
    ROBOT = "robot"


def _shortest(value: float) -> str:
    return repr(float(value))


@dataclass(frozen=True)
class Component:
    """One additive term of a synthetic mixture.

    Only the fields relevant to the kind are read: am_* for am_tone,
    chirp_rate_hz_s for chirp, center_s/width_s for transient.
    """

    kind: str
    frequency_hz: float
    amplitude: float = 1.0
    phase: float = 0.0
    am_frequency_hz: float = 0.0
    am_depth: float = 0.0
    chirp_rate_hz_s: float = 0.0
    center_s: float = 0.0
    width_s: float = 0.0

    def __post_init__(self):
        if self.kind not in COMPONENT_KINDS:
            raise InvalidRecipeError(
                "unknown component kind %r, expected one of %s"
                % (self.kind, ", ".join(COMPONENT_KINDS)))
        if not math.isfinite(self.frequency_hz) or self.frequency_hz <= 0:
            raise InvalidRecipeError("frequency_hz must be positive and finite")
        if not math.isfinite(self.amplitude):
            raise InvalidRecipeError("amplitude must be finite")
        if self.kind == "transient" and self.width_s <= 0:
            raise InvalidRecipeError("transient components need width_s > 0")
        if self.am_depth < 0 or self.am_frequency_hz < 0:
            raise InvalidRecipeError("am parameters must be non-negative")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, payload: Mapping) -> "Component":
        known = {f.name for f in fields(cls)}
        extra = set(payload) - known
        if extra:
            raise InvalidRecipeError(
                "unknown component fields: %s" % ", ".join(sorted(extra)))
        if "kind" not in payload or "frequency_hz" not in payload:
            raise InvalidRecipeError("component needs kind and frequency_hz")
        return cls(**payload)

    def max_frequency_hz(self, duration_s: float) -> float:
        """Largest frequency the component can reach over the given span."""
        top = self.frequency_hz
        if self.kind == "am_tone":
            top += self.am_frequency_hz
        elif self.kind == "chirp":
            top += max(0.0, self.chirp_rate_hz_s) * duration_s
        return top


@dataclass(frozen=True)
class SynthRecipe:
    components: List[Component]
    duration_s: float
    sample_rate_hz: float = 1000.0
    noise_snr_db: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise InvalidRecipeError("duration_s must be positive")
        if self.sample_rate_hz <= 0:
            raise InvalidRecipeError("sample_rate_hz must be positive")
        if not self.components:
            raise InvalidRecipeError("recipe has no components")
        nyquist = self.sample_rate_hz / 2.0
        for i, comp in enumerate(self.components):
            if not isinstance(comp, Component):
                raise InvalidRecipeError("components[%d] is not a Component" % i)
            top = comp.max_frequency_hz(self.duration_s)
            if top >= nyquist:
                raise InvalidRecipeError(
                    "components[%d] reaches %g Hz, at or above the %g Hz "
                    "Nyquist limit" % (i, top, nyquist))
        object.__setattr__(self, "components", list(self.components))

    def to_dict(self) -> dict:
        return {
            "components": [c.to_dict() for c in self.components],
            "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz,
            "noise_snr_db": self.noise_snr_db,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "SynthRecipe":
        known = {"components", "duration_s", "sample_rate_hz",
                 "noise_snr_db", "seed"}
        extra = set(payload) - known
        if extra:
            raise InvalidRecipeError(
                "unknown recipe fields: %s" % ", ".join(sorted(extra)))
        if "components" not in payload or "duration_s" not in payload:
            raise InvalidRecipeError("recipe needs components and duration_s")
        parts = [Component.from_dict(c) for c in payload["components"]]
        rest = {k: v for k, v in payload.items() if k != "components"}
        return cls(components=parts, **rest)

    def __eq__(self, other):
        if not isinstance(other, SynthRecipe):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def load_recipe(path) -> SynthRecipe:
    try:
        with open(path, "r") as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as exc:
        raise InvalidRecipeError("recipe file %s is not valid JSON: %s"
                                 % (path, exc)) from exc
    if not isinstance(payload, dict):
        raise InvalidRecipeError("recipe file must hold a JSON object")
    return SynthRecipe.from_dict(payload)


def _render(component: Component, t: np.ndarray) -> np.ndarray:
    two_pi = 2.0 * np.pi
    if component.kind == "tone":
        return component.amplitude * np.cos(
            two_pi * component.frequency_hz * t + component.phase)
    if component.kind == "am_tone":
        envelope = 1.0 + component.am_depth * np.cos(
            two_pi * component.am_frequency_hz * t)
        return component.amplitude * envelope * np.cos(
            two_pi * component.frequency_hz * t + component.phase)
    if component.kind == "chirp":
        # instantaneous frequency f0 + rate*t
        angle = two_pi * (component.frequency_hz * t
                          + 0.5 * component.chirp_rate_hz_s * t * t)
        return component.amplitude * np.cos(angle + component.phase)
    offset = t - component.center_s
    window = np.exp(-(offset * offset) / (2.0 * component.width_s ** 2))
    return component.amplitude * window * np.cos(
        two_pi * component.frequency_hz * offset + component.phase)


def synthesize(recipe: SynthRecipe) -> Tuple[SampledSignal, List[SampledSignal]]:
    """Render a recipe. Returns (mixture, components); the clean mixture is
    the exact left-to-right sum of the component arrays, noise (when asked
    for) is added to the mixture only."""
    n = int(round(recipe.duration_s * recipe.sample_rate_hz))
    if n < 2:
        raise InvalidRecipeError("recipe spans fewer than 2 samples")
    t = np.arange(n) / recipe.sample_rate_hz
    parts = [SampledSignal(_render(c, t), recipe.sample_rate_hz)
             for c in recipe.components]
    total = parts[0].samples
    for part in parts[1:]:
        total = total + part.samples
    mixture = SampledSignal(total, recipe.sample_rate_hz)
    if recipe.noise_snr_db is not None:
        mixture = inject_noise(mixture, recipe.noise_snr_db, seed=recipe.seed)
    return mixture, parts


def default_trace_schema(side) -> dict:
    """Channel key -> column name map for the {side}_{quantity}_{axis}
    naming convention."""
    side = TraceSide(side)
    return {"%s_%s" % (q, a): "%s_%s_%s" % (side.value, q, a)
            for q in QUANTITIES for a in AXES}


@dataclass(frozen=True)
class HapticTrace:
    """One side of a recorded interaction: nine equal-length channels."""

    side: TraceSide
    channels: Mapping[str, SampledSignal]
    sample_rate_hz: float = 1000.0

    def __post_init__(self):
        object.__setattr__(self, "side", TraceSide(self.side))
        expected = {"%s_%s" % (q, a) for q in QUANTITIES for a in AXES}
        if set(self.channels) != expected:
            raise InvalidInputError(
                "trace needs exactly the channels %s" % sorted(expected))
        lengths = {c.n for c in self.channels.values()}
        if len(lengths) != 1:
            raise InvalidInputError("trace channels differ in length")
        if self.sample_rate_hz <= 0:
            raise InvalidInputError("sample rate must be positive")

    @property
    def n(self) -> int:
        return next(iter(self.channels.values())).n


def read_trace(path, side="human", schema=None,
               sample_rate_hz=1000.0) -> HapticTrace:
    """Parse one side's channels out of a wide trace CSV.

    schema maps channel keys like "force_x" to column names; by default the
    columns are named {side}_{quantity}_{axis}.
    """
    try:
        side = TraceSide(side)
    except ValueError:
        raise InvalidInputError("side must be 'human' or 'robot', got %r"
                                % (side,)) from None
    if schema is None:
        schema = default_trace_schema(side)
    with open(path, "r", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceParseError("%s: empty file" % path) from None
        header = [h.strip() for h in header]
        positions = {}
        for key, column in schema.items():
            if column not in header:
                raise SchemaError("%s: missing column '%s' (channel %s)"
                                  % (path, column, key))
            positions[key] = header.index(column)
        columns = {key: [] for key in schema}
        for row_idx, row in enumerate(reader):
            if len(row) != len(header):
                raise TraceParseError(
                    "%s: row %d has %d fields, header has %d"
                    % (path, row_idx + 2, len(row), len(header)))
            for key, pos in positions.items():
                try:
                    columns[key].append(float(row[pos]))
                except ValueError:
                    raise TraceParseError(
                        "%s: row %d, column '%s': cannot parse %r as a number"
                        % (path, row_idx + 2, schema[key], row[pos])) from None
    n = len(next(iter(columns.values())))
    if n < 2:
        raise TraceParseError("%s: need at least 2 sample rows, found %d"
                              % (path, n))
    channels = {key: SampledSignal(np.asarray(vals), sample_rate_hz)
                for key, vals in columns.items()}
    return HapticTrace(side=side, channels=channels,
                       sample_rate_hz=sample_rate_hz)


def write_channels(path, channels: Mapping[str, SampledSignal]) -> None:
    """Write named channels as CSV with a sample-rate metadata line and a
    leading time column."""
    if not channels:
        raise InvalidInputError("no channels to write")
    lengths = {c.n for c in channels.values()}
    rates = {c.sample_rate_hz for c in channels.values()}
    if len(lengths) != 1 or len(rates) != 1:
        raise InvalidInputError("channels must share length and sample rate")
    rate = rates.pop()
    names = list(channels)
    arrays = [channels[name].samples for name in names]
    with open(path, "w") as handle:
        handle.write("# sample_rate_hz=%s\n" % _shortest(rate))
        handle.write("time," + ",".join(names) + "\n")
        for i in range(lengths.pop()):
            row = [_shortest(i / rate)]
            row.extend(_shortest(a[i]) for a in arrays)
            handle.write(",".join(row) + "\n")


def _read_metadata_lines(handle):
    meta = {}
    data_lines = []
    for line in handle:
        line = line.rstrip("\n")
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            else:
                meta[body] = ""
        elif line.strip():
            data_lines.append(line)
    return meta, data_lines


def read_channels(path, sample_rate_hz=None):
    """Returns ({name: SampledSignal}, rate). The file's metadata rate wins;
    the argument is the fallback, then the 1000 Hz trace default."""
    with open(path, "r") as handle:
        meta, lines = _read_metadata_lines(handle)
    if "sample_rate_hz" in meta:
        try:
            rate = float(meta["sample_rate_hz"])
        except ValueError:
            raise FormatError("%s: bad sample_rate_hz metadata %r"
                              % (path, meta["sample_rate_hz"])) from None
    elif sample_rate_hz is not None:
        rate = float(sample_rate_hz)
    else:
        rate = 1000.0
    if not lines:
        raise TraceParseError("%s: no header row" % path)
    header = [h.strip() for h in lines[0].split(",")]
    columns = [[] for _ in header]
    for row_idx, line in enumerate(lines[1:]):
        row = line.split(",")
        if len(row) != len(header):
            raise TraceParseError("%s: row %d has %d fields, header has %d"
                                  % (path, row_idx + 2, len(row), len(header)))
        for pos, cell in enumerate(row):
            try:
                columns[pos].append(float(cell))
            except ValueError:
                raise TraceParseError(
                    "%s: row %d, column '%s': cannot parse %r as a number"
                    % (path, row_idx + 2, header[pos], cell)) from None
    channels = {}
    for name, values in zip(header, columns):
        if name == "time":
            continue
        channels[name] = SampledSignal(np.asarray(values), rate)
    if not channels:
        raise TraceParseError("%s: no data channels" % path)
    return channels, rate


def config_digest(config) -> str:
    """Short stable fingerprint of a solver configuration."""
    canonical = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def write_modes(path, mode_set: ModeSet, config=None) -> None:
    """Write a decomposition as CSV: metadata comments, then
    time,mode_1..mode_K,residual rows."""
    k = mode_set.k
    rate = mode_set.residual.sample_rate_hz
    digest = config_digest(config) if config is not None else "unspecified"
    with open(path, "w") as handle:
        handle.write("# comd-modes version=%d\n" % MODES_FORMAT_VERSION)
        handle.write("# k=%d\n" % k)
        handle.write("# sample_rate_hz=%s\n" % _shortest(rate))
        handle.write("# omegas_hz=%s\n"
                     % ",".join(_shortest(w) for w in mode_set.omegas_hz))
        handle.write("# config=%s\n" % digest)
        handle.write("time," + ",".join("mode_%d" % (i + 1) for i in range(k))
                     + ",residual\n")
        arrays = [m.samples for m in mode_set.modes]
        arrays.append(mode_set.residual.samples)
        for i in range(mode_set.residual.n):
            row = [_shortest(i / rate)]
            row.extend(_shortest(a[i]) for a in arrays)
            handle.write(",".join(row) + "\n")


def read_modes(path) -> ModeSet:
    """Parse a mode CSV back into a ModeSet. The report is not stored in
    this format, so the result carries report=None."""
    with open(path, "r") as handle:
        meta, lines = _read_metadata_lines(handle)
    version_keys = [k for k in meta if k.startswith("comd-modes")]
    if not version_keys:
        raise FormatError("%s: missing comd-modes version line" % path)
    try:
        version = int(meta[version_keys[0]] or
                      version_keys[0].rpartition("version=")[2])
    except ValueError:
        raise FormatError("%s: unreadable format version" % path) from None
    if version != MODES_FORMAT_VERSION:
        raise FormatError("%s: format version %d, this reader handles %d"
                          % (path, version, MODES_FORMAT_VERSION))
    for key in ("k", "sample_rate_hz", "omegas_hz", "config"):
        if key not in meta:
            raise FormatError("%s: missing metadata field '%s'" % (path, key))
    try:
        k = int(meta["k"])
        rate = float(meta["sample_rate_hz"])
        omegas = tuple(float(w) for w in meta["omegas_hz"].split(","))
    except ValueError as exc:
        raise FormatError("%s: bad metadata value: %s" % (path, exc)) from None
    if k < 1 or rate <= 0 or len(omegas) != k:
        raise FormatError("%s: inconsistent metadata (k=%d, %d omegas)"
                          % (path, k, len(omegas)))
    if not lines:
        raise FormatError("%s: no header row" % path)
    expected = ["time"] + ["mode_%d" % (i + 1) for i in range(k)] + ["residual"]
    header = [h.strip() for h in lines[0].split(",")]
    if header != expected:
        raise FormatError("%s: header %r does not match k=%d layout"
                          % (path, ",".join(header), k))
    rows = []
    for row_idx, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != len(expected):
            raise FormatError("%s: row %d has %d fields, expected %d"
                              % (path, row_idx + 2, len(cells), len(expected)))
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise FormatError("%s: row %d holds a non-numeric cell"
                              % (path, row_idx + 2)) from None
    if len(rows) < 2:
        raise FormatError("%s: need at least 2 sample rows" % path)
    table = np.asarray(rows)
    modes = tuple(SampledSignal(table[:, 1 + i].copy(), rate)
                  for i in range(k))
    residual = SampledSignal(table[:, k + 1].copy(), rate)
    return ModeSet(modes=modes, omegas_hz=omegas, residual=residual,
                   report=None)


def write_report(path, report: DecompositionReport, config) -> None:
    payload = report.to_dict()
    payload["config"] = config.to_dict()
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def read_report(path):
    """Returns (DecompositionReport, config echo dict)."""
    try:
        with open(path, "r") as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as exc:
        raise FormatError("%s: not valid JSON: %s" % (path, exc)) from exc
    if not isinstance(payload, dict) or "config" not in payload:
        raise FormatError("%s: report JSON lacks the config echo" % path)
    config_echo = payload.pop("config")
    try:
        report = DecompositionReport.from_dict(payload)
    except InvalidInputError as exc:
        raise FormatError("%s: %s" % (path, exc)) from exc
    return report, config_echo
