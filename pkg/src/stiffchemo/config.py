"""Run configuration: INI text with one section per concern.

Parameters may be given raw (``k, d, chi, delta``), as a Table 1 triple
(``k, d_over_k, chi_over_sqrtk, sqrtk_delta``) or by set name (``set = B``
plus ``k``, with any triple entry overriding the named value).  Parsing
always resolves to raw values, so ``parse(dump(cfg)) == cfg``.

Example::

    [run]
    mode = mc-run
    [params]
    set = B
    k = 0.1
    [mc]
    t_end = 200
    seed = 1

Sections: ``[run]`` (mode), ``[params]``, ``[mc]`` (particle engine),
``[ks]`` (continuum solver, scaled units), ``[spectrum]`` (averaging window)
and ``[output]`` (directory and format).
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, fields, replace

from .model import TABLE1, ModelParams, params_from_table1

__all__ = [
    "MODES",
    "KsNumerics",
    "McNumerics",
    "OutputSpec",
    "RunConfig",
    "SpectrumWindow",
    "dumps",
    "load",
    "loads",
]

MODES = ("stability-diagram", "classify", "dispersion", "mc-run", "ks-run", "spectrum", "verify")
FORMATS = ("csv", "binary")


@dataclass(frozen=True)
class McNumerics:
    L: float = 100.0
    I: int = 2000
    dt: float = 5e-3
    M: int = 500
    t_end: float = 200.0
    snapshot_every: float = 2.0
    seed: int = 0
    threads: int = 1
    growth: bool = True
    tumble: bool = True
    backend: str = "auto"


@dataclass(frozen=True)
class KsNumerics:
    """Continuum grid in scaled units; ``dt = 0`` picks the automatic step."""

    L: float = 100.0
    I: int = 1000
    dt: float = 0.0
    t_end: float = 200.0
    snapshot_every: float = 2.0
    init: str = "noise"
    amplitude: float = 1e-4
    mode: int = 1
    seed: int = 0
    growth: bool = True
    chemotaxis: bool = True


@dataclass(frozen=True)
class SpectrumWindow:
    """Averaging window; ``t_start < 0`` means the final quarter of the run."""

    t_start: float = -1.0
    t_end: float = -1.0
    interval: float = 4.0


@dataclass(frozen=True)
class OutputSpec:
    dir: str = ""
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    mode: str = "mc-run"
    params: ModelParams = field(default_factory=lambda: params_from_table1(*TABLE1["B"], k=0.1))
    mc: McNumerics = field(default_factory=McNumerics)
    ks: KsNumerics = field(default_factory=KsNumerics)
    spectrum: SpectrumWindow = field(default_factory=SpectrumWindow)
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.output.format not in FORMATS:
            raise ValueError(f"unknown output format {self.output.format!r}")
        if self.mc.backend not in ("auto", "compiled", "python"):
            raise ValueError(f"unknown backend {self.mc.backend!r}")
        if self.mc.threads < 1:
            raise ValueError("threads must be >= 1")

    def with_(self, **kw) -> "RunConfig":
        return replace(self, **kw)


_SECTIONS = {"mc": McNumerics, "ks": KsNumerics, "spectrum": SpectrumWindow, "output": OutputSpec}


def _convert(cls, name: str, raw: str):
    typ = {f.name: f.type for f in fields(cls)}[name]
    if typ in ("bool", bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: not a boolean: {raw!r}")
    if typ in ("int", int):
        return int(raw)
    if typ in ("float", float):
        return float(raw)
    return raw.strip()


def _section(cls, items: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(items) - known
    if unknown:
        raise ValueError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    return cls(**{k: _convert(cls, k, v) for k, v in items.items()})


def _params(items: dict) -> ModelParams:
    items = dict(items)
    if "k" not in items:
        raise ValueError("[params] needs k")
    k = float(items.pop("k"))
    raw = {"d", "chi", "delta"}
    triple_keys = ("d_over_k", "chi_over_sqrtk", "sqrtk_delta")
    name = items.pop("set", None)
    if raw & set(items):
        if not raw <= set(items) or name or set(triple_keys) & set(items):
            raise ValueError("[params] mixes raw and Table 1 entries")
        return ModelParams(k=k, d=float(items.pop("d")), chi=float(items.pop("chi")),
                           delta=float(items.pop("delta")))
    if name is not None:
        if name not in TABLE1:
            raise ValueError(f"unknown parameter set {name!r}")
        triple = list(TABLE1[name])
    else:
        triple = [math.nan] * 3
    for i, key in enumerate(triple_keys):
        if key in items:
            triple[i] = float(items.pop(key))
    if items:
        raise ValueError(f"unknown keys in [params]: {sorted(items)}")
    if any(math.isnan(v) for v in triple):
        raise ValueError("[params] needs a set name, a full Table 1 triple, or d, chi, delta")
    return params_from_table1(*triple, k=k)


def loads(text: str) -> RunConfig:
    """Parse INI text.  Missing sections and keys take their defaults."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    # provenance lines are written into output headers and ignored on input
    extra = set(cp.sections()) - {"run", "params", "provenance", *_SECTIONS}
    if extra:
        raise ValueError(f"unknown sections: {sorted(extra)}")
    kw = {}
    if cp.has_section("run"):
        run = dict(cp.items("run"))
        if set(run) - {"mode"}:
            raise ValueError(f"unknown keys in [run]: {sorted(set(run) - {'mode'})}")
        if "mode" in run:
            kw["mode"] = run["mode"].strip()
    if cp.has_section("params"):
        kw["params"] = _params(dict(cp.items("params")))
    for name, cls in _SECTIONS.items():
        if cp.has_section(name):
            kw[name] = _section(cls, dict(cp.items(name)))
    return RunConfig(**kw)


def load(path) -> RunConfig:
    with open(path) as fh:
        return loads(fh.read())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps(cfg: RunConfig) -> str:
    """Serialize with raw parameters; floats use ``repr`` so parsing is exact."""
    lines = ["[run]", f"mode = {cfg.mode}", "", "[params]"]
    for key, val in asdict(cfg.params).items():
        lines.append(f"{key} = {_fmt(val)}")
    for name in _SECTIONS:
        lines += ["", f"[{name}]"]
        for key, val in asdict(getattr(cfg, name)).items():
            lines.append(f"{key} = {_fmt(val)}")
    return "\n".join(lines) + "\n"
