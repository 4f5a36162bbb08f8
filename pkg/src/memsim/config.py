"""Simulator configuration: DRAM timing parameters, topology, queue depths, run limits.

Configs are loaded from JSON files with two nested sections ("timing",
"topology") plus top-level scalars.  Every missing key takes its documented
default; unknown keys are rejected so typos cannot silently fall back to a
default.  Loaded configs are frozen dataclasses and safe to share between
concurrent runs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace


class ConfigError(Exception):
    """Invalid parameter combination or unknown key."""


class ConfigParseError(ConfigError):
    """Unreadable or syntactically malformed config file."""


@dataclass(frozen=True)
class TimingParams:
    """Cycle counts enforced by the per-bank timing model.

    tCL is the READ/WRITE service time; tSREFEnter/tSREFExit are the
    self-refresh entry/exit service times; selfRefreshIdleThreshold is the
    idle-cycle count after which a bank parks itself in self refresh.
    """

    tRP: int = 14
    tFAW: int = 30
    tRRDL: int = 6
    tRCDRD: int = 14
    tRCDWR: int = 14
    tCCDL: int = 2
    tWTR: int = 8
    tRFC: int = 260
    tREFI: int = 3600
    tCL: int = 14
    tSREFEnter: int = 1
    tSREFExit: int = 260
    selfRefreshIdleThreshold: int = 1000


@dataclass(frozen=True)
class Topology:
    """Channel organization: ranks -> bank groups -> banks, plus address widths."""

    numRanks: int = 2
    numBankGroups: int = 4
    numBanks: int = 4
    rowBits: int = 14
    colBits: int = 10
    addressBits: int = 32

    @property
    def rankBits(self) -> int:
        return (self.numRanks - 1).bit_length()

    @property
    def bankGroupBits(self) -> int:
        return (self.numBankGroups - 1).bit_length()

    @property
    def bankBits(self) -> int:
        return (self.numBanks - 1).bit_length()

    @property
    def totalBanks(self) -> int:
        return self.numRanks * self.numBankGroups * self.numBanks

    @property
    def usedBits(self) -> int:
        return self.rankBits + self.bankGroupBits + self.bankBits + self.rowBits + self.colBits


@dataclass(frozen=True)
class SimConfig:
    timing: TimingParams = field(default_factory=TimingParams)
    topology: Topology = field(default_factory=Topology)
    queueSize: int = 128
    maxCycles: int = 100_000
    statsWindow: int = 1000


def _is_power_of_two(n: int) -> bool:
    return isinstance(n, int) and n >= 1 and (n & (n - 1)) == 0


def validate(cfg: SimConfig) -> list[str]:
    """Return a list of invariant violations (empty when the config is valid)."""
    out = []
    t = cfg.timing
    for f in fields(TimingParams):
        v = getattr(t, f.name)
        if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
            out.append(f"timing.{f.name} must be a strictly positive integer, got {v!r}")
    if isinstance(t.tREFI, int) and isinstance(t.tRFC, int) and not t.tREFI > t.tRFC:
        out.append(f"tREFI > tRFC violated (tREFI={t.tREFI}, tRFC={t.tRFC})")
    if isinstance(t.tFAW, int) and isinstance(t.tRRDL, int) and not t.tFAW >= t.tRRDL:
        out.append(f"tFAW >= tRRDL violated (tFAW={t.tFAW}, tRRDL={t.tRRDL})")

    topo = cfg.topology
    for name in ("numRanks", "numBankGroups", "numBanks"):
        v = getattr(topo, name)
        if not _is_power_of_two(v):
            out.append(f"topology.{name} must be a power-of-two count >= 1, got {v!r}")
    for name in ("rowBits", "colBits", "addressBits"):
        v = getattr(topo, name)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            out.append(f"topology.{name} must be a positive integer, got {v!r}")
    if not out and topo.usedBits > topo.addressBits:
        out.append(
            "topology bit widths exceed addressBits: "
            f"rank({topo.rankBits})+bankGroup({topo.bankGroupBits})+bank({topo.bankBits})"
            f"+row({topo.rowBits})+col({topo.colBits}) = {topo.usedBits} > {topo.addressBits}"
        )

    for name in ("queueSize", "maxCycles", "statsWindow"):
        v = getattr(cfg, name)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            out.append(f"{name} must be a positive integer, got {v!r}")
    return out


_SECTIONS = {"timing": TimingParams, "topology": Topology}
_SCALARS = ("queueSize", "maxCycles", "statsWindow")


def _build_section(cls, data: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key '{section}.{unknown[0]}' in config")
    return cls(**data)


def config_from_dict(data: dict) -> SimConfig:
    """Build and validate a SimConfig from a plain dict (the JSON layout)."""
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(_SECTIONS) - set(_SCALARS))
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}' in config")
    kwargs = {}
    for section, cls in _SECTIONS.items():
        sub = data.get(section, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"config section '{section}' must be an object")
        kwargs[section] = _build_section(cls, sub, section)
    for name in _SCALARS:
        if name in data:
            kwargs[name] = data[name]
    cfg = SimConfig(**kwargs)
    problems = validate(cfg)
    if problems:
        raise ConfigError("invalid config: " + "; ".join(problems))
    return cfg


def load_config(path: str) -> SimConfig:
    """Load a JSON config file; missing keys take defaults, unknown keys raise."""
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigParseError(f"cannot read config {path}: {e}") from e
    if not text.strip():
        return SimConfig()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"config {path}: line {e.lineno} col {e.colno}: {e.msg}") from e
    return config_from_dict(data)


def serialize(cfg: SimConfig) -> dict:
    """Dict form of a config; json.dump of it reloads to an identical SimConfig."""
    return asdict(cfg)


def save_config(cfg: SimConfig, path: str) -> None:
    with open(path, "w") as f:
        json.dump(serialize(cfg), f, indent=2, sort_keys=True)
        f.write("\n")


def apply_overrides(cfg: SimConfig, pairs: list[str]) -> SimConfig:
    """Apply `--set key=value` overrides (dotted paths such as timing.tRP)."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override '{pair}' is not of the form key=value")
        key, _, raw = pair.partition("=")
        key = key.strip()
        try:
            value = int(raw.strip(), 0)
        except ValueError:
            raise ConfigError(f"override '{pair}': value must be an integer") from None
        if key in _SCALARS:
            cfg = replace(cfg, **{key: value})
        elif "." in key:
            section, _, leaf = key.partition(".")
            cls = _SECTIONS.get(section)
            if cls is None or leaf not in {f.name for f in fields(cls)}:
                raise ConfigError(f"override '{pair}': unknown key '{key}'")
            cfg = replace(cfg, **{section: replace(getattr(cfg, section), **{leaf: value})})
        else:
            raise ConfigError(f"override '{pair}': unknown key '{key}'")
    problems = validate(cfg)
    if problems:
        raise ConfigError("invalid config after overrides: " + "; ".join(problems))
    return cfg
