"""Scenario configuration: one JSON document, parsed strictly.

Every problem found is collected and reported together in a single
:class:`ConfigError`.  Unknown keys are rejected so a misspelt option cannot
silently fall back to a default.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

from chromofluid.fluid_dynamics import SYSTEMS
from chromofluid.lie import ALGEBRA_NAMES

ALL_SYSTEMS = SYSTEMS + ("wong",)
PRESETS = ("quiet", "acoustic", "charged_blob", "taylor_green", "random")
FIELDS = ("rho", "s", "v", "Q", "A", "A0")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass
class GridConfig:
    n: list[int]
    lengths: list[float] | None = None


@dataclass
class EOSConfig:
    gamma: float = 5.0 / 3.0
    kappa0: float = 1.0
    c_v: float = 1.0


@dataclass
class Mode:
    """One real Fourier mode ``amplitude * cos(2 pi k.x / L + phase)``.

    ``axis`` selects the vector / 1-form component, ``component`` the Lie
    coefficient.
    """

    k: list[int]
    amplitude: float
    phase: float = 0.0
    axis: int = 0
    component: int = 0


@dataclass
class InitialConfig:
    preset: str = "quiet"
    amplitude: float | None = None
    wavevector: list[int] | None = None
    width: float | None = None
    kmax: int = 2
    amplitudes: dict[str, float] = field(default_factory=dict)
    modes: dict[str, list[Mode]] = field(default_factory=dict)


@dataclass
class LoopConfig:
    center: list[float]
    radius: float
    K: int = 256


@dataclass
class WongConfig:
    x0: list[float]
    u0: list[float]
    q: list[float]
    m: float = 1.0
    uniform_B: list[float] | None = None
    interpolation: str = "fourier"


@dataclass
class OutputConfig:
    directory: str = "output"
    cadence_diagnostics: int = 1
    cadence_snapshots: int = 0


@dataclass
class ScenarioConfig:
    system: str
    grid: GridConfig
    steps: int
    algebra: str = "u1"
    dt: float | None = None
    cfl: float = 0.4
    dealias: bool = True
    q_over_m: float | None = None
    seed: int = 0
    gauss_reproject_every: int = 0
    eos: EOSConfig = field(default_factory=EOSConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    loop: LoopConfig | None = None
    wong: WongConfig | None = None
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return _strip_none(asdict(self))

    def to_json(self) -> str:
        """Canonical form: sorted keys, defaults written out, no ``null`` values."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _strip_none(obj):
    if isinstance(obj, dict):
        return {k: _strip_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_strip_none(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# parsing


class _Checker:
    def __init__(self):
        self.problems: list[str] = []

    def fail(self, msg: str):
        self.problems.append(msg)

    def obj(self, d: Any, path: str, allowed: set[str], required: set[str] = frozenset()) -> dict:
        if not isinstance(d, dict):
            self.fail(f"{path}: expected an object")
            return {}
        for k in sorted(set(d) - allowed):
            self.fail(f"{path}.{k}: unknown key" if path else f"{k}: unknown key")
        for k in sorted(required - set(d)):
            self.fail(f"{path}.{k}: missing required key" if path else f"{k}: missing required key")
        return d

    def num(self, d: dict, key: str, path: str, default=None, positive=False, integer=False):
        if key not in d:
            return default
        v = d[key]
        name = f"{path}.{key}" if path else key
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{name}: expected a number")
            return default
        if integer and not float(v).is_integer():
            self.fail(f"{name}: expected an integer")
            return default
        if positive and not v > 0:
            self.fail(f"{name}: must be positive")
            return default
        return int(v) if integer else float(v)

    def numlist(self, v, name: str, length: int | None = None, integer=False):
        if not isinstance(v, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
        ):
            self.fail(f"{name}: expected a list of numbers")
            return None
        if length is not None and len(v) != length:
            self.fail(f"{name}: expected {length} entries, got {len(v)}")
            return None
        if integer:
            if not all(float(x).is_integer() for x in v):
                self.fail(f"{name}: expected integers")
                return None
            return [int(x) for x in v]
        return [float(x) for x in v]


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document; raises :class:`ConfigError`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from exc
    return config_from_dict(raw)


def config_from_dict(raw: Any) -> ScenarioConfig:
    c = _Checker()
    top = {
        "system", "algebra", "grid", "dt", "cfl", "steps", "dealias", "q_over_m", "seed",
        "gauss_reproject_every", "eos", "initial", "loop", "wong", "output",
    }
    raw = c.obj(raw, "", top, {"system", "grid", "steps"})

    system = raw.get("system")
    if "system" in raw and system not in ALL_SYSTEMS:
        c.fail(f"system: must be one of {list(ALL_SYSTEMS)}, got {system!r}")
        system = None

    algebra = raw.get("algebra")
    needs_algebra = system in ("eym_compressible", "eym_incompressible", "ym_vacuum", "wong")
    if algebra is None:
        if needs_algebra:
            c.fail(f"algebra: required for system {system!r}")
        algebra = "u1"
    elif algebra not in ALGEBRA_NAMES:
        c.fail(f"algebra: must be one of {list(ALGEBRA_NAMES)}, got {algebra!r}")
    if system in ("euler_maxwell",) and algebra != "u1":
        c.fail("algebra: euler_maxwell requires u1")

    # grid
    gcfg = None
    graw = c.obj(raw.get("grid", {}), "grid", {"n", "lengths"}, {"n"} if "grid" in raw else set())
    if "grid" in raw and "n" in graw:
        n = c.numlist(graw["n"], "grid.n", integer=True)
        lengths = None
        if n is not None:
            if len(n) not in (2, 3):
                c.fail("grid.n: must have 2 or 3 entries")
            elif any(v < 8 or v & (v - 1) for v in n):
                c.fail("grid.n: entries must be powers of two >= 8")
            if "lengths" in graw:
                lengths = c.numlist(graw["lengths"], "grid.lengths", len(n))
                if lengths is not None and any(v <= 0 for v in lengths):
                    c.fail("grid.lengths: entries must be positive")
            gcfg = GridConfig(n, lengths)
    dim = len(gcfg.n) if gcfg else None

    steps = c.num(raw, "steps", "", integer=True)
    if steps is not None and steps < 0:
        c.fail("steps: must be >= 0")
    dt = c.num(raw, "dt", "", positive=True)
    cfl = c.num(raw, "cfl", "", 0.4, positive=True)
    seed = c.num(raw, "seed", "", 0, integer=True)
    reproject = c.num(raw, "gauss_reproject_every", "", 0, integer=True)
    if reproject is not None and reproject < 0:
        c.fail("gauss_reproject_every: must be >= 0")
    dealias = raw.get("dealias", True)
    if not isinstance(dealias, bool):
        c.fail("dealias: expected true or false")
        dealias = True
    q_over_m = c.num(raw, "q_over_m", "")
    if system == "wong" and dt is None:
        c.fail("dt: required for system 'wong'")
    if system == "euler_maxwell" and q_over_m is None:
        c.fail("q_over_m: required for system 'euler_maxwell'")

    # eos
    eraw = c.obj(raw.get("eos", {}), "eos", {"gamma", "kappa0", "c_v"})
    eos = EOSConfig(
        c.num(eraw, "gamma", "eos", 5.0 / 3.0, positive=True),
        c.num(eraw, "kappa0", "eos", 1.0, positive=True),
        c.num(eraw, "c_v", "eos", 1.0, positive=True),
    )
    if eos.gamma <= 1:
        c.fail("eos.gamma: must exceed 1")

    initial = _parse_initial(c, raw.get("initial", {}), dim, system)

    loop = None
    if "loop" in raw:
        lraw = c.obj(raw["loop"], "loop", {"center", "radius", "K"}, {"center", "radius"})
        center = c.numlist(lraw.get("center", []), "loop.center", dim) if "center" in lraw else None
        radius = c.num(lraw, "radius", "loop", positive=True)
        K = c.num(lraw, "K", "loop", 256, integer=True)
        if K is not None and K < 64:
            c.fail("loop.K: must be at least 64")
        if system in ("wong", "ym_vacuum", "eym_incompressible"):
            c.fail(f"loop: not supported for system {system!r}")
        if center is not None and radius is not None:
            loop = LoopConfig(center, radius, K)

    wong = None
    if system == "wong" and "wong" not in raw:
        c.fail("wong: required block for system 'wong'")
    if "wong" in raw:
        wraw = c.obj(
            raw["wong"], "wong", {"x0", "u0", "q", "m", "uniform_B", "interpolation"}, {"x0", "u0", "q"}
        )
        x0 = c.numlist(wraw["x0"], "wong.x0", dim) if "x0" in wraw else None
        u0 = c.numlist(wraw["u0"], "wong.u0", dim) if "u0" in wraw else None
        q = c.numlist(wraw["q"], "wong.q") if "q" in wraw else None
        m = c.num(wraw, "m", "wong", 1.0, positive=True)
        ub = c.numlist(wraw["uniform_B"], "wong.uniform_B") if "uniform_B" in wraw else None
        interp = wraw.get("interpolation", "fourier")
        if interp not in ("fourier", "cubic"):
            c.fail("wong.interpolation: must be 'fourier' or 'cubic'")
        if x0 is not None and u0 is not None and q is not None:
            wong = WongConfig(x0, u0, q, m, ub, interp)

    oraw = c.obj(raw.get("output", {}), "output", {"directory", "cadence_diagnostics", "cadence_snapshots"})
    directory = oraw.get("directory", "output")
    if not isinstance(directory, str) or not directory:
        c.fail("output.directory: expected a non-empty string")
        directory = "output"
    cad_d = c.num(oraw, "cadence_diagnostics", "output", 1, integer=True)
    cad_s = c.num(oraw, "cadence_snapshots", "output", 0, integer=True)
    if cad_d is not None and cad_d < 1:
        c.fail("output.cadence_diagnostics: must be >= 1")
    if cad_s is not None and cad_s < 0:
        c.fail("output.cadence_snapshots: must be >= 0")
    output = OutputConfig(directory, cad_d, cad_s)

    if c.problems:
        raise ConfigError(c.problems)
    return ScenarioConfig(
        system=system,
        grid=gcfg,
        steps=steps,
        algebra=algebra,
        dt=dt,
        cfl=cfl,
        dealias=dealias,
        q_over_m=q_over_m,
        seed=seed,
        gauss_reproject_every=reproject,
        eos=eos,
        initial=initial,
        loop=loop,
        wong=wong,
        output=output,
    )


def _parse_initial(c: _Checker, iraw, dim, system) -> InitialConfig:
    iraw = c.obj(
        iraw, "initial", {"preset", "amplitude", "wavevector", "width", "kmax", "amplitudes", "modes"}
    )
    preset = iraw.get("preset", "quiet")
    if preset not in PRESETS:
        c.fail(f"initial.preset: must be one of {list(PRESETS)}, got {preset!r}")
        preset = "quiet"
    amplitude = c.num(iraw, "amplitude", "initial")
    width = c.num(iraw, "width", "initial", positive=True)
    kmax = c.num(iraw, "kmax", "initial", 2, integer=True)
    wavevector = None
    if "wavevector" in iraw:
        wavevector = c.numlist(iraw["wavevector"], "initial.wavevector", dim, integer=True)
    amps = {}
    if "amplitudes" in iraw:
        araw = c.obj(iraw["amplitudes"], "initial.amplitudes", set(FIELDS) | {"E"})
        for k in araw:
            v = c.num(araw, k, "initial.amplitudes")
            if v is not None:
                amps[k] = v
    modes: dict[str, list[Mode]] = {}
    if "modes" in iraw:
        mraw = c.obj(iraw["modes"], "initial.modes", set(FIELDS))
        for fname, lst in mraw.items():
            if not isinstance(lst, list):
                c.fail(f"initial.modes.{fname}: expected a list of modes")
                continue
            out = []
            for i, md in enumerate(lst):
                p = f"initial.modes.{fname}[{i}]"
                md = c.obj(md, p, {"k", "amplitude", "phase", "axis", "component"}, {"k", "amplitude"})
                if "k" not in md or "amplitude" not in md:
                    continue
                k = c.numlist(md["k"], f"{p}.k", dim, integer=True)
                a = c.num(md, "amplitude", p)
                ph = c.num(md, "phase", p, 0.0)
                ax = c.num(md, "axis", p, 0, integer=True)
                co = c.num(md, "component", p, 0, integer=True)
                if dim is not None and ax is not None and not 0 <= ax < dim:
                    c.fail(f"{p}.axis: out of range")
                if k is not None and a is not None:
                    out.append(Mode(k, a, ph, ax, co))
            modes[fname] = out
    if system == "wong" and preset not in ("quiet",):
        c.fail("initial.preset: wong backgrounds are given by modes only (preset must be 'quiet')")
    return InitialConfig(preset, amplitude, wavevector, width, kmax, amps, modes)
