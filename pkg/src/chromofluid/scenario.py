"""Initial-condition construction and the time loop behind ``run`` and ``wong``."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from chromofluid import kernels
from chromofluid.config import ConfigError, ScenarioConfig
from chromofluid.diagnostics import (
    DIAGNOSTIC_COLUMNS,
    DegenerateLoopError,
    LoopTracer,
    diagnostics_row,
    kelvin_quantity,
    kelvin_rhs,
    step_with_loop,
)
from chromofluid.fluid_dynamics import (
    BlowUpError,
    CFLError,
    CoupledState,
    EquationOfState,
    max_stable_dt,
    make_state,
    step,
)
from chromofluid.forms import GForm, Grid, divergence, random_form, vector_field
from chromofluid.gauge_dynamics import (
    ConstraintIncompatibleError,
    SolverError,
    gauss_residual,
    reproject_gauss,
    solve_initial_E,
)
from chromofluid.lie import make_algebra
from chromofluid.wong import Background, WongState, trajectory_header, trajectory_row, wong_step

log = logging.getLogger(__name__)

OUTPUT_ENV = "CHROMOFLUID_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4

DEFAULT_DT_FRACTION = 0.5


@dataclass
class Scenario:
    cfg: ScenarioConfig
    grid: Grid
    eos: EquationOfState
    state: CoupledState | None = None
    loop: LoopTracer | None = None
    particle: WongState | None = None
    background: Background | None = None


def _grid(cfg: ScenarioConfig) -> Grid:
    g = cfg.grid
    return Grid(tuple(g.n), None if g.lengths is None else tuple(g.lengths), cfg.dealias)


def _mode_array(grid: Grid, modes, lead: tuple[int, ...], name: str) -> np.ndarray:
    """Sum of cosine modes into an array of shape ``lead + grid.shape``."""
    out = np.zeros(lead + grid.shape)
    x = grid.coords()
    for md in modes:
        phase = sum(2 * np.pi * k * xi / L for k, xi, L in zip(md.k, x, grid.lengths)) + md.phase
        wave = md.amplitude * np.cos(phase)
        idx = ()
        if name in ("v", "A"):
            idx += (md.axis,)
        if name in ("Q", "A", "A0"):
            ncomp = lead[-1]
            if not 0 <= md.component < ncomp:
                raise ConfigError([f"initial.modes.{name}: component {md.component} out of range"])
            idx += (md.component,)
        out[idx] += wave
    return out


def _bump(grid: Grid, width: float) -> np.ndarray:
    """Smooth periodic bump centred in the box (sum of Gaussian images)."""
    x = grid.coords()
    r2 = np.zeros(grid.shape)
    for xi, L in zip(x, grid.lengths):
        dx = xi - L / 2
        r2 = r2 + dx * dx
    return np.exp(-0.5 * r2 / width**2)


def build_initial_state(cfg: ScenarioConfig) -> Scenario:
    """Construct the state (and loop / particle) described by ``cfg``.

    Fields are assembled from the preset plus any listed Fourier modes, then
    dealiased if the grid dealiases.  For charged systems the electric field
    solves the Gauss law for the initial charge.
    """
    grid = _grid(cfg)
    eos = EquationOfState(cfg.eos.gamma, cfg.eos.kappa0, cfg.eos.c_v)
    alg = make_algebra(cfg.algebra)
    d, n = grid.dim, alg.dim
    ini = cfg.initial
    rng = np.random.default_rng(cfg.seed)
    u1 = make_algebra("u1")

    rho = np.ones(grid.shape)
    s = np.zeros(grid.shape)
    v = np.zeros((d,) + grid.shape)
    Q = np.zeros((n,) + grid.shape)
    A = np.zeros((d, n) + grid.shape)
    A0 = np.zeros((n,) + grid.shape)

    preset = ini.preset
    x = grid.coords()
    if preset == "acoustic":
        amp = 1e-4 if ini.amplitude is None else ini.amplitude
        kvec = ini.wavevector or [1] + [0] * (d - 1)
        phase = sum(2 * np.pi * k * xi / L for k, xi, L in zip(kvec, x, grid.lengths))
        rho = rho + amp * np.cos(phase)
    elif preset == "charged_blob":
        amp = 0.1 if ini.amplitude is None else ini.amplitude
        width = ini.width or min(grid.lengths) / 8
        bump = _bump(grid, width)
        Q[0] = amp * (bump - bump.mean())
    elif preset == "taylor_green":
        amp = 1.0 if ini.amplitude is None else ini.amplitude
        kx = 2 * np.pi / grid.lengths[0]
        ky = 2 * np.pi / grid.lengths[1]
        v[0] = amp * np.sin(kx * x[0]) * np.cos(ky * x[1])
        v[1] = -amp * (kx / ky) * np.cos(kx * x[0]) * np.sin(ky * x[1])
    elif preset == "random":
        amps = ini.amplitudes
        kmax = ini.kmax
        if "rho" in amps:
            rho = rho + amps["rho"] * random_form(grid, 0, u1, rng, kmax).data[0, 0]
        if "s" in amps:
            s = s + amps["s"] * random_form(grid, 0, u1, rng, kmax).data[0, 0]
        if "v" in amps:
            v = v + amps["v"] * random_form(grid, 1, u1, rng, kmax).data[:, 0]
        if "Q" in amps:
            q = random_form(grid, 0, alg, rng, kmax).data[0]
            Q = Q + amps["Q"] * (q - q.mean(axis=grid.axes, keepdims=True))
        if "A" in amps:
            A = A + amps["A"] * random_form(grid, 1, alg, rng, kmax).data
        if "A0" in amps:
            A0 = A0 + amps["A0"] * random_form(grid, 0, alg, rng, kmax).data[0]

    m = ini.modes
    rho = rho + _mode_array(grid, m.get("rho", []), (), "rho")
    s = s + _mode_array(grid, m.get("s", []), (), "s")
    v = v + _mode_array(grid, m.get("v", []), (d,), "v")
    Q = Q + _mode_array(grid, m.get("Q", []), (n,), "Q")
    A = A + _mode_array(grid, m.get("A", []), (d, n), "A")
    A0 = A0 + _mode_array(grid, m.get("A0", []), (n,), "A0")

    P = grid.project
    rho, s, v, Q, A, A0 = P(rho), P(s), P(v), P(Q), P(A), P(A0)

    problems = []
    system = cfg.system
    if system == "wong":
        sc = Scenario(cfg, grid, eos)
        w = cfg.wong
        if len(w.q) != n:
            raise ConfigError([f"wong.q: expected {n} components for {alg.name}"])
        try:
            sc.background = Background(
                GForm(grid, 1, alg, A), GForm(grid, 0, alg, A0[None]), w.uniform_B, w.interpolation
            )
        except ValueError as exc:
            raise ConfigError([f"wong: {exc}"]) from exc
        sc.particle = WongState(np.mod(w.x0, grid.lengths), w.u0, w.q, w.m)
        return sc

    if np.any(rho <= 0):
        problems.append(f"initial: density must stay positive (min {rho.min():.3e})")
    if system in ("euler",) and (np.any(Q) or np.any(A)):
        problems.append("initial: euler is uncharged; Q and A modes are not allowed")
    if system == "ym_vacuum" and (np.any(Q) or np.any(v)):
        problems.append("initial: ym_vacuum has no fluid; Q and v must vanish")
    if np.any(A0):
        problems.append("initial.modes.A0: only used by wong backgrounds (fluid runs use A0 = 0)")
    if system == "euler_maxwell":
        Q = cfg.q_over_m * rho[None]
    if problems:
        raise ConfigError(problems)

    Aform = GForm(grid, 1, alg, A)
    E = GForm.zeros(grid, 1, alg)
    if system in ("eym_compressible", "eym_incompressible"):
        E = solve_initial_E(Aform, GForm(grid, 0, alg, Q[None]))
    elif system == "euler_maxwell":
        # a single charged species cannot be neutral on a torus; the Gauss
        # law is imposed relative to a uniform neutralizing background
        Qn = Q - Q.mean(axis=grid.axes, keepdims=True)
        E = solve_initial_E(Aform, GForm(grid, 0, alg, Qn[None]))

    state = make_state(grid, alg, rho, s, v, Q, Aform, E)
    if system == "eym_incompressible":
        div = divergence(vector_field(grid, v))
        if np.max(np.abs(div)) > 1e-10 * max(1.0, float(np.max(np.abs(v)))):
            raise ConfigError(["initial: eym_incompressible needs a divergence-free velocity"])
        if np.any(np.abs(rho - 1) > 0):
            raise ConfigError(["initial: eym_incompressible uses rho = 1"])
    sc = Scenario(cfg, grid, eos, state)
    if cfg.loop is not None:
        try:
            sc.loop = LoopTracer.circle(grid, alg, cfg.loop.center, cfg.loop.radius, cfg.loop.K)
        except ValueError as exc:
            raise ConfigError([f"loop: {exc}"]) from exc
    return sc


def output_dir(cfg: ScenarioConfig) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or cfg.output.directory)


def _fmt(x: float) -> str:
    return "%.17g" % x


class _CSV:
    def __init__(self, path: Path, columns):
        self.columns = list(columns)
        self.fh = open(path, "w", newline="")
        self.writer = csv.writer(self.fh)
        self.writer.writerow(self.columns)

    def row(self, values: dict | list):
        if isinstance(values, dict):
            values = [values[c] for c in self.columns]
        self.writer.writerow([_fmt(float(v)) for v in values])

    def close(self):
        self.fh.close()


def resolve_dt(sc: Scenario) -> float:
    cfg = sc.cfg
    bound = max_stable_dt(sc.state, sc.eos, cfg.system, cfg.cfl)
    if cfg.dt is None:
        # leave headroom: the bound shrinks as the flow develops
        return DEFAULT_DT_FRACTION * bound
    if cfg.dt > bound * (1 + 1e-12):
        raise ConfigError([f"dt: {cfg.dt} exceeds the CFL bound {bound:.6g} (cfl={cfg.cfl})"])
    return cfg.dt


def run_fluid(cfg: ScenarioConfig, out: Path | None = None) -> int:
    """Run a field/fluid scenario; returns the process exit code."""
    sc = build_initial_state(cfg)
    dt = resolve_dt(sc)
    out = out or output_dir(cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(cfg.to_json())
    except OSError as exc:
        log.error("cannot write to %s: %s", out, exc)
        return EXIT_IO
    from chromofluid.snapshot import write_snapshot

    state, loop, eos = sc.state, sc.loop, sc.eos
    columns = list(DIAGNOSTIC_COLUMNS)
    if state.algebra.is_abelian:
        columns.append("casimir")
    if loop is not None:
        columns += ["circulation", "kelvin_rhs"]

    def diag(st, lp):
        row = diagnostics_row(st, eos)
        if lp is not None:
            row["circulation"] = kelvin_quantity(lp, st)
            row["kelvin_rhs"] = kelvin_rhs(lp, st, eos)
        return row

    cad_d, cad_s = cfg.output.cadence_diagnostics, cfg.output.cadence_snapshots
    try:
        table = _CSV(out / "diagnostics.csv", columns)
    except OSError as exc:
        log.error("cannot open diagnostics file: %s", exc)
        return EXIT_IO
    first = last = None
    status = EXIT_OK
    try:
        first = last = diag(state, loop)
        table.row(first)
        if cad_s:
            write_snapshot(out / "snap_000000.bin", state)
        for k in range(1, cfg.steps + 1):
            if loop is not None:
                state, loop = step_with_loop(
                    state, loop, dt, eos, cfg.system, cfg.q_over_m, cfl=cfg.cfl
                )
            else:
                state = step(state, dt, eos, cfg.system, cfg.q_over_m, cfl=cfg.cfl)
            if cfg.gauss_reproject_every and k % cfg.gauss_reproject_every == 0:
                state = CoupledState(
                    state.fluid, reproject_gauss(state.gauge, state.fluid.Q), state.t
                )
            if k % cad_d == 0 or k == cfg.steps:
                last = diag(state, loop)
                table.row(last)
            if cad_s and k % cad_s == 0:
                write_snapshot(out / f"snap_{k:06d}.bin", state)
    except (BlowUpError, CFLError, DegenerateLoopError) as exc:
        field = getattr(exc, "field", None)
        report = {"error": type(exc).__name__, "message": str(exc), "field": field, "t": state.t}
        log.error("%s", exc)
        try:
            (out / "blowup.json").write_text(json.dumps(report, indent=2))
        except OSError:
            pass
        status = EXIT_BLOWUP
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        status = EXIT_IO
    finally:
        table.close()

    if first is not None and last is not None:
        summary = {
            "system": cfg.system,
            "steps_completed": int(round(state.t / dt)) if dt else 0,
            "t_final": state.t,
            "dt": dt,
            "backend": kernels.backend(),
            "status": status,
        }
        for key in ("mass", "energy_total", "casimir", "circulation"):
            if key in first and first[key] != 0:
                summary[f"{key}_relative_drift"] = abs(last[key] - first[key]) / abs(first[key])
        summary["gauss_L2_final"] = last["gauss_L2"]
        try:
            (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
        except OSError as exc:
            log.error("cannot write summary: %s", exc)
            return EXIT_IO
        log.info("summary: %s", summary)
    return status


def run_wong(cfg: ScenarioConfig, out: Path | None = None) -> int:
    if cfg.wong is None:
        raise ConfigError(["wong: block required"])
    if cfg.dt is None:
        raise ConfigError(["dt: required for Wong integration"])
    sc = build_initial_state(cfg) if cfg.system == "wong" else None
    if sc is None:
        raise ConfigError(["system: the wong command needs system 'wong'"])
    out = out or output_dir(cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(cfg.to_json())
        table = _CSV(out / "trajectory.csv", trajectory_header(sc.grid.dim, sc.background.algebra.dim))
    except OSError as exc:
        log.error("cannot write to %s: %s", out, exc)
        return EXIT_IO
    p, bg = sc.particle, sc.background
    status = EXIT_OK
    try:
        table.row(trajectory_row(p, bg.algebra))
        for k in range(1, cfg.steps + 1):
            p = wong_step(p, bg, cfg.dt)
            if k % cfg.output.cadence_diagnostics == 0 or k == cfg.steps:
                table.row(trajectory_row(p, bg.algebra))
    except FloatingPointError as exc:
        log.error("%s", exc)
        try:
            (out / "blowup.json").write_text(json.dumps({"message": str(exc), "t": p.t}))
        except OSError:
            pass
        status = EXIT_BLOWUP
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        status = EXIT_IO
    finally:
        table.close()
    return status


def initial_gauss_check(sc: Scenario) -> float:
    """Relative Gauss residual of a built state (0 for an uncharged state)."""
    st = sc.state
    qn = st.fluid.Q.norm_l2()
    r = gauss_residual(st.gauge, st.fluid.Q).norm_l2()
    return r / qn if qn else r


__all__ = [
    "ConstraintIncompatibleError",
    "SolverError",
    "Scenario",
    "build_initial_state",
    "run_fluid",
    "run_wong",
    "output_dir",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_BLOWUP",
    "EXIT_IO",
]
