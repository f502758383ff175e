import csv
import json

import numpy as np
import pytest

from chromofluid import cli, forms
from chromofluid.checks import CHECKS, run_checks
from chromofluid.config import ConfigError, config_from_dict, parse_config
from chromofluid.fluid_dynamics import EquationOfState, eym_rhs, max_stable_dt
from chromofluid.gauge_dynamics import gauss_residual
from chromofluid.scenario import (
    EXIT_BLOWUP,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    OUTPUT_ENV,
    build_initial_state,
    initial_gauss_check,
    resolve_dt,
    run_fluid,
)
from chromofluid.snapshot import read_snapshot, write_snapshot


def cfg_dict(**over):
    base = {"system": "euler", "grid": {"n": [16, 16]}, "steps": 10}
    base.update(over)
    return base


def write_cfg(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


# ---------------------------------------------------------------------------
# config parsing


def test_minimal_config_defaults():
    cfg = parse_config(json.dumps(cfg_dict()))
    assert cfg.algebra == "u1"
    assert cfg.dt is None and cfg.cfl == 0.4 and cfg.dealias
    assert cfg.eos.gamma == pytest.approx(5 / 3)
    assert cfg.initial.preset == "quiet"
    assert cfg.output.cadence_diagnostics == 1 and cfg.output.cadence_snapshots == 0
    sc = build_initial_state(cfg)
    bound = max_stable_dt(sc.state, sc.eos, "euler", cfg.cfl)
    assert 0 < resolve_dt(sc) <= bound


def test_dt_above_cfl_rejected():
    sc = build_initial_state(parse_config(json.dumps(cfg_dict(dt=10.0))))
    with pytest.raises(ConfigError, match="CFL"):
        resolve_dt(sc)


def test_missing_algebra_named():
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(cfg_dict(system="eym_compressible")))
    assert any("algebra" in p for p in info.value.problems)


def test_all_problems_listed():
    bad = cfg_dict(foo=1, cfl=-1, eos={"gamma": 0.5, "bar": 2})
    del bad["steps"]
    with pytest.raises(ConfigError) as info:
        config_from_dict(bad)
    text = "\n".join(info.value.problems)
    for key in ("foo", "steps", "cfl", "eos.bar", "eos.gamma"):
        assert key in text


@pytest.mark.parametrize(
    "raw, needle",
    [
        (cfg_dict(system="wong", algebra="su2"), "wong"),
        (cfg_dict(system="euler_maxwell"), "q_over_m"),
        (cfg_dict(system="euler_maxwell", algebra="su2", q_over_m=1.0), "u1"),
        (cfg_dict(grid={"n": [12, 16]}), "powers of two"),
        (cfg_dict(initial={"preset": "vortex"}), "preset"),
        (cfg_dict(loop={"center": [1.0, 1.0]}), "radius"),
        (cfg_dict(system="ym_vacuum", algebra="su2", loop={"center": [1, 1], "radius": 2}), "loop"),
        ("not json", "JSON"),
    ],
)
def test_config_errors(raw, needle):
    text = raw if isinstance(raw, str) else json.dumps(raw)
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert any(needle in p for p in info.value.problems)


def test_round_trip():
    raw = cfg_dict(
        system="eym_compressible",
        algebra="su2",
        seed=3,
        initial={
            "preset": "random",
            "amplitudes": {"rho": 0.01, "v": 0.01, "Q": 0.02, "A": 0.1},
            "modes": {"A": [{"k": [1, 2], "amplitude": 0.1, "axis": 1, "component": 2}]},
        },
        loop={"center": [3, 3], "radius": 2},
        output={"directory": "out", "cadence_diagnostics": 5},
    )
    cfg = config_from_dict(raw)
    again = parse_config(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()


# ---------------------------------------------------------------------------
# initial states


def test_quiet_preset_is_equilibrium():
    cfg = parse_config(json.dumps(cfg_dict(system="eym_compressible", algebra="su2")))
    st = build_initial_state(cfg).state
    np.testing.assert_array_equal(st.fluid.rho.data, 1.0)
    d = eym_rhs(st, EquationOfState())
    assert max(np.max(np.abs(a)) for a in d.arrays()) == 0.0


def test_acoustic_preset():
    cfg = parse_config(json.dumps(cfg_dict(initial={"preset": "acoustic", "amplitude": 1e-3})))
    st = build_initial_state(cfg).state
    x, _ = st.grid.coords()
    np.testing.assert_allclose(st.fluid.rho.data[0, 0], 1 + 1e-3 * np.cos(x), atol=1e-15)
    assert np.max(np.abs(st.fluid.v.data)) == 0.0
    assert np.max(np.abs(st.gauge.E.data)) == 0.0


def test_charged_blob_is_gauss_consistent():
    cfg = parse_config(json.dumps(cfg_dict(
        system="eym_compressible", algebra="su2", grid={"n": [32, 32]},
        initial={"preset": "charged_blob",
                 "modes": {"A": [{"k": [1, 0], "amplitude": 0.2, "axis": 1, "component": 2}]}},
    )))
    sc = build_initial_state(cfg)
    Q = sc.state.fluid.Q
    assert np.max(np.abs(Q.data.mean(axis=(-2, -1)))) < 1e-15
    assert Q.norm_inf() > 0
    assert initial_gauss_check(sc) < 1e-9
    assert gauss_residual(sc.state.gauge, Q).norm_l2() < 1e-9 * Q.norm_l2()


def test_nonpositive_density_rejected():
    cfg = parse_config(json.dumps(cfg_dict(initial={"preset": "acoustic", "amplitude": 1.5})))
    with pytest.raises(ConfigError, match="density"):
        build_initial_state(cfg)


def test_random_preset_deterministic_by_seed():
    raw = cfg_dict(initial={"preset": "random", "amplitudes": {"rho": 0.1, "v": 0.1}})
    a = build_initial_state(config_from_dict(dict(raw, seed=1))).state
    b = build_initial_state(config_from_dict(dict(raw, seed=1))).state
    c = build_initial_state(config_from_dict(dict(raw, seed=2))).state
    np.testing.assert_array_equal(a.fluid.v.data, b.fluid.v.data)
    assert np.max(np.abs(a.fluid.v.data - c.fluid.v.data)) > 0


# ---------------------------------------------------------------------------
# runs


def test_steps_zero_writes_initial_row(tmp_path):
    cfg = config_from_dict(cfg_dict(steps=0))
    assert run_fluid(cfg, tmp_path) == EXIT_OK
    head, rows = read_csv(tmp_path / "diagnostics.csv")
    assert rows.shape[0] == 1 and rows[0, 0] == 0.0
    assert head[: len(head)] == ["t", "mass", "energy_fluid", "energy_charge", "energy_internal",
                                 "energy_em", "energy_total", "gauss_L2", "s_min", "s_max", "casimir"]


def test_quiet_run_constant(tmp_path):
    cfg = config_from_dict(cfg_dict(steps=100, system="eym_compressible", algebra="su2"))
    assert run_fluid(cfg, tmp_path) == EXIT_OK
    head, rows = read_csv(tmp_path / "diagnostics.csv")
    assert rows.shape[0] == 101
    assert np.max(np.abs(rows[:, 1:] - rows[0, 1:])) < 1e-12


def test_acoustic_run_summary(tmp_path):
    cfg = config_from_dict(cfg_dict(grid={"n": [32, 32]}, steps=200, initial={"preset": "acoustic"}))
    assert run_fluid(cfg, tmp_path) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["energy_total_relative_drift"] < 1e-6
    assert summary["steps_completed"] == 200


def test_run_deterministic(tmp_path):
    raw = cfg_dict(
        system="eym_compressible", algebra="su2", steps=20, seed=4,
        initial={"preset": "random", "amplitudes": {"rho": 0.05, "v": 0.05, "Q": 0.05, "A": 0.1}},
    )
    cfg = config_from_dict(raw)
    assert run_fluid(cfg, tmp_path / "a") == EXIT_OK
    assert run_fluid(cfg, tmp_path / "b") == EXIT_OK
    a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
    b = (tmp_path / "b" / "diagnostics.csv").read_bytes()
    assert a == b


def test_cadences_and_snapshots(tmp_path):
    cfg = config_from_dict(cfg_dict(
        steps=10, initial={"preset": "acoustic"},
        output={"cadence_diagnostics": 3, "cadence_snapshots": 5},
    ))
    assert run_fluid(cfg, tmp_path) == EXIT_OK
    _, rows = read_csv(tmp_path / "diagnostics.csv")
    assert rows.shape[0] == 5  # steps 0, 3, 6, 9 and the final step
    snaps = sorted(p.name for p in tmp_path.glob("snap_*.bin"))
    assert snaps == ["snap_000000.bin", "snap_000005.bin", "snap_000010.bin"]
    header, fields = read_snapshot(tmp_path / "snap_000010.bin")
    assert header["time"] == pytest.approx(rows[-1, 0], rel=1e-15)
    assert set(fields) == {"rho", "s", "v", "Q", "A", "E"}


def test_snapshot_round_trip(tmp_path):
    raw = cfg_dict(system="eym_compressible", algebra="su3", seed=9,
                   initial={"preset": "random", "amplitudes": {"rho": 0.1, "v": 0.1, "Q": 0.1, "A": 0.1}})
    st = build_initial_state(config_from_dict(raw)).state
    path = tmp_path / "s.bin"
    write_snapshot(path, st)
    header, fields = read_snapshot(path)
    assert header["byte_order"] == "little" and header["dtype"] == "float64"
    assert header["algebra"] == "su3"
    for name, arr in zip(st.FIELDS, st.arrays()):
        assert fields[name].tobytes() == arr.astype("<f8").tobytes()
    # header fully determines the payload: truncation is detected
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(ValueError, match="payload"):
        read_snapshot(path)


def test_circulation_columns(tmp_path):
    cfg = config_from_dict(cfg_dict(
        grid={"n": [32, 32]}, steps=3, system="eym_compressible", algebra="su2",
        initial={"preset": "charged_blob"}, loop={"center": [3.1, 3.1], "radius": 2.0},
    ))
    assert run_fluid(cfg, tmp_path) == EXIT_OK
    head, rows = read_csv(tmp_path / "diagnostics.csv")
    assert head[-2:] == ["circulation", "kelvin_rhs"]
    assert rows.shape == (4, len(head))


def test_blowup_exit_code(tmp_path):
    path = write_cfg(tmp_path, cfg_dict(
        steps=2000, initial={"preset": "acoustic", "amplitude": 0.9},
        output={"directory": str(tmp_path / "out"), "cadence_diagnostics": 100},
    ))
    assert cli.main(["-q", "run", path]) == EXIT_BLOWUP
    report = json.loads((tmp_path / "out" / "blowup.json").read_text())
    assert report["field"] == "rho"
    assert report["t"] > 0


def test_config_error_exit_code(tmp_path, capsys):
    path = write_cfg(tmp_path, cfg_dict(system="eym_compressible"))
    assert cli.main(["run", path]) == EXIT_CONFIG
    assert "algebra" in capsys.readouterr().err


def test_incompatible_charge_exit_code(tmp_path, capsys):
    # a constant u1 charge cannot satisfy the Gauss law on a torus
    path = write_cfg(tmp_path, cfg_dict(
        system="eym_compressible", algebra="u1",
        initial={"modes": {"Q": [{"k": [0, 0], "amplitude": 0.5}]}},
        output={"directory": str(tmp_path / "out")},
    ))
    assert cli.main(["run", path]) == EXIT_CONFIG
    assert "mean" in capsys.readouterr().err


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    path = write_cfg(tmp_path, cfg_dict(output={"directory": str(blocker / "sub")}))
    assert cli.main(["-q", "run", path]) == EXIT_IO
    assert cli.main(["-q", "run", str(tmp_path / "missing.json")]) == EXIT_IO


def test_output_env_override(tmp_path, monkeypatch):
    path = write_cfg(tmp_path, cfg_dict(steps=1, output={"directory": str(tmp_path / "ignored")}))
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["-q", "run", path]) == EXIT_OK
    assert (tmp_path / "env" / "diagnostics.csv").exists()
    assert not (tmp_path / "ignored").exists()


def test_gauss_reprojection_option(tmp_path):
    raw = cfg_dict(
        grid={"n": [32, 32]}, steps=20, system="eym_compressible", algebra="su2", seed=1,
        initial={"preset": "random", "amplitudes": {"v": 0.2, "Q": 0.3, "A": 0.5}},
    )
    assert run_fluid(config_from_dict(raw), tmp_path / "free") == EXIT_OK
    assert run_fluid(config_from_dict(dict(raw, gauss_reproject_every=5)), tmp_path / "fixed") == EXIT_OK
    head, free = read_csv(tmp_path / "free" / "diagnostics.csv")
    _, fixed = read_csv(tmp_path / "fixed" / "diagnostics.csv")
    col = head.index("gauss_L2")
    assert fixed[-1, col] < 1e-9
    assert fixed[5, col] <= free[5, col]


def test_wong_command(tmp_path):
    path = write_cfg(tmp_path, {
        "system": "wong", "algebra": "su2", "grid": {"n": [16, 16]}, "steps": 50, "dt": 0.01,
        "initial": {"modes": {"A": [{"k": [1, 0], "amplitude": 0.3, "axis": 1, "component": 2}],
                              "A0": [{"k": [0, 1], "amplitude": 0.2, "component": 0}]}},
        "wong": {"x0": [1, 1], "u0": [0.5, 0.1], "q": [1, 0, 0]},
        "output": {"directory": str(tmp_path / "w"), "cadence_diagnostics": 10},
    })
    assert cli.main(["-q", "wong", path]) == EXIT_OK
    head, rows = read_csv(tmp_path / "w" / "trajectory.csv")
    assert head[0] == "t" and head[-2:] == ["charge_norm", "kinetic_energy"]
    assert rows.shape[0] == 6
    assert np.max(np.abs(rows[:, head.index("charge_norm")] - 1.0)) < 1e-12


# ---------------------------------------------------------------------------
# check subcommand


def test_check_all_pass(capsys):
    assert cli.main(["check"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == len(CHECKS)
    assert "residual=" not in out


def test_check_verbose(capsys):
    assert cli.main(["check", "--verbose"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("PASS")]
    assert len(lines) == len(CHECKS)
    assert all("residual=" in l for l in lines)


@pytest.fixture
def flipped_codiff_sign(monkeypatch):
    monkeypatch.setattr(forms, "_BRACKET_ADJOINT_SIGN", -forms._BRACKET_ADJOINT_SIGN)


def test_mutation_fails_adjointness_and_energy(flipped_codiff_sign, capsys):
    failed = {r.name for r in run_checks() if not r.passed}
    assert failed == {"adjointness", "energy"}
    assert cli.main(["check"]) == 1
    out = capsys.readouterr().out
    assert "FAIL adjointness" in out and "FAIL energy" in out
