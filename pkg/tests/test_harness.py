import csv
import dataclasses
import json
import math

import numpy as np
import pytest

from shiftres import cli
from shiftres.errors import ConfigurationError
from shiftres.harness import (
    CSV_HEADER,
    DEFAULT_OPT_BUFFER,
    ExperimentConfig,
    SweepResult,
    emit,
    load_config,
    load_result,
    reservoir_for,
    run,
    run_alpha_sweep,
    run_epsilon_sweep,
    run_gamma_sweep,
    run_shift_comparison,
    seed_sequence,
    signals_for,
    simulate,
)
from shiftres.reservoir import shift_buffer
from shiftres.timeshift import evaluate, sample_random_shifts

SMALL = dict(task="lorenz", n_nodes=10, ensemble=3, t1=20.0, t2=30.0, t3=35.0, mc_lags=50, opt_buffer=5.0)


def small(**kw):
    return ExperimentConfig(**{**SMALL, **kw})


def write_cfg(path, **kw):
    path.write_text("".join(f"{k} = {v}\n" for k, v in {**SMALL, **kw}.items()))
    return path


# -- config ---------------------------------------------------------------------

def test_resolved_defaults():
    c = ExperimentConfig(task="lorenz96", sweep="gamma").resolved()
    assert (c.epsilon, c.range_min, c.range_max, c.steps) == (1.0, 0.1, 5.0, 25)
    c = ExperimentConfig(task="lorenz96", sweep="epsilon").resolved()
    assert (c.gamma, c.range_min, c.range_max, c.steps) == (0.9, 0.1, 3.0, 15)
    c = ExperimentConfig(task="lorenz", sweep="alpha").resolved()
    assert (c.gamma, c.epsilon, c.range_max, c.steps, c.ensemble) == (1.3, 2.0, 1.0, 21, 50)
    c = ExperimentConfig(task="hr", sweep="compare").resolved()
    assert (c.epsilon, c.alpha, c.opt_buffer) == (1.0, 2.5, DEFAULT_OPT_BUFFER)
    c = ExperimentConfig(task="lorenz", sweep="alpha", preset="text").resolved()
    assert (c.gamma, c.epsilon) == (1.65, 1.0)
    assert ExperimentConfig(task="lorenz96").resolved().tau_bar == 0.19


@pytest.mark.parametrize("bad", [
    dict(task="rossler"), dict(sweep="beta"), dict(steps=0), dict(range_min=2.0, range_max=1.0),
    dict(ensemble=0), dict(n_nodes=1), dict(eta=0.0), dict(preset="figure"), dict(format="xml"),
    dict(t1=40.0), dict(hr_current=3.0),
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigurationError):
        small(**bad).resolved()


def test_load_config(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# lorenz run\ntask = lorenz\nsweep: alpha\nrange = 0, 0.5  # short grid\n"
                    "steps = 3\nensemble = 4\ngamma = none\n")
    c = load_config(path)
    assert (c.task, c.sweep, c.range_min, c.range_max, c.steps, c.ensemble, c.gamma) == (
        "lorenz", "alpha", 0.0, 0.5, 3, 4, None)


@pytest.mark.parametrize("text", ["colour = red\n", "steps = many\n", "just words\n", "range = 1\n"])
def test_load_config_errors(tmp_path, text):
    path = tmp_path / "c.cfg"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_seed_ladder_streams_independent():
    draws = {(st, k): np.random.default_rng(seed_sequence(7, st, k)).random() for st in range(3) for k in range(3)}
    assert len(set(draws.values())) == 9
    assert np.random.default_rng(seed_sequence(7, 2, 1)).random() == draws[(2, 1)]


# -- sweeps ---------------------------------------------------------------------

def test_single_point_gamma_sweep():
    res = run_gamma_sweep(small(sweep="gamma", range_min=1.0, range_max=1.0, steps=1))
    assert len(res.rows) == 1
    row = res.rows[0]
    assert row.value == 1.0 and row.shift_mode == "none" and row.std_delta_tr == 0.0
    assert res.metadata["argmin_gamma"] == 1.0


def test_epsilon_sweep_with_zero_coupling():
    res = run_epsilon_sweep(small(sweep="epsilon", range_min=0.0, range_max=1.0, steps=2))
    assert [r.value for r in res.rows] == [0.0, 1.0]
    for r in res.rows:
        assert r.extra["memory_capacity"] == pytest.approx(sum(r.extra["mc_curve"]), rel=1e-12)
        assert len(r.extra["mc_curve"]) == 50
        assert all(0.0 <= v <= 1.0 + 1e-12 for v in r.extra["mc_curve"])
    assert res.metadata["argmax_epsilon"] in (0.0, 1.0)


def test_alpha_sweep_rows_and_zero_alpha():
    res = run_alpha_sweep(small(sweep="alpha", range_min=0.0, range_max=0.5, steps=3))
    assert len(res.rows) == 3
    first = res.rows[0]
    assert first.value == 0.0 and first.std_delta_tr == 0.0 and first.std_delta_ts == 0.0
    assert all(r.ensemble == 3 and r.shift_mode == "random" for r in res.rows)
    assert res.metadata["argmin_alpha"] in (0.0, 0.25, 0.5)


def test_shared_trajectory_matches_resimulation():
    cfg = small(sweep="alpha", range_min=0.0, range_max=0.5, steps=2).resolved()
    res = run_alpha_sweep(cfg)
    task = cfg.task_definition()
    buffer = shift_buffer(0.5, task.tau_bar, cfg.dt)
    for row in res.rows:
        tr = []
        for k in range(cfg.ensemble):
            s, g = signals_for(cfg, task, buffer)
            traj = simulate(task, reservoir_for(cfg, cfg.gamma, cfg.epsilon), s, buffer)
            shifts = sample_random_shifts(cfg.n_nodes, row.value, task.tau_bar, seed_sequence(cfg.seed, 2, k))
            tr.append(evaluate(traj, task, g, shifts, cfg.eta).delta_tr)
        expected = tr[0] if len(set(tr)) == 1 else float(np.mean(tr))
        assert row.mean_delta_tr == expected


def test_alpha_sweep_grows_buffer_when_needed(monkeypatch, caplog):
    # a deliberately short first buffer forces the re-simulation path
    import shiftres.harness as h

    monkeypatch.setattr(h, "shift_buffer", lambda alpha, tau_bar, dt: 0.02)
    res = run_alpha_sweep(small(sweep="alpha", range_min=1.0, range_max=1.0, steps=1))
    # shifts reach up to alpha * tau_bar = 0.3
    assert res.metadata["buffer"] >= 0.3
    assert "re-simulating" in caplog.text
    assert not res.rows[0].note


def test_compare_rows_and_modes():
    res = run_shift_comparison(small(sweep="compare", range_min=0.5, range_max=1.5, steps=2, alpha=0.25))
    assert len(res.rows) == 2 * 3
    assert [r.shift_mode for r in res.rows] == ["none", "random", "optimized"] * 2
    opt = res.select("optimized")
    assert all("clamp_count" in r.extra and "delta_tr_joint" in r.extra for r in opt)
    assert all(r.extra["max_abs_tau"] <= 5.0 + 1e-12 for r in opt)


def test_compare_order_independent():
    cfg = small(sweep="compare", range_min=0.5, range_max=1.5, steps=3, alpha=0.25)
    full = run_shift_comparison(cfg)
    # each grid point on its own, visited in reverse
    for gamma in reversed(cfg.resolved().grid()):
        alone = run_shift_comparison(dataclasses.replace(cfg, range_min=gamma, range_max=gamma, steps=1))
        expected = [r for r in full.rows if r.value == gamma]
        assert [dataclasses.asdict(r) for r in alone.rows] == [dataclasses.asdict(r) for r in expected]


def test_parallel_matches_serial():
    cfg = small(sweep="gamma", range_min=0.5, range_max=2.0, steps=3)
    a = run(cfg)
    b = run(dataclasses.replace(cfg, jobs=2))
    assert [dataclasses.asdict(r) for r in a.rows] == [dataclasses.asdict(r) for r in b.rows]


def test_divergent_grid_point_is_recorded(monkeypatch):
    import shiftres.harness as h
    from shiftres.errors import DivergenceError

    real = h.simulate

    def flaky(task, reservoir, s, buffer):
        if reservoir.gamma == 2.0:
            raise DivergenceError("forced", step=1)
        return real(task, reservoir, s, buffer)

    monkeypatch.setattr(h, "simulate", flaky)
    res = run_gamma_sweep(small(sweep="gamma", range_min=1.0, range_max=2.0, steps=2))
    ok, bad = res.rows
    assert not ok.note and math.isfinite(ok.mean_delta_tr)
    assert bad.note.startswith("DivergenceError") and math.isnan(bad.mean_delta_tr)
    assert res.metadata["argmin_gamma"] == 1.0


# -- emit -----------------------------------------------------------------------

def test_csv_header_exact(tmp_path):
    res = run_gamma_sweep(small(sweep="gamma", range_min=1.0, range_max=2.0, steps=2))
    (path,) = emit(res, tmp_path, "csv")
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER
    assert ",".join(rows[0]) == "sweep_param,value,shift_mode,mean_delta_tr,std_delta_tr,mean_delta_ts,std_delta_ts,ensemble,seed"
    assert len(rows) == 3 and rows[1][0] == "gamma" and float(rows[2][1]) == 2.0


def test_empty_sweep_header_only(tmp_path):
    res = SweepResult(rows=[], metadata={"config": {"task": "lorenz", "sweep": "gamma"}})
    (path,) = emit(res, tmp_path, "csv")
    with open(path) as fh:
        assert fh.read() == ",".join(CSV_HEADER) + "\n"


def test_json_round_trip(tmp_path):
    res = run_epsilon_sweep(small(sweep="epsilon", range_min=0.5, range_max=0.5, steps=1))
    (path,) = emit(res, tmp_path, "json")
    back = load_result(path)
    assert back.to_dict() == json.loads(json.dumps(res.to_dict()))
    assert back.rows[0] == res.rows[0]
    assert back.metadata["config"]["n_nodes"] == 10


def test_epsilon_csv_has_mc_companion(tmp_path):
    res = run_epsilon_sweep(small(sweep="epsilon", range_min=0.5, range_max=0.5, steps=1))
    paths = emit(res, tmp_path, "csv")
    assert [p.rsplit("/", 1)[1] for p in paths] == ["lorenz_epsilon.csv", "lorenz_epsilon_mc.csv"]


def test_byte_identical_reruns(tmp_path):
    cfg = small(sweep="compare", range_min=1.0, range_max=1.0, steps=1, alpha=0.25)
    (a,) = emit(run(cfg), tmp_path / "a", "csv")
    (b,) = emit(run(cfg), tmp_path / "b", "csv")
    assert open(a, "rb").read() == open(b, "rb").read()


# -- command line ---------------------------------------------------------------

def test_cli_success(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "run.cfg", sweep="gamma", range_min=1.0, range_max=1.0, steps=1)
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out.strip()
    assert out.endswith("lorenz_gamma.csv")
    assert open(out).readline().strip() == ",".join(CSV_HEADER)


def test_cli_flags_override_file(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "run.cfg", sweep="alpha", range_min=1.0, range_max=1.0, steps=1)
    code = cli.main(["run", str(cfg), "--sweep", "gamma", "--seed", "4", "--format", "json",
                     "--out", str(tmp_path)])
    assert code == 0
    res = load_result(capsys.readouterr().out.strip())
    assert res.metadata["config"]["sweep"] == "gamma" and res.rows[0].seed == 4


def test_cli_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("task = lorenz\nflavour = sweet\n")
    assert cli.main(["run", str(bad)]) == 1
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 1
    cfg = write_cfg(tmp_path / "run.cfg", steps=0)
    assert cli.main(["run", str(cfg)]) == 1


def test_cli_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = write_cfg(tmp_path / "run.cfg", sweep="gamma", range_min=1.0, range_max=1.0, steps=1)
    assert cli.main(["run", str(cfg), "--out", str(blocker / "sub")]) == 2


def test_cli_divergence(tmp_path, capsys):
    # Lorenz blows up under RK4 at this step size
    cfg = write_cfg(tmp_path / "run.cfg", sweep="gamma", range_min=1.0, range_max=1.0, steps=1, dt=0.5)
    assert cli.main(["run", str(cfg), "--out", str(tmp_path)]) == 3
    assert "divergence" in capsys.readouterr().err
