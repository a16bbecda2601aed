import numpy as np
import pytest
import yaml

from dispersim.cli import main as cli_main
from dispersim.config import (
    ExperimentConfig,
    SlabConfig,
    SweepConfig,
    config_from_dict,
    config_to_dict,
    dump_config,
    load_config,
    preset,
)
from dispersim.errors import ConfigError
from dispersim.harness import (
    measure_resources,
    resolve_geometry,
    run_delta_broadband,
    run_experiment,
    run_preset,
)


def _delta_cfg(**overrides) -> ExperimentConfig:
    base = dict(
        experiment="delta-broadband",
        solver="elbm",
        domain_length_nm=620.0,
        n_x=200,
        n_t=2048,
        slab=SlabConfig(thickness_nm=100.0),
        material="ag-palik-6pole",
        source={"kind": "delta", "amplitude": 1.0},
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_preset_configs_validate():
    for name in ("fig2-ricker", "fig3-sweep", "fig6-delta", "fig7-convergence"):
        cfg = preset(name)
        assert cfg.schema_version == 1


def test_preset_unknown():
    with pytest.raises(ConfigError):
        preset("fig9")


def test_config_yaml_roundtrip(tmp_path):
    cfg = preset("fig6-delta")
    path = tmp_path / "cfg.yaml"
    path.write_text(dump_config(cfg))
    loaded = load_config(path)
    assert config_to_dict(loaded) == config_to_dict(cfg)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_from_dict({"schema_version": 1, "experiment": "cw-sweep", "bogus": 1})


def test_config_requires_schema_version():
    with pytest.raises(ConfigError, match="schema_version"):
        config_from_dict({"experiment": "cw-sweep"})
    with pytest.raises(ConfigError, match="schema_version"):
        config_from_dict({"schema_version": 2, "experiment": "cw-sweep"})


def test_config_experiment_validation():
    with pytest.raises(ConfigError, match="unknown experiment"):
        config_from_dict({"schema_version": 1, "experiment": "warp"})
    with pytest.raises(ConfigError, match="requires"):
        config_from_dict({"schema_version": 1, "experiment": "delta-broadband"})
    with pytest.raises(ConfigError, match="lattice-Boltzmann"):
        config_from_dict({
            "schema_version": 1, "experiment": "delta-broadband",
            "solver": "fdtd", "n_x": 100, "n_t": 100,
        })
    with pytest.raises(ConfigError, match="k_min"):
        config_from_dict({
            "schema_version": 1, "experiment": "cw-sweep",
            "slab": {}, "sweep": {"k_min": 0, "k_max": 3},
        })


def test_resolve_geometry_reference_numbers():
    cfg = preset("fig6-delta")
    geom = resolve_geometry(cfg, cfg.n_x)
    assert geom.dx_m == pytest.approx(0.62e-9)
    assert geom.slab_cells == 161
    assert geom.slab.start == 419 or geom.slab.start == 420
    assert geom.source_node == 250
    assert geom.slab_thickness_m == pytest.approx(161 * 0.62e-9)
    # probe midway between the slab's far face and the right boundary
    assert geom.slab.stop < geom.probe_node < cfg.n_x - 1


def test_resolve_geometry_slab_must_fit():
    cfg = _delta_cfg(slab=SlabConfig(thickness_nm=600.0), n_x=20)
    with pytest.raises(ConfigError):
        resolve_geometry(cfg, 20)


def test_vacuum_delta_run_is_flat(tmp_path):
    cfg = _delta_cfg(slab=None, n_x=128, n_t=512, output_dir=str(tmp_path / "vac"))
    report = run_delta_broadband(cfg)
    assert report.metrics["l1_full"] < 1e-10
    assert report.metrics["stability_certificate"]


def test_delta_run_outputs_and_determinism(tmp_path):
    cfg = _delta_cfg(output_dir=str(tmp_path / "a"))
    report_a = run_delta_broadband(cfg)
    cfg_b = _delta_cfg(output_dir=str(tmp_path / "b"))
    run_delta_broadband(cfg_b)
    spectrum_a = (tmp_path / "a" / "spectrum.csv").read_bytes()
    spectrum_b = (tmp_path / "b" / "spectrum.csv").read_bytes()
    assert spectrum_a == spectrum_b
    echo = yaml.safe_load((tmp_path / "a" / "config_echo.yaml").read_text())
    assert echo == config_to_dict(cfg)
    report_txt = (tmp_path / "a" / "report.txt").read_text()
    assert "wall_time_s" in report_txt
    assert report_a.metrics["mean_rel_err_band"] < 0.15  # coarse grid, loose bound


def test_vacuum_run_reference_option(tmp_path):
    cfg = _delta_cfg(slab=None, n_x=128, n_t=512, reference="vacuum-run",
                     output_dir=str(tmp_path / "ref"))
    report = run_delta_broadband(cfg)
    assert report.metrics["l1_full"] < 1e-10


def test_measure_resources():
    result, wall, peak = measure_resources(lambda: 41 + 1)
    assert result == 42
    assert 0 <= wall < 1.0
    assert peak is None or peak > 0


def test_state_bytes_scale_linearly():
    from dispersim import elbm
    from dispersim.materials import ag_palik_model, solver_coefficients

    sizes = []
    for n_x in (100, 200, 400, 800):
        dx = 620e-9 / n_x
        coeffs = solver_coefficients(ag_palik_model(), dx / 299792458.0)
        cells = round(100e-9 / dx)
        start = (n_x - cells) // 2
        state = elbm.init_state(n_x, coeffs, slice(start, start + cells), dx)
        sizes.append(state.state_bytes)
    ratios = np.diff(np.log(sizes)) / np.log(2)
    assert np.all(np.abs(ratios - 1.0) < 0.2)  # doubling n_x doubles memory +-20%


def test_cw_sweep_tiny_and_thread_determinism(tmp_path):
    cfg = ExperimentConfig(
        experiment="cw-sweep",
        solver="elbm",
        domain_length_nm=620.0,
        slab=SlabConfig(thickness_nm=100.0),
        sweep=SweepConfig(k_min=1, k_max=1),
        source={"kind": "sine", "amplitude": 1.0},
        energy_min_ev=2.0,
        energy_max_ev=5.0,
        output_dir=str(tmp_path / "serial"),
        threads=1,
    )
    report = run_experiment(cfg)
    assert report.metrics["non_converged_runs"] == 0
    cfg2 = ExperimentConfig(**{**_as_kwargs(cfg), "threads": 2,
                               "output_dir": str(tmp_path / "pool")})
    run_experiment(cfg2)
    serial = (tmp_path / "serial" / "transmittance.csv").read_bytes()
    pooled = (tmp_path / "pool" / "transmittance.csv").read_bytes()
    assert serial == pooled


def _as_kwargs(cfg: ExperimentConfig) -> dict:
    fields = config_to_dict(cfg)
    fields.pop("schema_version")
    fields["slab"] = cfg.slab
    fields["sweep"] = cfg.sweep
    return fields


def test_ricker_compare_warns_on_mismatch(tmp_path, caplog):
    cfg = ExperimentConfig(
        experiment="ricker-compare",
        solver="both",
        domain_length_nm=620.0,
        n_x=120,
        n_t=160,
        slab=SlabConfig(thickness_nm=49.6),
        source={"kind": "ricker", "position": 30, "amplitude": 1.0,
                "peak_energy_ev": 3.8735, "half_breadth_as": 145.32},
        snapshot_steps=[80],
        probes=[15, 90],
        output_dir=str(tmp_path / "rc"),
    )
    import logging

    with caplog.at_level(logging.WARNING, logger="dispersim"):
        report = run_experiment(cfg)
    assert any("differs from the reference" in rec.message for rec in caplog.records)
    assert "max_e_diff_ratio" in report.metrics
    assert (tmp_path / "rc" / "comparison.csv").exists()
    assert (tmp_path / "rc" / "elbm_snapshot_t80.csv").exists()
    assert (tmp_path / "rc" / "fdtd_snapshot_t80.csv").exists()


def test_run_preset_override(tmp_path):
    report = run_preset("fig6-delta", out_dir=tmp_path / "quick",
                        n_x=200, n_t=1024)
    assert report.steps == 1024
    with pytest.raises(ConfigError):
        run_preset("fig6-delta", bogus_field=1)


def test_cli_presets_and_show(capsys):
    assert cli_main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "fig6-delta" in out
    assert cli_main(["presets", "--show", "fig6-delta"]) == 0
    shown = capsys.readouterr().out
    assert yaml.safe_load(shown)["experiment"] == "delta-broadband"


def test_cli_presets_write(tmp_path, capsys):
    assert cli_main(["presets", "--write", str(tmp_path)]) == 0
    capsys.readouterr()
    assert (tmp_path / "fig6-delta.yaml").exists()


def test_cli_run_and_exit_codes(tmp_path, capsys):
    cfg_path = tmp_path / "ok.yaml"
    cfg = _delta_cfg(n_x=120, n_t=512, output_dir=str(tmp_path / "cli-out"))
    cfg_path.write_text(dump_config(cfg))
    assert cli_main(["run", str(cfg_path)]) == 0
    capsys.readouterr()
    assert (tmp_path / "cli-out" / "spectrum.csv").exists()

    bad_path = tmp_path / "bad.yaml"
    bad_path.write_text("schema_version: 1\nexperiment: warp\n")
    assert cli_main(["run", str(bad_path)]) == 2
    capsys.readouterr()

    missing = tmp_path / "nope.yaml"
    assert cli_main(["run", str(missing)]) == 2
    capsys.readouterr()

    # --experiment must re-validate the overridden config
    assert cli_main(["run", str(cfg_path), "--experiment", "cw-sweep"]) == 2
    capsys.readouterr()


def test_cli_numerical_failure_exit_code(tmp_path, capsys):
    # the as-printed silver table is non-passive and blows up: exit code 3
    cfg = _delta_cfg(material="ag-palik-6pole-printed", n_x=300, n_t=6000,
                     output_dir=str(tmp_path / "blowup"))
    cfg_path = tmp_path / "blowup.yaml"
    cfg_path.write_text(dump_config(cfg))
    assert cli_main(["run", str(cfg_path)]) == 3
    err = capsys.readouterr().err
    assert "numerical failure" in err
