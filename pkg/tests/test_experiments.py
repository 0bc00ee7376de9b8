"""Exponent table, experiment driver, and command-line tests.

The exponent functions are pinned by closed-form identities (the moment
cross-check, the alpha/beta relation, exact boundary values).  Each
experiment driver runs once at a reduced scale with a fixed seed; the
checks mirror what the driver reports at full scale: variation sums
growing below the variation order and stabilising above it, modulus
brackets ordered with the windowed spread growing at the mesh-ratio
power, derivative suprema scaling in the height with the exact flat
control, and the radial suite rows landing in their bands.  File
outputs are round-tripped, and the CLI verbs run end to end.
"""

import math

import numpy as np
import pytest

from sleflow import io as sio
from sleflow.cli import main
from sleflow.experiments import (
    EXPERIMENT_NAMES,
    ExperimentConfig,
    config_from_mapping,
    experiment_bessel_suite,
    experiment_holder_modulus,
    experiment_psi_variation,
    experiment_unif_map_scaling,
    load_config_file,
    run_sle_trace,
    version_string,
)
from sleflow.exponents import (
    ExponentTable,
    beta_via_moment_exponent,
    exponent_formulas,
    holder_alpha,
    log_power_beta,
    variation_order,
)

KAPPA_GRID = (0.5, 1.0, 2.0, 8.0 / 3.0, 4.0, 6.0, 8.0, 8.5, 10.0, 12.0, 20.0)


class TestExponents:
    def test_variation_order(self):
        assert variation_order(2.0) == 1.25
        assert variation_order(8.0) == 2.0
        # the cap: above 8 the order saturates at 2
        assert variation_order(12.0) == 2.0
        assert variation_order(1e-9) == pytest.approx(1.0, abs=1e-9)

    def test_boundary_values_exact(self):
        # kappa = 8: denominators simplify to integers, exact in floats
        assert holder_alpha(8.0) == 0.0
        assert log_power_beta(8.0) == 0.5

    def test_small_kappa_limit(self):
        assert holder_alpha(1e-8) == pytest.approx(1.0, abs=1e-4)

    def test_alpha_beta_relation(self):
        # alpha = 1 - beta sqrt(8 + kappa) / 2, algebraic identity
        for k in KAPPA_GRID:
            want = 1.0 - log_power_beta(k) * math.sqrt(8.0 + k) / 2.0
            assert holder_alpha(k) == pytest.approx(want, abs=1e-12)

    def test_moment_exponent_cross_check(self):
        for k in KAPPA_GRID:
            if k <= 1.0:
                continue
            assert beta_via_moment_exponent(k) == pytest.approx(
                log_power_beta(k), rel=1e-12)

    def test_frozen_values(self):
        assert holder_alpha(2.0) == pytest.approx(0.2597469266479574, rel=1e-13)
        assert log_power_beta(2.0) == pytest.approx(0.4681771513464289, rel=1e-13)
        assert holder_alpha(6.0) == pytest.approx(0.011001113587127076, rel=1e-12)

    def test_alpha_monotone_decreasing_below_8(self):
        ks = np.linspace(0.5, 8.0, 40)
        alphas = [holder_alpha(k) for k in ks]
        assert all(a > b for a, b in zip(alphas, alphas[1:]))
        assert all(a >= 0.0 for a in alphas)

    def test_table(self):
        tab = exponent_formulas(6.0)
        assert tab.d == variation_order(6.0)
        assert tab.alpha == holder_alpha(6.0)
        assert tab.beta == log_power_beta(6.0)
        assert tab.p == pytest.approx(1.0 / tab.beta, rel=1e-15)
        assert tab.as_csv_row() == (6.0, tab.d, tab.alpha, tab.beta, tab.p)

    def test_log_only_flag(self):
        assert exponent_formulas(8.0).log_only
        assert not exponent_formulas(8.5).log_only
        assert not exponent_formulas(6.0).log_only

    def test_rejects_nonpositive_kappa(self):
        for fn in (variation_order, holder_alpha, log_power_beta,
                   beta_via_moment_exponent, exponent_formulas):
            with pytest.raises(ValueError):
                fn(0.0)
            with pytest.raises(ValueError):
                fn(-1.0)

    def test_exponent_csv(self, tmp_path):
        rows = [exponent_formulas(k).as_csv_row() for k in (2.0, 8.0)]
        f = tmp_path / "exp.csv"
        sio.write_exponent_csv(f, rows)
        lines = f.read_text().splitlines()
        assert lines[0] == ",".join(sio.EXPONENT_HEADER)
        assert len(lines) == 3
        assert float(lines[1].split(",")[2]) == holder_alpha(2.0)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError, match="unknown experiment"):
            ExperimentConfig(name="nope", kappa=2.0)
        with pytest.raises(ValueError, match="kappa"):
            ExperimentConfig(name="trace", kappa=-1.0)
        with pytest.raises(ValueError, match="dt"):
            ExperimentConfig(name="trace", kappa=2.0, T=1.0, dt=2.0)
        with pytest.raises(ValueError, match="n_paths"):
            ExperimentConfig(name="trace", kappa=2.0, n_paths=0)
        with pytest.raises(ValueError, match="seed"):
            ExperimentConfig(name="trace", kappa=2.0, seed=-1)

    def test_n_steps(self):
        assert ExperimentConfig(name="trace", kappa=0.0, dt=1e-4).n_steps == 10_000
        # floor of two steps even when T / dt rounds below it
        assert ExperimentConfig(name="trace", kappa=0.0, dt=0.9).n_steps == 2

    def test_stem(self):
        cfg = ExperimentConfig(name="trace", kappa=2.5, seed=3)
        assert cfg.stem == "trace_kappa2.5_seed3"

    def test_tolerances(self):
        cfg = ExperimentConfig(name="bessel", kappa=2.0,
                               tolerances={"clock_ks": 0.05})
        assert cfg.tol("clock_ks", 0.03) == 0.05
        assert cfg.tol("density_gap", 0.08) == 0.08

    def test_load_config_file(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("# comment\nname = psivar\nkappa=2.0  # trailing\n\nn=5\n")
        assert load_config_file(f) == {"name": "psivar", "kappa": "2.0", "n": "5"}

    def test_load_config_file_malformed(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("name=trace\nnot a pair\n")
        with pytest.raises(ValueError, match=":2:"):
            load_config_file(f)

    def test_config_from_mapping(self):
        cfg = config_from_mapping({"name": "bessel", "kappa": "2", "n": "50",
                                   "tol_clock_ks": "0.05"})
        assert cfg.n_paths == 50
        assert cfg.tolerances == {"clock_ks": 0.05}

    def test_config_from_mapping_rejects(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            config_from_mapping({"name": "trace", "bogus": "1"})
        with pytest.raises(ValueError, match="name"):
            config_from_mapping({"kappa": "2"})

    def test_experiment_names_stable(self):
        assert EXPERIMENT_NAMES == ("trace", "psivar", "holder", "unifmap",
                                    "bessel", "gridsum", "witness", "exponents")

    def test_version_string(self):
        assert version_string().startswith("sleflow ")


class TestTraceRun:
    def test_flat_driver_endpoint(self, tmp_path):
        cfg = ExperimentConfig(name="trace", kappa=0.0, dt=1e-3,
                               out_dir=str(tmp_path))
        result = run_sle_trace(cfg)
        assert result.end_point == pytest.approx(2j, rel=1e-9)
        assert result.csv_path.exists()
        meta = (tmp_path / f"{cfg.stem}.meta").read_text()
        assert "wall_seconds=" in meta
        assert "version=sleflow" in meta
        gp = (tmp_path / f"{cfg.stem}.gp").read_text()
        assert "plot " in gp

    def test_same_seed_byte_identical(self, tmp_path):
        a = ExperimentConfig(name="trace", kappa=2.0, dt=1e-2,
                             out_dir=str(tmp_path / "a"))
        b = ExperimentConfig(name="trace", kappa=2.0, dt=1e-2,
                             out_dir=str(tmp_path / "b"))
        ra, rb = run_sle_trace(a), run_sle_trace(b)
        assert ra.csv_path.read_bytes() == rb.csv_path.read_bytes()

    def test_seed_changes_output(self, tmp_path):
        a = ExperimentConfig(name="trace", kappa=2.0, dt=1e-2, seed=0,
                             out_dir=str(tmp_path))
        b = ExperimentConfig(name="trace", kappa=2.0, dt=1e-2, seed=1,
                             out_dir=str(tmp_path))
        assert run_sle_trace(a).csv_path.read_bytes() != \
            run_sle_trace(b).csv_path.read_bytes()


@pytest.fixture(scope="module")
def psivar_result(tmp_path_factory):
    out = tmp_path_factory.mktemp("psivar")
    cfg = ExperimentConfig(name="psivar", kappa=2.0, dt=1e-3, n_paths=8,
                           seed=0, out_dir=str(out))
    return cfg, experiment_psi_variation(cfg, ps=(1.0, 1.6))


class TestPsiVariation:
    def test_rejects(self, tmp_path):
        with pytest.raises(ValueError, match="kappa"):
            experiment_psi_variation(ExperimentConfig(
                name="psivar", kappa=8.0, out_dir=str(tmp_path)))
        # distortion power must exceed the variation order
        with pytest.raises(ValueError, match="q > d"):
            experiment_psi_variation(ExperimentConfig(
                name="psivar", kappa=2.0, dt=1e-2, n_paths=1,
                tolerances={"psi_q": 1.2}, out_dir=str(tmp_path)))

    def test_meshes_nested(self, psivar_result):
        _, result = psivar_result
        assert result.curves[0].meshes == (125, 250, 500, 1000)

    def test_low_power_grows(self, psivar_result):
        # d = 1.25 at kappa = 2: the p = 1 sums must keep growing
        _, result = psivar_result
        assert result.curve(1.0).total_ratio >= 1.4

    def test_high_power_stabilises(self, psivar_result):
        _, result = psivar_result
        assert result.curve(1.6).total_ratio <= 1.2

    def test_distorted_functional_stable(self, psivar_result):
        _, result = psivar_result
        c = result.curve(1.25, 2.0)
        assert all(np.isfinite(c.medians)) and min(c.medians) > 0.0
        assert c.total_ratio <= 1.2

    def test_curve_lookup_missing(self, psivar_result):
        _, result = psivar_result
        with pytest.raises(KeyError):
            result.curve(3.0)

    def test_csv_shape(self, psivar_result):
        _, result = psivar_result
        lines = result.csv_path.read_text().splitlines()
        assert lines[0] == ",".join(sio.VARIATION_HEADER)
        assert len(lines) == 1 + 3 * 4


@pytest.fixture(scope="module")
def holder_bracket(tmp_path_factory):
    out = tmp_path_factory.mktemp("holder6")
    cfg = ExperimentConfig(name="holder", kappa=6.0, dt=1e-3, n_paths=6,
                           seed=0, out_dir=str(out))
    return cfg, experiment_holder_modulus(cfg, n_refine=2)


@pytest.fixture(scope="module")
def holder_log(tmp_path_factory):
    out = tmp_path_factory.mktemp("holder8")
    cfg = ExperimentConfig(name="holder", kappa=8.0, dt=5e-4, n_paths=4,
                           seed=0, out_dir=str(out))
    return cfg, experiment_holder_modulus(cfg)


class TestHolderModulus:
    def test_rejects_nonpositive_kappa(self, tmp_path):
        with pytest.raises(ValueError, match="kappa"):
            experiment_holder_modulus(ExperimentConfig(
                name="holder", kappa=0.0, out_dir=str(tmp_path)))

    def test_bracket_mode(self, holder_bracket):
        _, result = holder_bracket
        assert result.mode == "bracket"
        assert len(result.brackets) == 3
        assert result.lag_deltas is None

    def test_bracket_alphas(self, holder_bracket):
        _, result = holder_bracket
        alphas = [b.alpha for b in result.brackets]
        a = holder_alpha(6.0)
        assert alphas == pytest.approx([a - 0.05, a, a + 0.05])

    def test_sup_monotone_in_alpha(self, holder_bracket):
        # shrinking phi (larger alpha) can only raise the ratio sup
        _, result = holder_bracket
        lo, mid, hi = result.brackets
        for j in range(len(lo.meshes)):
            assert lo.medians[j] < mid.medians[j] < hi.medians[j]
            assert lo.window_medians[j] < mid.window_medians[j] \
                < hi.window_medians[j]

    def test_full_sup_stable(self, holder_bracket):
        # the overall sup sits at pair separations of order one, so
        # refinement barely moves it for any of the three exponents
        _, result = holder_bracket
        for b in result.brackets:
            assert 0.9 <= b.total_ratio <= 1.2

    def test_window_spread_growth(self, holder_bracket):
        # mesh-scale pairs see the exponent margin: the inflated/deflated
        # spread grows like (mesh ratio)^(2 margin) = 4^0.1
        _, result = holder_bracket
        assert result.window_spread_growth == pytest.approx(4.0 ** 0.1, abs=0.1)

    def test_bracket_csvs(self, holder_bracket):
        cfg, result = holder_bracket
        lines = result.csv_path.read_text().splitlines()
        assert lines[0] == ",".join(sio.MODULUS_HEADER)
        assert len(lines) == 1 + 3 * 3
        window = result.csv_path.with_name(f"{cfg.stem}_window.csv")
        assert window.exists()
        meta = result.csv_path.with_suffix(".meta").read_text()
        assert "mode=bracket" in meta

    def test_log_only_mode(self, holder_log):
        _, result = holder_log
        assert result.mode == "log_only"
        assert result.brackets == ()
        assert np.all(np.diff(result.lag_deltas) > 0)
        assert result.lag_deltas.size > 10

    def test_log_only_slope(self, holder_log):
        # increments shrink with the lag, so the fitted slope against
        # log*(1/delta) is negative; the magnitude is scale-dependent
        _, result = holder_log
        assert result.slope_mean < -0.3
        assert result.slope_sd > 0.0
        assert np.isfinite(result.slope_ci95)

    def test_log_only_csv(self, holder_log):
        cfg, result = holder_log
        lines = result.csv_path.read_text().splitlines()
        assert lines[0] == ",".join(sio.LAG_HEADER)
        assert len(lines) == 1 + cfg.n_paths * result.lag_deltas.size
        meta = result.csv_path.with_suffix(".meta").read_text()
        assert "mode=log_only" in meta


@pytest.fixture(scope="module")
def unifmap_control(tmp_path_factory):
    out = tmp_path_factory.mktemp("unifmap0")
    cfg = ExperimentConfig(name="unifmap", kappa=0.0, dt=2e-3, n_paths=1,
                           seed=0, out_dir=str(out))
    return cfg, experiment_unif_map_scaling(cfg, n_v=5)


@pytest.fixture(scope="module")
def unifmap_rough(tmp_path_factory):
    out = tmp_path_factory.mktemp("unifmap12")
    cfg = ExperimentConfig(name="unifmap", kappa=12.0, dt=1e-3, n_paths=2,
                           seed=0, out_dir=str(out))
    return cfg, experiment_unif_map_scaling(cfg, n_v=5)


class TestUnifMapScaling:
    def test_rejects_interior_kappa(self, tmp_path):
        with pytest.raises(ValueError, match="kappa >= 8"):
            experiment_unif_map_scaling(ExperimentConfig(
                name="unifmap", kappa=3.0, out_dir=str(tmp_path)))

    def test_flat_control_matches_closed_form(self, unifmap_control):
        # sup over (t, u) of |fhat'| at height v is (v^2 + T)^(1/4) / sqrt(v)
        _, result = unifmap_control
        assert result.control_rel_err <= 1e-3
        assert result.slope_mean == pytest.approx(-0.5, abs=0.05)
        assert result.predicted_power == -0.5

    def test_flat_control_envelope_fit(self, unifmap_control):
        # the coarse envelope has exact power -1; checks the fitter
        _, result = unifmap_control
        assert result.envelope_fit_power == pytest.approx(-1.0, abs=0.05)

    def test_flat_control_deterministic(self, unifmap_control, tmp_path):
        cfg, result = unifmap_control
        cfg2 = ExperimentConfig(name="unifmap", kappa=0.0, dt=2e-3, n_paths=1,
                                seed=0, out_dir=str(tmp_path))
        result2 = experiment_unif_map_scaling(cfg2, n_v=5)
        assert result.csv_path.read_bytes() == result2.csv_path.read_bytes()

    def test_rough_sup_grows_as_v_shrinks(self, unifmap_rough):
        _, result = unifmap_rough
        assert np.all(np.diff(result.sup_median) > 0)

    def test_rough_slope(self, unifmap_rough):
        _, result = unifmap_rough
        assert result.slope_mean < -0.4
        a = holder_alpha(12.0)
        assert result.predicted_power == pytest.approx(2.0 * a - 1.0)

    def test_rough_horizon_doubling(self, unifmap_rough):
        # a longer horizon only enlarges the scanned set
        _, result = unifmap_rough
        assert result.t_doubling_ok

    def test_csv_shape(self, unifmap_rough):
        cfg, result = unifmap_rough
        lines = result.csv_path.read_text().splitlines()
        assert lines[0] == ",".join(sio.SUPSCALE_HEADER)
        assert len(lines) == 1 + cfg.n_paths * result.vs.size


@pytest.fixture(scope="module")
def suite_low(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite2")
    cfg = ExperimentConfig(name="bessel", kappa=2.0, n_paths=3000, seed=0,
                           out_dir=str(out))
    return cfg, experiment_bessel_suite(cfg)


@pytest.fixture(scope="module")
def suite_critical(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite8")
    cfg = ExperimentConfig(name="bessel", kappa=8.0, n_paths=4000, seed=0,
                           tolerances={"density_gap": 0.15}, out_dir=str(out))
    return cfg, experiment_bessel_suite(cfg)


class TestBesselSuite:
    def test_rejects_nonpositive_kappa(self, tmp_path):
        with pytest.raises(ValueError, match="kappa"):
            experiment_bessel_suite(ExperimentConfig(
                name="bessel", kappa=0.0, out_dir=str(tmp_path)))

    def test_low_kappa_rows(self, suite_low):
        # nu < 0 at kappa = 2: no stationary density; nu~ > 0: hitting row
        _, result = suite_low
        assert [r.metric for r in result.rows] == [
            "martingale_mean", "clock_ks", "tail_slope", "hitting_prob"]

    def test_low_kappa_all_ok(self, suite_low):
        _, result = suite_low
        for r in result.rows:
            assert r.ok, f"{r.metric}: {r.value} not in [{r.lo}, {r.hi}]"
        assert result.all_ok

    def test_critical_kappa_rows(self, suite_critical):
        # nu = 0 at kappa = 8: density row appears, hitting row drops out
        _, result = suite_critical
        assert [r.metric for r in result.rows] == [
            "density_sup_gap", "martingale_mean", "clock_ks", "tail_slope"]
        assert result.all_ok

    def test_suite_csv(self, suite_low):
        _, result = suite_low
        lines = result.csv_path.read_text().splitlines()
        assert lines[0] == ",".join(sio.SUITE_HEADER)
        assert len(lines) == 1 + len(result.rows)
        assert all(line.endswith((",1", ",0")) for line in lines[1:])


class TestCli:
    def test_unknown_verb(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])

    def test_exponents_grid(self, tmp_path, capsys):
        assert main(["exponents", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "log-only boundary" in out
        lines = (tmp_path / "exponents.csv").read_text().splitlines()
        assert lines[0] == ",".join(sio.EXPONENT_HEADER)
        assert len(lines) == 10

    def test_exponents_single(self, tmp_path, capsys):
        assert main(["exponents", "--kappa", "2", "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "exponents.csv").read_text().splitlines()
        assert len(lines) == 2

    def test_trace_verb(self, tmp_path, capsys):
        rc = main(["trace", "--kappa", "0", "--dt", "0.001",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "trace_kappa0_seed0.csv").exists()
        assert "max jump" in capsys.readouterr().out

    def test_psivar_verb(self, tmp_path, capsys):
        rc = main(["psivar", "--kappa", "2", "--dt", "0.01", "--n", "4",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert "total ratio" in capsys.readouterr().out

    def test_holder_verb(self, tmp_path, capsys):
        rc = main(["holder", "--kappa", "8", "--dt", "0.005", "--n", "3",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert "log-only fit slope" in capsys.readouterr().out

    def test_unifmap_verb(self, tmp_path, capsys):
        rc = main(["unifmap", "--kappa", "0", "--dt", "0.005",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert "control rel err" in capsys.readouterr().out

    def test_bessel_verb(self, tmp_path, capsys):
        rc = main(["bessel", "--n", "3000", "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "clock_ks" in out and "FAIL" not in out

    def test_gridsum_verb(self, tmp_path, capsys):
        assert main(["gridsum", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "worst sum/predicted band" in out
        assert (tmp_path / "gridsum.csv").exists()

    def test_witness_verb(self, tmp_path, capsys):
        rc = main(["witness", "--n", "2", "--out", str(tmp_path)])
        assert rc == 0
        assert "2/2 events certified" in capsys.readouterr().out

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("name=trace\nkappa=0\ndt=0.01\nseed=5\n")
        rc = main(["trace", "--config", str(cfg), "--seed", "7",
                   "--out", str(tmp_path)])
        assert rc == 0
        # the command-line flag wins over the file entry
        assert (tmp_path / "trace_kappa0_seed7.csv").exists()
        assert not (tmp_path / "trace_kappa0_seed5.csv").exists()

    def test_config_file_name_mismatch(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("name=trace\n")
        with pytest.raises(ValueError, match="config file is for"):
            main(["psivar", "--config", str(cfg), "--out", str(tmp_path)])

    def test_config_file_tolerances(self, tmp_path):
        # tol_ entries reach the experiment: an unusable distortion
        # power is rejected inside the driver
        cfg = tmp_path / "run.cfg"
        cfg.write_text("name=psivar\nkappa=2\ndt=0.01\nn=1\ntol_psi_q=1.2\n")
        with pytest.raises(ValueError, match="q > d"):
            main(["psivar", "--config", str(cfg), "--out", str(tmp_path)])
