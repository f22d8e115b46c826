"""Sweep engine, report contract, traces, and config loading."""

from pathlib import Path

import numpy as np
import pytest

from mtifp import harness
from mtifp.harness import (ConfigError, ConvergenceReport, ReportRow,
                           TAU_TABLE, compute_rates, dominant_period,
                           emit_traces, error_norm, linear_reference,
                           load_config, parse_report, render_report,
                           run_spatial_sweep, run_sweep_spec,
                           run_temporal_sweep, write_report)
from mtifp.oracle import ReferenceSolution
from mtifp.solver import DivergenceError, SolverConfig, init, propagate
from mtifp.spectral import FieldHat, make_grid, resample, to_spectral


def inline_reference(eps, *, n=32, tau=5e-5, t_final=0.2, lam=1.0):
    cfg = SolverConfig(n=n, eps=eps, tau=tau, t_final=t_final, lam=lam)
    state = propagate(cfg)
    return ReferenceSolution(u=state.u, u_dot=state.u_dot, eps=eps,
                             tau_ref=tau, t_final=t_final,
                             path=Path("<inline>"))


class TestRates:
    def test_spatial_rates_recompute(self):
        errors = (8e-2, 2e-2, 5e-3)
        rates = compute_rates(errors, "spatial")
        assert len(rates) == 2
        for r in rates:
            assert abs(r - 2.0) <= 1e-12

    def test_temporal_base_four(self):
        errors = (1e-2, 1e-2 / 16.0)
        (rate,) = compute_rates(errors, "temporal")
        assert abs(rate - 2.0) <= 1e-12

    def test_none_poisons_adjacent_rates(self):
        rates = compute_rates((1e-1, None, 1e-3), "spatial")
        assert rates == (None, None)


class TestUniformRow:
    def test_columnwise_max(self):
        rows = [ReportRow(0.5, (1.0, 0.1), (None,)),
                ReportRow(0.25, (0.5, 0.2), (None,))]
        row, rates = harness._uniform(rows, "spatial")
        assert row == (1.0, 0.2)
        assert abs(rates[0] - np.log2(5.0)) <= 1e-12

    def test_failed_cell_poisons_column(self):
        rows = [ReportRow(0.5, (1.0, 0.1), (None,)),
                ReportRow(0.25, (0.5, None), (None,))]
        row, rates = harness._uniform(rows, "spatial")
        assert row == (1.0, None)
        assert rates == (None,)


class TestErrorNorm:
    def test_identical_state_gives_zero(self):
        cfg = SolverConfig(n=64, eps=0.5, tau=0.1, t_final=1.0)
        state = init(cfg)
        ref = ReferenceSolution(u=state.u, u_dot=state.u_dot, eps=0.5,
                                tau_ref=0.0, t_final=0.0, path=Path("."))
        assert error_norm(state, ref) == 0.0

    def test_coarse_sampling_of_band_limited_field(self):
        # a field supported on low modes loses nothing on the coarse grid
        fine = make_grid(-16.0, 16.0, 128)
        u = np.cos(2.0 * np.pi * fine.x / 32.0) * (1.0 + 0.5j)
        uh = to_spectral(fine, u)
        ref = ReferenceSolution(u=uh, u_dot=uh, eps=0.5, tau_ref=0.0,
                                t_final=0.0, path=Path("."))
        coarse = resample(uh, 32)
        run = harness.SolverState(u=coarse, u_dot=coarse, step_index=0,
                                  time=0.0)
        assert error_norm(run, ref) <= 1e-12

    def test_domain_normalization(self):
        # constant unit difference: H2 norm equals sqrt(b - a)
        g = make_grid(-16.0, 16.0, 32)
        coeffs = np.zeros(32, dtype=complex)
        coeffs[16] = 1.0                        # logical l = 0
        run = harness.SolverState(u=FieldHat(g, coeffs),
                                  u_dot=FieldHat(g, coeffs),
                                  step_index=0, time=0.0)
        zeros = FieldHat(g, np.zeros(32, dtype=complex))
        ref = ReferenceSolution(u=zeros, u_dot=zeros, eps=0.5, tau_ref=0.0,
                                t_final=0.0, path=Path("."))
        assert error_norm(run, ref) == pytest.approx(np.sqrt(32.0), rel=1e-13)

    def test_reference_tail_folds_onto_alias(self):
        # nodal comparison: reference mass the run grid cannot represent
        # aliases down instead of being counted at its own mode weight
        fine = make_grid(-16.0, 16.0, 128)
        coeffs = np.zeros(128, dtype=complex)
        coeffs[64 + 40] = 1.0                   # logical l = 40
        ref_u = FieldHat(fine, coeffs)
        ref = ReferenceSolution(u=ref_u, u_dot=ref_u, eps=0.5, tau_ref=0.0,
                                t_final=0.0, path=Path("."))
        coarse = make_grid(-16.0, 16.0, 32)
        zeros = FieldHat(coarse, np.zeros(32, dtype=complex))
        run = harness.SolverState(u=zeros, u_dot=zeros, step_index=0,
                                  time=0.0)
        mu = 2.0 * np.pi * 8 / 32.0             # alias of l = 40 is l = 8
        want = np.sqrt(32.0 * (1.0 + mu**2 + mu**4))
        assert error_norm(run, ref) == pytest.approx(want, rel=1e-12)

    def test_mismatched_domain_rejected(self):
        g1 = make_grid(-16.0, 16.0, 32)
        g2 = make_grid(-8.0, 8.0, 32)
        z1 = FieldHat(g1, np.zeros(32, dtype=np.complex128))
        z2 = FieldHat(g2, np.zeros(32, dtype=np.complex128))
        run = harness.SolverState(u=z1, u_dot=z1, step_index=0, time=0.0)
        ref = ReferenceSolution(u=z2, u_dot=z2, eps=0.5, tau_ref=0.0,
                                t_final=0.0, path=Path("."))
        with pytest.raises(ValueError, match="incompatible grids"):
            error_norm(run, ref)

    def test_non_dividing_resolution_rejected(self):
        g1 = make_grid(-16.0, 16.0, 48)
        g2 = make_grid(-16.0, 16.0, 64)
        z1 = FieldHat(g1, np.zeros(48, dtype=np.complex128))
        z2 = FieldHat(g2, np.zeros(64, dtype=np.complex128))
        run = harness.SolverState(u=z1, u_dot=z1, step_index=0, time=0.0)
        ref = ReferenceSolution(u=z2, u_dot=z2, eps=0.5, tau_ref=0.0,
                                t_final=0.0, path=Path("."))
        with pytest.raises(ValueError, match="does not divide"):
            error_norm(run, ref)


class TestSpatialSweep:
    def test_linear_cells_reach_floor(self):
        # lam = 0: stepping is exact in time, so cells show pure spatial
        # truncation of the initial data
        report = run_spatial_sweep(
            eps_values=[0.5], h_values=(1.0, 0.5, 0.25), tau=0.02,
            t_final=0.1, lam=0.0,
            reference=lambda eps: linear_reference(eps, t_final=0.1))
        (row,) = report.rows
        assert row.errors[0] > row.errors[1] > row.errors[2]
        assert row.errors[2] <= 1e-10
        assert report.axis == "spatial"
        meta = dict(report.metadata)
        assert meta["fixed_tau"] == repr(0.02)
        assert meta["reference"] == "custom provider"


class TestTemporalSweep:
    def test_second_order_rates(self):
        report = run_temporal_sweep(
            eps_values=[0.5], tau_values=(0.02, 0.005, 0.00125), h=1.0,
            t_final=0.2, reference=inline_reference, threads=2)
        (row,) = report.rows
        for rate in row.rates:
            assert 1.7 <= rate <= 2.3, f"rates {row.rates}"
        assert report.uniform_row == row.errors

    def test_failed_cell_recorded_not_raised(self, monkeypatch):
        real = propagate

        def flaky(config, observers=()):
            if config.tau == 0.005:
                raise DivergenceError(3, 3 * config.tau, float("inf"))
            return real(config, observers=observers)

        monkeypatch.setattr(harness, "propagate", flaky)
        report = run_temporal_sweep(
            eps_values=[0.5, 0.25], tau_values=(0.02, 0.005), h=1.0,
            t_final=0.2, reference=inline_reference)
        for row in report.rows:
            assert row.errors[1] is None
            assert row.errors[0] is not None
            assert row.rates == (None,)
        assert report.uniform_row[1] is None
        assert len(report.failures) == 2
        assert all("diverged" in msg for _, _, msg in report.failures)
        text = render_report(report)
        assert ",nan," in text
        assert "# failed,0.5 0.005 " in text
        again = parse_report(text)
        assert again.rows == report.rows
        assert again.failures == report.failures


class TestReportContract:
    def small_report(self):
        return run_temporal_sweep(
            eps_values=[0.5, 0.25], tau_values=(0.02, 0.005), h=1.0,
            t_final=0.2, reference=inline_reference)

    def test_round_trip_is_identity(self, tmp_path):
        report = self.small_report()
        text = render_report(report)
        again = parse_report(text)
        assert again.resolutions == report.resolutions
        assert again.rows == report.rows
        assert again.uniform_row == report.uniform_row
        assert again.uniform_rates == report.uniform_rates
        assert again.metadata == report.metadata
        assert render_report(again) == text
        path = write_report(report, tmp_path / "sweep" / "report.csv")
        assert path.read_text() == text

    def test_two_runs_identical_bytes(self):
        assert (render_report(self.small_report())
                == render_report(self.small_report()))

    def test_header_and_schema_lines(self):
        text = render_report(self.small_report())
        lines = text.splitlines()
        assert lines[0] == "# mti-fp report v1"
        assert "eps,resolution,error,rate" in lines
        data = [l for l in lines if not l.startswith("#")
                and l != "eps,resolution,error,rate"]
        # two eps rows plus the uniform row, two columns each
        assert len(data) == 6
        assert data[-2].startswith("uniform,")
        for line in data:
            parts = line.split(",")
            assert len(parts) == 4
            float(parts[1]), float(parts[2])

    def test_parse_rejects_foreign_text(self):
        with pytest.raises(ValueError, match="missing header"):
            parse_report("eps,resolution,error,rate\n")


class TestTraces:
    def test_zero_data_traces_zero(self, tmp_path):
        paths = emit_traces([0.5], tmp_path, tau=0.05, t_final=0.2, n=32,
                            initial_data="zero")
        trace = next(p for p in paths if p.name.startswith("trace"))
        rows = [l.split(",") for l in trace.read_text().splitlines()
                if not l.startswith("#") and l[0].isdigit()]
        assert len(rows) == 5  # initial state plus four steps
        times = [float(r[0]) for r in rows]
        assert times == pytest.approx([0.0, 0.05, 0.1, 0.15, 0.2])
        assert all(float(r[1]) == 0.0 and float(r[2]) == 0.0 for r in rows)

    def test_gaussian_starts_at_one(self, tmp_path):
        paths = emit_traces([0.5], tmp_path, tau=0.1, t_final=0.1, n=32)
        trace = next(p for p in paths if p.name.startswith("trace"))
        first = [l for l in trace.read_text().splitlines()
                 if not l.startswith("#")][1]
        _, re_u, im_u = first.split(",")
        assert abs(float(re_u) - 1.0) <= 1e-12  # profile peak at x = 0
        assert abs(float(im_u)) <= 1e-12

    def test_snapshots_and_plot_script(self, tmp_path):
        paths = emit_traces([0.5], tmp_path, tau=0.05, t_final=0.2, n=32,
                            snapshots=2)
        names = {p.name for p in paths}
        assert "plot_traces.py" in names
        assert any(n.startswith("snapshots_eps") for n in names)
        snap = next(p for p in paths if p.name.startswith("snapshots"))
        body = snap.read_text().splitlines()
        assert body[0] == "# mti-fp snapshots v1"
        assert body[1] == "t,x,re_u,im_u"


class TestDominantPeriod:
    def test_exact_on_cosine(self):
        t = np.linspace(0.0, 2.0, 1001)
        values = np.cos(2.0 * np.pi * t / 0.5)
        assert dominant_period(t, values) == pytest.approx(0.5)

    def test_no_crossing_raises(self):
        t = np.linspace(0.0, 1.0, 100)
        with pytest.raises(ValueError, match="no zero crossings"):
            dominant_period(t, np.ones_like(t))


def write_config(tmp_path, text):
    path = tmp_path / "config.yaml"
    path.write_text(text)
    return path


class TestConfig:
    def test_preset_expansion(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "preset: table2-lite\n"))
        spec = cfg.sweep
        assert spec.axis == "temporal"
        assert len(spec.eps_values) == 4
        assert spec.resolutions == TAU_TABLE[:5]
        assert spec.fixed == 0.125

    def test_explicit_keys_override_preset(self, tmp_path):
        cfg = load_config(write_config(tmp_path, (
            "preset: table2-lite\n"
            "sweep:\n  eps: [0.5]\n  tau_values: [0.02, 0.005]\n"
            "  h: 1.0\n  t_final: 0.2\n")))
        spec = cfg.sweep
        assert spec.eps_values == (0.5,)
        assert spec.resolutions == (0.02, 0.005)
        assert spec.fixed == 1.0

    def test_solver_section_round_trip(self, tmp_path):
        cfg = load_config(write_config(tmp_path, (
            "solver:\n  eps: 0.25\n  tau: 0.01\n  grid_n: 64\n"
            "  lambda: -1\n  filter: unfiltered\n  dealias: false\n"
            "threads: 2\nout: results\n")))
        s = cfg.solver
        assert (s.eps, s.tau, s.n, s.lam) == (0.25, 0.01, 64, -1.0)
        assert s.filter_kind == "unfiltered"
        assert s.dealias is False
        assert cfg.threads == 2
        assert cfg.out == Path("results")

    @pytest.mark.parametrize("text,needle", [
        ("presets: table2\n", "unknown key"),
        ("preset: table9\n", "unknown preset"),
        ("solver:\n  epsilon: 0.5\n", "solver"),
        ("sweep:\n  axis: sideways\n", "sweep.axis"),
        ("sweep:\n  axis: temporal\n  h_values: [1.0]\n", "not valid"),
        ("sweep:\n  axis: spatial\n  tau: 0.3\n", "does not divide"),
        ("sweep:\n  axis: spatial\n  h_values: [0.3]\n  tau: 0.1\n",
         "h = 0.3"),
        ("sweep:\n  axis: temporal\n  tau_values: [0.3]\n", "0.3 does not"),
        ("sweep:\n  axis: temporal\n  eps: [1.5]\n", r"eps\[0\]"),
        ("threads: none\n", "threads"),
        ("- a\n- b\n", "mapping"),
    ])
    def test_rejections_carry_key_paths(self, tmp_path, text, needle):
        with pytest.raises(ConfigError, match=needle):
            load_config(write_config(tmp_path, text))

    def test_defocusing_sweep_end_to_end(self, tmp_path):
        cfg = load_config(write_config(tmp_path, (
            "sweep:\n  axis: temporal\n  eps: [0.5]\n"
            "  tau_values: [0.02, 0.005]\n  h: 1.0\n  t_final: 0.2\n"
            "  lambda: -1\n")))
        assert cfg.sweep.lam == -1.0
        report = run_sweep_spec(
            cfg.sweep,
            reference=lambda eps: inline_reference(eps, lam=-1.0))
        (row,) = report.rows
        assert all(e is not None and np.isfinite(e) for e in row.errors)
        assert row.errors[1] < row.errors[0]
        assert "lam=-1.0" in dict(report.metadata)["scenario"]
