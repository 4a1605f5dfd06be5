import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specfill.kernel import TruncationWarning, resolve_kernel, synthesize_taps
from specfill.recovery import (
    CSV_COLUMNS,
    GridFallbackWarning,
    convergence_sweep,
    recover_center,
    robustness_bound,
    spectral_error,
)
from specfill.signals import (
    TimeSignal,
    add_spectral_noise,
    from_profile,
    inverse_transform,
    make_bandlimited,
    make_power_decay,
)
from specfill.weights import PI, make_power_weight

POWER = make_power_weight(1.0, math.inf)


@pytest.fixture(scope="module")
def spec2():
    return resolve_kernel(POWER, 2)


@pytest.fixture(scope="module")
def taps2(spec2):
    with pytest.warns(TruncationWarning):
        return synthesize_taps(spec2, 64)


def flat_spectrum(grid_size=2 ** 16):
    return from_profile(
        lambda om: np.ones_like(np.asarray(om), dtype=complex),
        grid_size, label="flat")


class TestRecoverCenter:
    def test_zero_signal(self, taps2):
        zero = TimeSignal(half_length=128, samples=np.zeros(257),
                          truth_center=0.0)
        assert recover_center(taps2, zero) == 0.0

    def test_shifted_delta_picks_one_tap(self, taps2):
        samples = np.zeros(257)
        samples[128 + 5] = 1.0
        delta = TimeSignal(half_length=128, samples=samples,
                           truth_center=0.0)
        assert recover_center(taps2, delta) == taps2.taps[64 + 5]

    def test_center_sample_never_leaks(self, taps2):
        samples = np.zeros(257)
        samples[128] = 1e12
        spiked = TimeSignal(half_length=128, samples=samples,
                            truth_center=1e12)
        assert recover_center(taps2, spiked) == 0.0

    def test_window_mismatch_rejected(self, taps2):
        short = TimeSignal(half_length=32, samples=np.zeros(65),
                           truth_center=0.0)
        with pytest.raises(ValueError):
            recover_center(taps2, short)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=-10, max_value=10),
           st.floats(min_value=-10, max_value=10))
    def test_linearity(self, taps2, alpha, beta):
        rng = np.random.Generator(np.random.Philox(42))
        x = rng.normal(size=129)
        y = rng.normal(size=129)
        sig_x = TimeSignal(half_length=64, samples=x, truth_center=x[64])
        sig_y = TimeSignal(half_length=64, samples=y, truth_center=y[64])
        combined = TimeSignal(half_length=64, samples=alpha * x + beta * y,
                              truth_center=0.0)
        lhs = recover_center(taps2, combined)
        rhs = (alpha * recover_center(taps2, sig_x)
               + beta * recover_center(taps2, sig_y))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)

    def test_in_band_recovery_accuracy(self, spec2):
        signal = make_bandlimited(PI / 2, 7, 2 ** 16)
        with pytest.warns(TruncationWarning):
            taps = synthesize_taps(spec2, 512)
        ts = inverse_transform(signal, 4095)
        estimate = recover_center(taps, ts)
        assert abs(estimate - ts.truth_center) < 1e-6


class TestSpectralError:
    def test_in_band_support_exact_zero(self, spec2):
        signal = make_bandlimited(PI / 2, 7, 2 ** 14)
        report = spectral_error(spec2, signal)
        assert report.I1 == 0.0
        assert report.I2 == 0.0
        assert report.I3 == 0.0
        assert report.spectral_bound == 0.0

    def test_in_band_any_n(self):
        signal = make_bandlimited(PI / 2, 7, 2 ** 14)
        for n in (2, 3, 17, 64):
            spec = resolve_kernel(POWER, n)
            assert spectral_error(spec, signal).spectral_bound == 0.0

    def test_inner_band_integrand_identically_zero(self, spec2):
        # (transfer - 1) X vanishes pointwise on the whole inner band, so
        # the first decomposition term is exactly zero, not just small.
        from specfill.kernel import eval_transfer
        from specfill.signals import grid_omegas

        signal = make_power_decay(1.0, 3, 2 ** 14)
        om = grid_omegas(2 ** 14)
        inner = np.abs(om) < PI - 1.0 / spec2.n
        integrand = (eval_transfer(spec2, om[inner]) - 1.0) \
            * signal.values[inner]
        assert np.all(integrand == 0.0)
        assert spectral_error(spec2, signal).I1 == 0.0

    def test_flat_spectrum_bound_is_one(self, spec2):
        # (transfer - 1) has total L1 mass exactly 2 pi for |X| == 1: the
        # middle band contributes 2 (pi - 1/n) of companion mass by the
        # normalization identity plus the band lengths.
        report = spectral_error(spec2, flat_spectrum())
        assert report.spectral_bound == pytest.approx(1.0, abs=1e-9)

    def test_flat_spectrum_bound_constant_in_n(self):
        flat = flat_spectrum()
        bounds = [spectral_error(resolve_kernel(POWER, n), flat).spectral_bound
                  for n in (2, 8, 32)]
        assert bounds == pytest.approx([1.0, 1.0, 1.0], abs=1e-9)

    def test_power_decay_bound_decreasing(self):
        signal = make_power_decay(1.0, 3, 2 ** 16)
        bounds = [spectral_error(resolve_kernel(POWER, n),
                                 signal).spectral_bound
                  for n in (2, 4, 8, 16, 32)]
        assert all(b < a for a, b in zip(bounds, bounds[1:]))

    def test_decomposition_sums_to_bound(self):
        signal = make_power_decay(1.0, 3, 2 ** 16)
        report = spectral_error(resolve_kernel(POWER, 4), signal)
        recomposed = (report.I1 + report.I2 + report.I3) / (2 * PI)
        assert report.spectral_bound == pytest.approx(recomposed, abs=1e-10)
        assert report.I3 < report.I2

    def test_grid_fallback_warns_and_computes(self, spec2):
        clean = make_bandlimited(PI / 2, 7, 2 ** 16)
        noisy = add_spectral_noise(clean, 1e-3, 5)
        assert noisy.profile is None
        with pytest.warns(GridFallbackWarning):
            report = spectral_error(spec2, noisy)
        assert report.spectral_bound > 0.0
        assert math.isfinite(report.spectral_bound)


class TestRobustnessBound:
    def test_no_noise_reduces_to_epsilon(self):
        assert robustness_bound(0.01, 0.0, 1e6) == 0.01

    def test_direct_formula(self):
        assert robustness_bound(0.0, 0.3, 2.0) == pytest.approx(0.9)

    def test_large_kappa_example(self):
        value = robustness_bound(0.01, 1e-9, 4.7e6)
        assert value == pytest.approx(0.01 + 1e-9 * (4.7e6 + 1), rel=1e-12)
        assert value == pytest.approx(0.0147, abs=2e-4)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            robustness_bound(-0.1, 0.0, 1.0)
        with pytest.raises(ValueError):
            robustness_bound(0.0, -1e-9, 1.0)


class TestConvergenceSweep:
    def test_band_limited_rows_zero_bound(self):
        signal = make_bandlimited(PI / 2, 7, 2 ** 14)
        reports = convergence_sweep(POWER, signal, [2, 4], 64, 256,
                                    base_seed=7)
        assert [r.n for r in reports] == [2, 4]
        assert all(r.spectral_bound == 0.0 for r in reports)
        assert all(r.seed == 7 for r in reports)

    def test_bound_soundness_with_truncation_slack(self):
        signal = make_power_decay(1.0, 3, 2 ** 14)
        reports = convergence_sweep(POWER, signal, [2, 4], 128, 256,
                                    measure_truncation=True, base_seed=3)
        for r in reports:
            assert r.truncation_slack is not None
            assert r.abs_error <= r.spectral_bound + r.truncation_slack

    def test_noise_rows_carry_bound_and_respect_it(self):
        signal = make_bandlimited(PI / 2, 7, 2 ** 14)
        reports = convergence_sweep(
            POWER, signal, [4], 128, 512,
            noise_sigma=1e-6, noise_seeds=tuple(range(10)))
        assert len(reports) == 10
        assert [r.seed for r in reports] == list(range(10))
        for r in reports:
            assert r.robust_bound is not None
            assert r.abs_error <= r.robust_bound

    def test_thread_pool_matches_serial(self):
        signal = make_power_decay(1.0, 3, 2 ** 14)
        serial = convergence_sweep(POWER, signal, [2, 3, 4], 32, 256,
                                   base_seed=3)
        pooled = convergence_sweep(POWER, signal, [2, 3, 4], 32, 256,
                                   base_seed=3, threads=3)
        assert [r.csv_row() for r in serial] == [r.csv_row() for r in pooled]

    def test_unsorted_n_rejected(self):
        signal = make_bandlimited(PI / 2, 7, 2 ** 14)
        with pytest.raises(ValueError):
            convergence_sweep(POWER, signal, [4, 2], 32, 256)

    def test_errors_tagged_with_n(self):
        signal = make_bandlimited(PI / 2, 7, 2 ** 14)
        # T > S breaks recover_center's precondition inside the cell.
        with pytest.raises(RuntimeError, match="n=2"):
            convergence_sweep(POWER, signal, [2], 512, 256)


class TestCsvRow:
    def test_column_count_and_blanks(self):
        signal = make_bandlimited(PI / 2, 7, 2 ** 14)
        report = spectral_error(resolve_kernel(POWER, 2), signal)
        row = report.csv_row()
        assert len(row) == len(CSV_COLUMNS)
        # Unset optional fields serialize as empty cells.
        assert row[CSV_COLUMNS.index("estimate")] == ""
        assert row[CSV_COLUMNS.index("robust_bound")] == ""
        assert row[CSV_COLUMNS.index("n")] == "2"
