"""Applying recovering kernels and verifying their error guarantees.

The estimate of the missing center value is the tap/sample dot product with
the center structurally excluded.  Its spectral error bound is the L1 norm
of (transfer - 1) X over the circle, split into the three bands where the
transfer function is 1 (contributes nothing), -W, and 0; the noisy-input
bound adds sigma (kappa + 1) on top.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._quadrature import QuadratureError, adaptive_quad
from .kernel import KernelSpec, KernelTaps, resolve_kernel, synthesize_taps
from .signals import (
    SpectralSignal,
    TimeSignal,
    add_spectral_noise,
    grid_omegas,
    inverse_transform,
)
from .weights import PI, WeightSpec, eval_companion, gap_from_u, u_from_omega


class GridFallbackWarning(UserWarning):
    """A sub-grid band was integrated from the nearest grid sample."""


#: Column order of the CSV serialization of a report row.
CSV_COLUMNS = ("n", "epsilon_n", "kappa", "estimate", "truth", "abs_error",
               "spectral_bound", "I2", "I3", "robust_bound", "zero_residual",
               "T", "S", "seed")


@dataclass(frozen=True)
class RecoveryReport:
    """One recovery run: estimate, truth, and the spectral error split.

    ``spectral_bound`` equals (I1 + I2 + I3) / 2 pi and upper-bounds the
    recovery error of the untruncated kernel; ``truncation_slack`` estimates
    what finite tap/window truncation added on top.  ``robust_bound`` is
    epsilon_est + sigma (kappa + 1) when noise parameters were supplied.
    """

    n: int
    epsilon_n: float
    kappa: float
    I1: float
    I2: float
    I3: float
    spectral_bound: float
    estimate: float | None = None
    truth: float | None = None
    abs_error: float | None = None
    robust_bound: float | None = None
    zero_residual: float | None = None
    tap_half_length: int | None = None
    signal_half_length: int | None = None
    seed: int | None = None
    truncation_slack: float | None = None

    def csv_row(self) -> list[str]:
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return repr(float(x))
            return str(x)

        return [fmt(x) for x in (
            self.n, self.epsilon_n, self.kappa, self.estimate, self.truth,
            self.abs_error, self.spectral_bound, self.I2, self.I3,
            self.robust_bound, self.zero_residual, self.tap_half_length,
            self.signal_half_length, self.seed)]


def recover_center(taps: KernelTaps, signal: TimeSignal) -> float:
    """Estimate the center value: sum of k(s) x(s) over 0 < |s| <= T.

    The center term is structurally excluded: the stored center tap is exact
    zero, asserted here before the dot product.
    """
    T = taps.half_length
    S = signal.half_length
    if T > S:
        raise ValueError(
            f"tap window T={T} exceeds signal window S={S}")
    if taps.taps[T] != 0.0:
        raise ValueError("center tap is nonzero; taps are corrupt")
    segment = signal.samples[S - T:S + T + 1]
    return float(np.dot(taps.taps, segment))


def robustness_bound(epsilon_est: float, sigma: float, kappa: float) -> float:
    """Noise-aware error bound: epsilon_est + sigma (kappa + 1)."""
    if epsilon_est < 0 or sigma < 0 or kappa < 0:
        raise ValueError("bound inputs must be nonnegative")
    return epsilon_est + sigma * (kappa + 1.0)


def _abs_profile(signal: SpectralSignal):
    profile = signal.profile

    def magnitude(omega):
        return np.abs(profile(np.asarray(omega, dtype=float)))

    return magnitude


def _band_l1_analytic(spec: KernelSpec, signal: SpectralSignal,
                      tol: float) -> tuple[float, float]:
    """(I2, I3) for one side of the spectrum from the analytic profile.

    I2 integrates |(-W - 1) X| over the middle band under the log-band
    substitution (W is analytic there; the substitution flattens its
    blow-up); I3 integrates |X| over the sub-grid outer band directly, which
    is harmless because X carries no singularity.
    """
    magnitude = _abs_profile(signal)
    beta = spec.weight.companion_power
    u_a = u_from_omega(PI - 1.0 / spec.n)
    u_b = math.log((2.0 * PI - spec.epsilon_n) / spec.epsilon_n)

    def mid_integrand(u):
        gap = gap_from_u(u)
        om = PI - gap
        gap_prod = gap * (2.0 * PI - gap)
        w_plus_one = gap_prod ** -beta + 1.0
        return w_plus_one * magnitude(om) * gap_prod / (2.0 * PI)

    bp = np.linspace(u_a, u_b, 33)[1:-1]
    i2 = adaptive_quad(mid_integrand, u_a, u_b, tol=tol, breakpoints=bp)

    def outer_integrand(gap):
        return magnitude(PI - np.asarray(gap))

    i3 = adaptive_quad(outer_integrand, 0.0, spec.epsilon_n, tol=tol)
    return i2, i3


def _band_l1_grid(spec: KernelSpec, signal: SpectralSignal,
                  tol: float) -> tuple[float, float]:
    """(I2, I3) for one side from grid samples, extending the nearest sample
    across the sub-grid tail; W is still treated analytically."""
    omegas = grid_omegas(signal.grid_size)
    absx = np.abs(signal.values)
    inner_edge = PI - 1.0 / spec.n
    outer_edge = PI - spec.epsilon_n
    on_band = (omegas >= inner_edge) & (omegas <= outer_edge)
    if not np.any(on_band):
        raise QuadratureError(
            f"no grid samples on the middle band for n={spec.n}; refine "
            f"the grid")
    warnings.warn(
        "spectrum has no analytic profile; sub-grid bands use the nearest "
        "grid sample", GridFallbackWarning, stacklevel=3)
    band_omegas = omegas[on_band]
    band_absx = absx[on_band]
    w_plus_one = eval_companion(spec.weight, band_omegas) + 1.0
    spacing = 2.0 * PI / signal.grid_size
    i2_resolved = float(np.sum(w_plus_one * band_absx) * spacing)
    # Sub-grid stretch between the last sample and the outer edge: the last
    # magnitude times the analytic companion mass plus the plain length.
    last_omega = band_omegas[-1]
    last_absx = float(band_absx[-1])
    u_lo = u_from_omega(last_omega)
    u_hi = math.log((2.0 * PI - spec.epsilon_n) / spec.epsilon_n)
    beta = spec.weight.companion_power

    def tail_integrand(u):
        gap_prod = gap_from_u(u) * (2.0 * PI - gap_from_u(u))
        return (gap_prod ** -beta + 1.0) * gap_prod / (2.0 * PI)

    tail_mass = adaptive_quad(tail_integrand, u_lo, u_hi, tol=tol)
    i2 = i2_resolved + last_absx * tail_mass
    i3 = last_absx * spec.epsilon_n
    return i2, i3


def spectral_error(spec: KernelSpec, signal: SpectralSignal,
                   *, tol: float = 1e-10) -> RecoveryReport:
    """Spectral L1 error of one kernel against one spectrum, band by band.

    I1 (inner band) vanishes identically because the transfer function is 1
    there; it is reported as exact zero.  I2 and I3 integrate
    |(transfer - 1) X| over the middle and outer bands, analytically when
    the spectrum carries its profile, otherwise from grid samples with the
    nearest sample extended across the sub-grid tail (flagged by
    GridFallbackWarning).  Declared band-limited spectra inside the inner
    band short-circuit to an exact zero bound.
    """
    i1 = 0.0
    inner_edge = PI - 1.0 / spec.n
    if (signal.omega_support is not None
            and signal.omega_support <= inner_edge):
        i2 = i3 = 0.0
    elif signal.profile is not None:
        half_i2, half_i3 = _band_l1_analytic(spec, signal, tol)
        i2, i3 = 2.0 * half_i2, 2.0 * half_i3
    else:
        half_i2, half_i3 = _band_l1_grid(spec, signal, tol)
        i2, i3 = 2.0 * half_i2, 2.0 * half_i3
    return RecoveryReport(
        n=spec.n, epsilon_n=spec.epsilon_n, kappa=spec.kappa,
        I1=i1, I2=i2, I3=i3,
        spectral_bound=(i1 + i2 + i3) / (2.0 * PI))


def _sweep_cell(weight: WeightSpec, signal: SpectralSignal, n: int,
                tap_half_length: int, signal_half_length: int,
                noise_sigma: float | None, noise_seeds: tuple[int, ...],
                measure_truncation: bool, base_seed: int | None,
                tol: float) -> list[RecoveryReport]:
    spec = resolve_kernel(weight, n)
    spectral = spectral_error(spec, signal, tol=tol)
    taps = synthesize_taps(spec, tap_half_length, tol=tol)
    taps_doubled = (synthesize_taps(spec, 2 * tap_half_length, tol=tol)
                    if measure_truncation else None)
    robust = None
    if noise_sigma is not None:
        robust = robustness_bound(spectral.spectral_bound, noise_sigma,
                                  spec.kappa)

    draws: list[tuple[int | None, SpectralSignal]]
    if noise_sigma is None:
        draws = [(base_seed, signal)]
    else:
        draws = [(s, add_spectral_noise(signal, noise_sigma, s))
                 for s in noise_seeds]

    reports = []
    for seed, spectrum in draws:
        time_sig = inverse_transform(spectrum, signal_half_length)
        estimate = recover_center(taps, time_sig)
        truth = time_sig.truth_center
        slack = None
        if measure_truncation:
            doubled = inverse_transform(spectrum, 2 * signal_half_length)
            est2 = recover_center(taps_doubled, doubled)
            # Geometric-tail estimate of the remaining truncation: the
            # doubling delta plus everything beyond, assuming at least
            # 2x decay per octave.
            slack = 2.0 * abs(est2 - estimate)
        reports.append(replace(
            spectral,
            estimate=estimate, truth=truth,
            abs_error=abs(truth - estimate),
            robust_bound=robust, zero_residual=taps.zero_residual,
            tap_half_length=tap_half_length,
            signal_half_length=signal_half_length,
            seed=seed, truncation_slack=slack))
    return reports


def convergence_sweep(weight: WeightSpec, signal: SpectralSignal,
                      n_values: list[int], tap_half_length: int,
                      signal_half_length: int, *,
                      noise_sigma: float | None = None,
                      noise_seeds: tuple[int, ...] = (),
                      measure_truncation: bool = False,
                      base_seed: int | None = None,
                      threads: int = 1,
                      tol: float = 1e-10) -> list[RecoveryReport]:
    """Run kernel resolution, synthesis, and recovery over a band-index sweep.

    For each n: resolve the kernel, synthesize taps at ``tap_half_length``,
    inverse-transform the (optionally noise-contaminated) spectrum at
    ``signal_half_length``, and assemble a report carrying the estimate,
    truth, spectral error split, and constants.  With ``measure_truncation``
    the estimate is recomputed at doubled windows and the delta is folded
    into ``truncation_slack``.  Cells run independently (optionally on a
    thread pool); the report order is always (n ascending, seed ascending).
    Errors from constituent stages propagate tagged with their n.
    """
    if sorted(n_values) != list(n_values):
        raise ValueError("n_values must be sorted ascending")
    if any(n < 2 for n in n_values):
        raise ValueError("every n must be at least 2")
    if noise_sigma is not None and not noise_seeds:
        raise ValueError("noise_sigma given without noise seeds")
    seeds = tuple(sorted(noise_seeds))

    def run(n: int) -> list[RecoveryReport]:
        try:
            return _sweep_cell(weight, signal, n, tap_half_length,
                               signal_half_length, noise_sigma, seeds,
                               measure_truncation, base_seed, tol)
        except Exception as exc:
            raise RuntimeError(f"sweep cell n={n} failed: {exc}") from exc

    if threads > 1 and len(n_values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_n = list(pool.map(run, n_values))
    else:
        per_n = [run(n) for n in n_values]
    return [report for cell in per_n for report in cell]
