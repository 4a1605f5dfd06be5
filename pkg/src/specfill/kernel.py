"""Recovering-kernel construction: band normalization, transfer function, taps.

The transfer function of the order-n recovering kernel is piecewise on the
circle: 1 on the inner band |omega| < pi - 1/n, minus the companion W on the
middle band [pi - 1/n, pi - eps_n], 0 on the thin outer band.  The outer
width eps_n in (0, 1/n) is fixed by the normalization

    integral of W over [pi - 1/n, pi - eps_n]  =  pi - 1/n,

which forces the transfer function to integrate to zero over the circle, so
the center tap of the synthesized kernel vanishes and the missing value never
leaks into its own estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._quadrature import QuadratureError, adaptive_quad
from .weights import (
    PI,
    WeightSpec,
    eval_companion,
    gap_from_u,
    gap_power_integral,
    gap_product_from_u,
)


class TruncationWarning(UserWarning):
    """Tap array too short for its own tail mass to have converged."""


@dataclass(frozen=True)
class KernelSpec:
    """A resolved kernel: weight, band index n, outer width, sup constant."""

    weight: WeightSpec
    n: int
    epsilon_n: float
    kappa: float


@dataclass(frozen=True)
class KernelTaps:
    """Time-domain taps k(t) for |t| <= half_length.

    Taps are real and even; the stored center tap is exactly zero, and
    ``zero_residual`` records the magnitude the quadrature produced there
    before forcing.  ``tail_ratio`` is the share of squared-tap mass in the
    last octave (half_length/2, half_length]; a large share means the
    truncation has not converged in the squared-summable sense.
    """

    spec: KernelSpec
    half_length: int
    taps: np.ndarray
    zero_residual: float
    tail_ratio: float


def _inner_edge_u(n: int) -> float:
    # u at omega = pi - 1/n: (pi + omega)/(pi - omega) = 2 pi n - 1
    return math.log(2.0 * PI * n - 1.0)


def _outer_edge_u(epsilon: float) -> float:
    return math.log((2.0 * PI - epsilon) / epsilon)


def _check_n(n: int) -> None:
    if n <= 1:
        raise ValueError(f"band index n must exceed 1, got {n}")


def solve_epsilon_n(weight: WeightSpec, n: int) -> float:
    """Outer band width eps_n in (0, 1/n) solving the normalization equation.

    Companion exponent 1 (the power-law family) inverts the closed-form
    antiderivative exactly; other companions fall back to bisection with
    quadrature (:func:`solve_epsilon_n_bisect`).
    """
    _check_n(n)
    if weight.companion_power == 1.0:
        # (1/2pi) log((2pi - eps)/eps) = (1/2pi) log(2 pi n - 1) + pi - 1/n
        ratio = (2.0 * PI * n - 1.0) * math.exp(2.0 * PI * PI - 2.0 * PI / n)
        return 2.0 * PI / (1.0 + ratio)
    return solve_epsilon_n_bisect(weight, n)


def solve_epsilon_n_bisect(weight: WeightSpec, n: int) -> float:
    """Solve the normalization equation by bisection on the log-band axis.

    Works for any admissible companion and doubles as the independent
    cross-check of the closed form.  The bracket is guaranteed when the
    companion tail integral diverges: the band integral is 0 at width 1/n
    and grows without bound as the outer edge approaches pi.  Bisection runs
    to machine precision in u, far below 1e-14/n absolute in eps_n.
    """
    _check_n(n)
    beta = weight.companion_power
    u_a = _inner_edge_u(n)
    target = PI - 1.0 / n

    def excess(u: float) -> float:
        return _band_mass_quad(beta, u_a, u) - target

    step = 1.0
    u_hi = u_a + step
    while excess(u_hi) <= 0.0:
        step *= 2.0
        u_hi = u_a + step
        if step > 512.0:
            raise QuadratureError(
                f"normalization equation has no root for weight family "
                f"'{weight.family.value}' at n={n}; the companion tail "
                f"integral does not diverge")
    u_lo = u_a + 0.5 * step if step > 1.0 else u_a
    for _ in range(200):
        u_mid = 0.5 * (u_lo + u_hi)
        if u_mid <= u_lo or u_mid >= u_hi:
            break
        if excess(u_mid) > 0.0:
            u_hi = u_mid
        else:
            u_lo = u_mid
        if (u_hi - u_lo) <= 8.0 * math.ulp(u_hi):
            break
    eps = float(gap_from_u(0.5 * (u_lo + u_hi)))
    if not 0.0 < eps < 1.0 / n:
        raise QuadratureError(
            f"bisection for weight family '{weight.family.value}' left the "
            f"admissible interval (0, 1/{n}): {eps}")
    return eps


def _band_mass_quad(beta: float, u_lo: float, u_hi: float,
                    tol: float = 1e-13) -> float:
    """Middle-band companion mass by plain quadrature in the log-band
    coordinate; deliberately no closed-form shortcut, so callers get a route
    independent of the analytic antiderivative."""

    def integrand(u):
        return gap_product_from_u(u) ** (1.0 - beta) / (2.0 * PI)

    bp = np.linspace(u_lo, u_hi, 17)[1:-1]
    return adaptive_quad(integrand, u_lo, u_hi, tol=tol, rtol=1e-15,
                         breakpoints=bp)


def resolve_kernel(weight: WeightSpec, n: int) -> KernelSpec:
    """Solve the normalization and the sup constant for one band index."""
    eps = solve_epsilon_n(weight, n)
    return KernelSpec(weight=weight, n=n, epsilon_n=eps,
                      kappa=_kappa_from_epsilon(weight, eps))


def _kappa_from_epsilon(weight: WeightSpec, epsilon: float) -> float:
    # W is nondecreasing toward the edge, so sup |transfer| on the middle
    # band sits at the outer edge; the inner band contributes 1.
    gap_prod = epsilon * (2.0 * PI - epsilon)
    return max(1.0, gap_prod ** -weight.companion_power)


def compute_kappa(spec: KernelSpec) -> float:
    """Sup of |transfer| over the circle: max(1, W at the outer edge)."""
    return _kappa_from_epsilon(spec.weight, spec.epsilon_n)


def normalization_residual(spec: KernelSpec) -> float:
    """Signed defect of the normalization equation for a resolved kernel.

    Evaluates the middle-band companion integral from the stored eps_n
    (working in the log-band coordinate, so no precision is lost recovering
    the tiny edge distance) and subtracts pi - 1/n.
    """
    u_a = _inner_edge_u(spec.n)
    u_b = _outer_edge_u(spec.epsilon_n)
    value = gap_power_integral(spec.weight.companion_power, u_a, u_b,
                               tol=1e-13)
    return value - (PI - 1.0 / spec.n)


def eval_transfer(spec: KernelSpec, omega):
    """Piecewise transfer function on [-pi, pi]; even, real.

    1 on |omega| < pi - 1/n; -W(omega) for |omega| in the closed middle band
    [pi - 1/n, pi - eps_n]; 0 beyond.  Both boundary points belong to the
    middle branch (a measure-zero convention fixed for determinism).
    """
    om = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(np.abs(om) > PI):
        raise ValueError("omega must lie in [-pi, pi]")
    absw = np.abs(om)
    inner_edge = PI - 1.0 / spec.n
    outer_edge = PI - spec.epsilon_n
    out = np.zeros_like(absw)
    out[absw < inner_edge] = 1.0
    middle = (absw >= inner_edge) & (absw <= outer_edge)
    if np.any(middle):
        out[middle] = -eval_companion(spec.weight, absw[middle])
    if np.ndim(omega) == 0:
        return float(out[0])
    return out


def transfer_mean(spec: KernelSpec, *, tol: float = 1e-12) -> float:
    """(1/2pi) integral of the transfer function over the circle.

    Zero for every resolved kernel (the normalization identity).  The inner
    band integrates :func:`eval_transfer` directly in omega; the middle band
    integrates the companion branch by quadrature in the log-band
    coordinate, where its values keep full precision (raw omega loses ten
    digits recovering the edge distance there).  Neither route touches the
    tap-synthesis machinery or the closed-form antiderivative.
    """
    inner_edge = PI - 1.0 / spec.n

    def f(om):
        return eval_transfer(spec, om)

    inner = adaptive_quad(f, 0.0, inner_edge, tol=tol)
    middle = -_band_mass_quad(spec.weight.companion_power,
                              _inner_edge_u(spec.n),
                              _outer_edge_u(spec.epsilon_n), tol)
    return (inner + middle) / PI


def _middle_band_cos_integral(spec: KernelSpec, t: int, u_a: float,
                              u_b: float, tol: float) -> float:
    """Integral of W(omega) cos(omega t) over the middle band, t integer.

    Runs in the log-band coordinate u.  For integer t,
    cos(omega t) = (-1)^t cos((pi - omega) t), and pi - omega is available
    from u at full precision, so the oscillatory phase never suffers
    cancellation.  The initial partition resolves the oscillation (equal
    phase steps where the gap exceeds ~3/t, log-spaced knots beyond).
    """
    beta = spec.weight.companion_power

    if t == 0:
        def f0(u):
            return gap_product_from_u(u) ** (1.0 - beta) / (2.0 * PI)

        bp = np.linspace(u_a, u_b, 17)[1:-1]
        return adaptive_quad(f0, u_a, u_b, tol=tol, breakpoints=bp)

    def f(u):
        c = np.cos(gap_from_u(u) * t)
        return gap_product_from_u(u) ** (1.0 - beta) * c / (2.0 * PI)

    gap_a = 1.0 / spec.n
    gap_b = spec.epsilon_n
    phase_step = 3.0 / t
    knots = []
    if gap_a > phase_step:
        gaps = np.arange(gap_a, max(gap_b, phase_step), -phase_step)[1:]
        knots.append(np.log((2.0 * PI - gaps) / gaps))
    lo = max(gap_b * (1.0 + 1e-12), 1e-300)
    hi = min(phase_step, gap_a)
    if hi > lo:
        gaps = np.geomspace(hi, lo, 9)
        knots.append(np.log((2.0 * PI - gaps) / gaps))
    bp = np.concatenate(knots) if knots else None
    sign = -1.0 if t % 2 else 1.0
    return sign * adaptive_quad(f, u_a, u_b, tol=tol, breakpoints=bp)


def synthesize_taps(spec: KernelSpec, half_length: int,
                    *, tol: float = 1e-10) -> KernelTaps:
    """Inverse-transform the transfer function into taps on [-T, T].

    For t != 0,

        k(t) = (1/pi) [ sin((pi - 1/n) t)/t  -  integral of W cos(omega t) ],

    with the inner-band term in closed form and the middle-band term by
    adaptive quadrature under the log-band substitution at absolute
    tolerance ``tol`` per tap.  The center tap is computed the same way, its
    magnitude recorded as ``zero_residual``, then stored as exact zero.
    Quadrature failure on any tap raises with the offending t.

    The true kernel is infinitely supported and its taps decay slowly (the
    transfer function has jumps), so the squared-tap tail is checked: when
    the last octave holds more than 1e-6 of the total a TruncationWarning is
    issued rather than silently truncating.
    """
    if half_length < 1:
        raise ValueError(f"half_length must be at least 1, got {half_length}")
    n = spec.n
    u_a = _inner_edge_u(n)
    u_b = _outer_edge_u(spec.epsilon_n)
    inner_edge = PI - 1.0 / n

    taps = np.zeros(2 * half_length + 1)
    center = half_length
    for t in range(half_length + 1):
        try:
            mid = _middle_band_cos_integral(spec, t, u_a, u_b, tol)
        except QuadratureError as exc:
            raise QuadratureError(
                f"tap quadrature failed at t={t} (n={n}, "
                f"family='{spec.weight.family.value}'): {exc}") from exc
        inner = inner_edge if t == 0 else math.sin(inner_edge * t) / t
        value = (inner - mid) / PI
        taps[center + t] = value
        taps[center - t] = value

    zero_residual = float(abs(taps[center]))
    if zero_residual > tol:
        raise QuadratureError(
            f"center-tap residual {zero_residual:.3e} exceeds the quadrature "
            f"tolerance {tol:.1e}; kernel spec is inconsistent")
    taps[center] = 0.0

    squared = taps * taps
    total = float(squared.sum())
    octave = float(squared[center + half_length // 2 + 1:].sum()
                   + squared[:center - half_length // 2].sum())
    tail_ratio = octave / total if total > 0.0 else 0.0
    if tail_ratio > 1e-6:
        warnings.warn(
            f"squared-tap tail has not converged at half_length="
            f"{half_length} (last-octave share {tail_ratio:.2e}); the "
            f"estimate leans on signal decay beyond the window",
            TruncationWarning, stacklevel=2)

    taps.setflags(write=False)
    return KernelTaps(spec=spec, half_length=half_length, taps=taps,
                      zero_residual=zero_residual, tail_ratio=tail_ratio)


def write_taps_text(taps: KernelTaps, path, *, header: str = "") -> None:
    """Two-column text export: t and k(t), one row per tap."""
    T = taps.half_length
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        for t in range(-T, T + 1):
            fh.write(f"{t} {float(taps.taps[t + T])!r}\n")


def write_taps_binary(taps: KernelTaps, path) -> None:
    """Flat little-endian float64 export, taps ordered t = -T .. T."""
    taps.taps.astype("<f8").tofile(path)
