"""Test-sequence generators, grid transforms, and spectral noise.

Spectra live on a symmetric midpoint grid of M uniform samples on (-pi, pi)
(no sample at the band edges, none at zero), so Hermitian symmetry is the
exact array identity ``values[::-1].conj() == values``.  Sequences live on
finite windows [-S, S]; window-growth assertions in the tests stand in for
the infinite objects.

Generators are deterministic functions of (parameters, seed) built on the
counter-based Philox bit generator, so concurrent generation is
schedule-independent.  Each generated spectrum carries its exact analytic
profile as a callable, which downstream error integrals use to resolve
sub-grid bands near the edges.

Both generated families are uniformly well behaved: envelopes are bounded
trigonometric polynomials, so any finite family drawn from them has
uniformly vanishing weighted mass near the band edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .weights import PI, WeightSpec, eval_weight

#: Degree of the seeded trigonometric envelope polynomials.
ENVELOPE_DEGREE = 8

#: Spectral noise is confined to the band |omega| > pi - NOISE_BAND.
NOISE_BAND = 0.05


class Divergent:
    """Singleton marker for a weighted norm that fails to stabilize."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DIVERGENT"


DIVERGENT = Divergent()


@dataclass(frozen=True, eq=False)
class SpectralSignal:
    """Samples of a spectrum X on the midpoint frequency grid.

    ``omega_support`` declares a band edge: values are exactly zero beyond
    it.  ``profile`` is the exact generator closure (omega array -> complex
    values); None for spectra with no closed form (for example after noise
    injection).
    """

    grid_size: int
    values: np.ndarray
    omega_support: float | None = None
    profile: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid_size,):
            raise ValueError("values must have shape (grid_size,)")


@dataclass(frozen=True, eq=False)
class TimeSignal:
    """Real samples x(t) on t in [-S, S] with the center value retained."""

    half_length: int
    samples: np.ndarray
    truth_center: float
    label: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if samples.shape != (2 * self.half_length + 1,):
            raise ValueError("samples must have shape (2*half_length + 1,)")


def grid_omegas(grid_size: int) -> np.ndarray:
    """Midpoint grid on (-pi, pi): symmetric, uniform, edge-free.

    Built by mirroring the positive half so that omega[-1-j] == -omega[j]
    exactly in floating point.
    """
    if grid_size < 2 or grid_size % 2:
        raise ValueError(f"grid_size must be even and >= 2, got {grid_size}")
    pos = (np.arange(grid_size // 2) + 0.5) * (2.0 * PI / grid_size)
    return np.concatenate([-pos[::-1], pos])


def _check_grid_size(grid_size: int) -> None:
    if grid_size < 1024 or grid_size & (grid_size - 1):
        raise ValueError(
            f"grid_size must be a power of two >= 1024, got {grid_size}")


def _envelope(seed: int) -> Callable[[np.ndarray], np.ndarray]:
    """Seeded Hermitian trig-polynomial envelope (even real + odd imaginary).

    cos/sin of negated arguments are bit-exact mirrors, so the closure is
    exactly Hermitian on any symmetric grid.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    scale = 1.0 / (1.0 + np.arange(ENVELOPE_DEGREE + 1)) ** 2
    re_coef = rng.uniform(-1.0, 1.0, ENVELOPE_DEGREE + 1) * scale
    im_coef = rng.uniform(-1.0, 1.0, ENVELOPE_DEGREE + 1) * scale
    im_coef[0] = 0.0

    def profile(omega: np.ndarray) -> np.ndarray:
        om = np.asarray(omega, dtype=float)
        ks = np.arange(ENVELOPE_DEGREE + 1)
        angles = om[..., None] * ks
        return (np.cos(angles) @ re_coef) + 1j * (np.sin(angles) @ im_coef)

    return profile


def make_bandlimited(omega_support: float, shape_seed: int,
                     grid_size: int) -> SpectralSignal:
    """Band-limited spectrum: seeded smooth envelope times a raised cosine.

    The raised-cosine factor vanishes at +-omega_support and the values are
    exactly zero beyond; bit-identical for identical (parameters, seed).
    """
    if not 0.0 < omega_support < PI:
        raise ValueError(
            f"omega_support must lie in (0, pi), got {omega_support}")
    _check_grid_size(grid_size)
    envelope = _envelope(shape_seed)
    support = float(omega_support)

    def profile(omega: np.ndarray) -> np.ndarray:
        om = np.asarray(omega, dtype=float)
        inside = np.abs(om) < support
        rolloff = np.where(inside,
                           0.5 * (1.0 + np.cos(PI * om / support)),
                           0.0)
        return np.where(inside, envelope(om) * rolloff, 0.0 + 0.0j)

    omegas = grid_omegas(grid_size)
    return SpectralSignal(
        grid_size=grid_size, values=profile(omegas),
        omega_support=support, profile=profile,
        label=(f"bandlimited omega_support={support!r} "
               f"seed={shape_seed} grid_size={grid_size}"))


def make_power_decay(nu: float, shape_seed: int,
                     grid_size: int) -> SpectralSignal:
    """Spectrum decaying like (pi^2 - omega^2)^nu toward the band edges.

    X = (pi^2 - omega^2)^nu * g with g a seeded Hermitian envelope
    normalized to |g| <= 1 on the grid.  Class membership is a numerical
    question for :func:`class_norm`, not an assumption.
    """
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    _check_grid_size(grid_size)
    envelope = _envelope(shape_seed)
    omegas = grid_omegas(grid_size)
    norm = float(np.max(np.abs(envelope(omegas))))

    def profile(omega: np.ndarray) -> np.ndarray:
        om = np.asarray(omega, dtype=float)
        gap = ((PI - om) * (PI + om)) ** nu
        return gap * envelope(om) / norm

    return SpectralSignal(
        grid_size=grid_size, values=profile(omegas),
        omega_support=None, profile=profile,
        label=(f"powerdecay nu={float(nu)!r} seed={shape_seed} "
               f"grid_size={grid_size}"))


def from_profile(profile: Callable[[np.ndarray], np.ndarray],
                 grid_size: int, omega_support: float | None = None,
                 label: str = "profile") -> SpectralSignal:
    """Sample an arbitrary Hermitian closure onto the grid, keeping it."""
    _check_grid_size(grid_size)
    omegas = grid_omegas(grid_size)
    values = np.asarray(profile(omegas), dtype=complex)
    return SpectralSignal(grid_size=grid_size, values=values,
                          omega_support=omega_support, profile=profile,
                          label=label)


def assert_hermitian(spec: SpectralSignal, tol: float = 0.0) -> None:
    """Raise unless X(-omega) == conj(X(omega)) on the grid (within tol)."""
    defect = np.max(np.abs(spec.values[::-1].conj() - spec.values))
    if defect > tol:
        raise ValueError(
            f"spectrum violates Hermitian symmetry (defect {defect:.3e})")


def inverse_transform(spec: SpectralSignal, half_length: int) -> TimeSignal:
    """x(t) = (1/2pi) integral of X e^(i omega t), trapezoid on the grid.

    On the midpoint grid the trapezoid sum is a phase-shifted inverse DFT,
    evaluated by FFT.  The imaginary residue is asserted below 1e-10 (a
    larger residue means Hermitian symmetry was broken upstream) and then
    discarded.  Requires grid_size >= 8 * (2 * half_length + 1).
    """
    if half_length < 1:
        raise ValueError(f"half_length must be >= 1, got {half_length}")
    M = spec.grid_size
    if M < 8 * (2 * half_length + 1):
        raise ValueError(
            f"grid_size {M} too coarse for half_length {half_length}; "
            f"need at least 8 * (2 * half_length + 1) = "
            f"{8 * (2 * half_length + 1)}")
    base = np.fft.ifft(spec.values)
    ts = np.arange(-half_length, half_length + 1)
    parity = np.where(ts % 2 == 0, 1.0, -1.0)
    phases = parity * np.exp(1j * PI * ts / M)
    complex_samples = phases * base[ts % M]
    residue = float(np.max(np.abs(complex_samples.imag)))
    if residue > 1e-10:
        raise ValueError(
            f"imaginary residue {residue:.3e} exceeds 1e-10; spectrum is "
            f"not Hermitian")
    samples = complex_samples.real.copy()
    return TimeSignal(half_length=half_length, samples=samples,
                      truth_center=float(samples[half_length]),
                      label=f"{spec.label} S={half_length}")


def forward_transform(signal: TimeSignal, grid_size: int) -> SpectralSignal:
    """Evaluate the finite sum of x(t) e^(-i omega t) on the grid via FFT."""
    S = signal.half_length
    if grid_size < 2 * (2 * S + 1) or grid_size & (grid_size - 1):
        raise ValueError(
            f"grid_size must be a power of two >= 2 * (2 * half_length + 1), "
            f"got {grid_size}")
    M = grid_size
    ts = np.arange(-S, S + 1)
    parity = np.where(ts % 2 == 0, 1.0, -1.0)
    packed = np.zeros(M, dtype=complex)
    packed[ts % M] = signal.samples * parity * np.exp(-1j * PI * ts / M)
    return SpectralSignal(grid_size=M, values=np.fft.fft(packed),
                          omega_support=None, profile=None,
                          label=f"forward({signal.label}) grid_size={M}")


def grid_l1_norm(values: np.ndarray, grid_size: int) -> float:
    """Grid L1 norm: sum |X| times the grid spacing."""
    return float(np.sum(np.abs(values)) * (2.0 * PI / grid_size))


def _tail_decades(grid_size: int) -> np.ndarray:
    """Nested edge distances for stabilization checks, down to grid scale."""
    spacing = 2.0 * PI / grid_size
    deltas = [PI / 4]
    while deltas[-1] / 4.0 > 2.0 * spacing:
        deltas.append(deltas[-1] / 4.0)
    return np.array(deltas)


def class_norm(spec: SpectralSignal, weight: WeightSpec):
    """Weighted spectral norm of X against a weight, or DIVERGENT.

    Finite p: the grid integral of h |X|^p.  p = inf: the grid essential
    sup of h |X|.  Both are scanned over nested windows approaching the
    band edges; a value that keeps growing toward the edge instead of
    stabilizing (or overflows) is reported as the DIVERGENT marker rather
    than a float.
    """
    omegas = grid_omegas(spec.grid_size)
    absx = np.abs(spec.values)
    h = eval_weight(weight, omegas)
    deltas = _tail_decades(spec.grid_size)

    if weight.p == math.inf:
        pointwise = h * absx
        partials = [float(np.max(pointwise[np.abs(omegas) <= PI - d]))
                    for d in deltas]
    else:
        density = h * absx ** weight.p
        spacing = 2.0 * PI / spec.grid_size
        partials = [float(np.sum(density[np.abs(omegas) <= PI - d]) * spacing)
                    for d in deltas]

    values = np.asarray(partials)
    if not np.all(np.isfinite(values)):
        return DIVERGENT
    final = values[-1]
    if final > 0.0:
        share = (values[-1] - values[-2]) / final
        if share > 0.1:
            return DIVERGENT
    return final


def add_spectral_noise(spec: SpectralSignal, sigma: float,
                       noise_seed: int) -> SpectralSignal:
    """Add Hermitian edge-band noise with grid L1 norm exactly sigma.

    The noise has flat magnitude on |omega| > pi - 0.05 (where the weighted
    classes have no mass, so it is maximally adversarial for the kernel) and
    seeded random phases; sigma = 0 returns the spectrum unchanged.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0.0:
        return SpectralSignal(grid_size=spec.grid_size, values=spec.values,
                              omega_support=spec.omega_support,
                              profile=spec.profile, label=spec.label)
    M = spec.grid_size
    omegas = grid_omegas(M)
    half = M // 2
    pos_mask = omegas[half:] > PI - NOISE_BAND
    count = int(np.count_nonzero(pos_mask))
    if count == 0:
        raise ValueError(
            f"grid_size {M} leaves no samples in the noise band")
    rng = np.random.Generator(np.random.Philox(noise_seed))
    phases = np.exp(1j * rng.uniform(0.0, 2.0 * PI, count))
    amplitude = sigma / (2.0 * count * (2.0 * PI / M))
    noise = np.zeros(M, dtype=complex)
    noise[half:][pos_mask] = amplitude * phases
    noise[:half][pos_mask[::-1]] = np.conj(amplitude * phases)[::-1]
    return SpectralSignal(
        grid_size=M, values=spec.values + noise, omega_support=None,
        profile=None,
        label=f"{spec.label} + noise sigma={float(sigma)!r} seed={noise_seed}")


def write_time_signal_text(signal: TimeSignal, path) -> None:
    """Two-column text export (t, x(t)) with a one-line descriptive header."""
    S = signal.half_length
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {signal.label}\n")
        for t in range(-S, S + 1):
            fh.write(f"{t} {float(signal.samples[t + S])!r}\n")


def write_spectral_signal_text(spec: SpectralSignal, path) -> None:
    """Three-column text export (omega, Re X, Im X) with a header line."""
    omegas = grid_omegas(spec.grid_size)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {spec.label}\n")
        for om, v in zip(omegas, spec.values):
            fh.write(f"{float(om)!r} {float(v.real)!r} {float(v.imag)!r}\n")
