"""Drive-voltage chain, synthetic SNR sweeps and the precision scaling fit.

Mirrors the analysis applied to the tabletop run: sinusoidal drive voltages
tilt the sensing mirrors, the quadrant detector's 10 kHz component is read
against a drive-independent noise floor, a zero-intercept line through SNR
versus voltage locates the SNR = 1 threshold per sensor count, and the
resulting minimum detectable tilts are fitted to a / (N^2 + b N).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FitError
from .fisher import GeneratorMoments, probe_alone_qfi_at_origin, qcrb_global, \
    qfim_classical_switch, qfim_quantum_switch, qfim_sequential
from .grid import ProbeSpec
from .network import NetworkGeometry, SwitchMode
from .wva import PostSelection, ReadoutModel, qpd_signal


@dataclass(frozen=True)
class SensorDriveModel:
    """Voltage-to-beam-tilt chain of a PZT-actuated sensing mirror.

    Two chips spaced chip_separation apart are driven in antiphase, so a
    peak-to-peak voltage v tips the mirror by v * displacement_per_volt /
    chip_separation and the reflected beam by twice that.
    """

    pzt_displacement_per_volt: float = 22e-9
    chip_separation: float = 20e-3
    beam_tilt_factor: float = 2.0

    @property
    def tilt_per_volt(self) -> float:
        """Beam-tilt modulation amplitude per volt peak-to-peak (rad/V)."""
        return (self.pzt_displacement_per_volt / self.chip_separation
                * self.beam_tilt_factor)


def voltage_to_beam_tilt(v_pp: float, model: SensorDriveModel) -> float:
    """Beam-tilt modulation amplitude for a peak-to-peak drive voltage."""
    if v_pp < 0:
        raise ValueError(f"voltage must be non-negative, got {v_pp}")
    return v_pp * model.tilt_per_volt


@dataclass(frozen=True)
class SnrSample:
    """One SNR reading at a sensor count and drive voltage."""

    n_sensors: int
    drive_voltage_pp: float
    snr: float
    replicate_index: int = 0

    def __post_init__(self):
        if self.snr < 0:
            raise ValueError("snr must be non-negative")


@dataclass(frozen=True)
class NoiseModel:
    """Constant detection noise floor, independent of N and drive level.

    jitter is the log-normal sigma applied multiplicatively to synthetic SNR
    replicates; zero makes the synthetic pipeline exactly deterministic.
    """

    noise_floor: float
    jitter: float = 0.0

    def __post_init__(self):
        if not self.noise_floor > 0:
            raise ValueError("noise_floor must be positive")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")


@dataclass(frozen=True)
class ScalingFit:
    """Fitted precision law delta_phi_min = a / (N^2 + b N)."""

    a: float
    b: float
    r_squared: float

    def predict(self, n: float) -> float:
        return self.a / (n**2 + self.b * n)

    def heisenberg_comparison(self, n: float) -> float:
        """Same relation with the N^2 term replaced by 1 (linear-scaling law)."""
        return self.a / (1.0 + self.b * n)


@dataclass(frozen=True)
class SnrLineFit:
    """Zero-intercept (by default) line through SNR versus drive voltage."""

    n_sensors: int
    slope: float
    intercept: float
    min_voltage: float


#: Minimum detectable average tilt of the 9-sensor tabletop run: sensor
#: count, SNR = 1 drive voltage (V peak-to-peak), detected tilt (rad).
TABLETOP_PRECISION_TABLE: tuple[tuple[int, float, float], ...] = (
    (1, 382.6e-6, 841.8e-12),
    (2, 175.3e-6, 385.7e-12),
    (3, 98.6e-6, 217.0e-12),
    (4, 65.5e-6, 144.1e-12),
    (5, 46.8e-6, 103.1e-12),
    (6, 35.5e-6, 77.7e-12),
    (7, 27.6e-6, 60.6e-12),
    (8, 22.2e-6, 48.9e-12),
    (9, 18.1e-6, 39.8e-12),
)


def snr_model(phi_bar: float, geom: NetworkGeometry, waist_radius: float,
              ps: PostSelection, readout: ReadoutModel, noise: NoiseModel) -> float:
    """Noise-referenced detector signal V_delta / V_noise for a tilt phi_bar."""
    _, v_delta = qpd_signal(phi_bar, geom, waist_radius, ps, readout)
    return v_delta / noise.noise_floor


def calibrate_noise_floor(geom_for_n, waist_radius: float, ps: PostSelection,
                          readout: ReadoutModel, drive: SensorDriveModel,
                          reference: tuple[int, float] = (1, 382.6e-6)) -> float:
    """Noise floor that puts SNR = 1 at a reference (n_sensors, voltage) point.

    The absolute volts-per-tilt factor of a real detector chain is device
    specific; anchoring the floor to one measured threshold row reproduces
    the rest of the chain in absolute units.
    """
    n_ref, v_ref = reference
    phi = voltage_to_beam_tilt(v_ref, drive)
    _, v_delta = qpd_signal(phi, geom_for_n(n_ref), waist_radius, ps, readout)
    return v_delta


def fit_snr_vs_voltage(samples: Sequence[SnrSample],
                       force_zero_intercept: bool = True) -> SnrLineFit:
    """Least-squares SNR-versus-voltage line and its SNR = 1 crossing.

    The intercept is pinned to zero by default (no drive, no signal); the
    free-intercept variant is available for robustness comparisons.  All
    samples must belong to a single sensor count.
    """
    if not samples:
        raise FitError("no samples to fit")
    counts = {s.n_sensors for s in samples}
    if len(counts) != 1:
        raise FitError(f"samples mix sensor counts {sorted(counts)}")
    v = np.array([s.drive_voltage_pp for s in samples])
    y = np.array([s.snr for s in samples])
    if len(np.unique(v)) < 2:
        raise FitError("need at least two distinct drive voltages")
    if np.all(y == 0):
        raise FitError("all SNR values are zero")
    if force_zero_intercept:
        slope = float(np.dot(v, y) / np.dot(v, v))
        intercept = 0.0
    else:
        slope_f, intercept = np.polyfit(v, y, 1)
        slope = float(slope_f)
    if slope <= 0:
        raise FitError(f"non-positive fitted slope {slope}")
    return SnrLineFit(samples[0].n_sensors, slope, float(intercept),
                      (1.0 - intercept) / slope)


def fit_scaling_law(points: Sequence[tuple[float, float]]) -> ScalingFit:
    """Fit delta_phi_min = a / (N^2 + b N) to (N, delta_phi_min) pairs.

    Linear regression of 1/delta_phi against (N^2, N) gives (1/a, b/a) in
    closed form; the goodness of fit is then computed in the original
    delta_phi space.
    """
    if len({n for n, _ in points}) < 3:
        raise FitError("need at least three distinct sensor counts")
    if any(d <= 0 for _, d in points):
        raise FitError("minimum detectable tilts must be positive")
    n = np.array([float(p[0]) for p in points])
    y = np.array([float(p[1]) for p in points])
    design = np.column_stack([n**2, n])
    coef, *_ = np.linalg.lstsq(design, 1.0 / y, rcond=None)
    if coef[0] <= 0:
        raise FitError("fitted quadratic coefficient is not positive")
    a = 1.0 / float(coef[0])
    b = float(coef[1]) * a
    predicted = a / (n**2 + b * n)
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return ScalingFit(a, b, 1.0 - ss_res / ss_tot)


@dataclass(frozen=True)
class QcrbRow:
    """One bound evaluation of the sweep comparison table."""

    n_sensors: int
    mode: SwitchMode
    bound: float
    scaled_bound: float
    per_shot_precision: float


def qcrb_comparison(n_values: Iterable[int], probe: ProbeSpec, z_bar: float,
                    modes: Sequence[SwitchMode] = tuple(SwitchMode),
                    trials: int = 1) -> list[QcrbRow]:
    """Closed-form bounds on the average kick for every strategy and N."""
    rows = []
    for n in n_values:
        gm = GeneratorMoments.from_probe_spec(probe, z_bar, n)
        for mode in modes:
            if mode == SwitchMode.SEQUENTIAL:
                rep = qcrb_global(qfim_sequential(gm), n, z_bar, trials, mode)
            elif mode == SwitchMode.QUANTUM_SWITCH:
                rep = qcrb_global(qfim_quantum_switch(gm), n, z_bar, trials, mode)
            elif mode == SwitchMode.CLASSICAL_SWITCH:
                rep = qcrb_global(qfim_classical_switch(gm), n, z_bar, trials, mode)
            else:
                rep = probe_alone_qfi_at_origin(gm, trials, mode)
            rows.append(QcrbRow(n, mode, rep.bound_on_theta_bar,
                                rep.scaled_bound, rep.per_shot_precision))
    return rows


@dataclass(frozen=True)
class SweepResult:
    """Synthetic sweep outputs: raw samples, per-N fits and the scaling law."""

    samples: tuple[SnrSample, ...]
    line_fits: tuple[SnrLineFit, ...]
    precision_points: tuple[tuple[int, float], ...]
    scaling: ScalingFit
    qcrb_rows: tuple[QcrbRow, ...]


def end_to_end_sweep(n_values: Sequence[int], voltages: Sequence[float],
                     replicates: int, probe: ProbeSpec, ps: PostSelection,
                     readout: ReadoutModel, drive: SensorDriveModel,
                     noise: NoiseModel, z_bar: float, lead_in: float = 0.0,
                     lead_out: float = 0.0, seed: int = 0,
                     threads: int = 1) -> SweepResult:
    """Generate a synthetic SNR sweep and run the full analysis chain on it.

    Every (N, voltage) cell owns an RNG stream spawned from (seed, N,
    voltage index), so serial and threaded executions produce identical
    output and the draws are reproducible for a fixed seed.  The noise
    model itself (floor and jitter width) is shared by all cells: nothing
    about the noise depends on the sensor count.
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    if not n_values or not voltages:
        raise ValueError("n_values and voltages must be non-empty")

    def geom_for(n: int) -> NetworkGeometry:
        return NetworkGeometry.uniform(n, z_bar, lead_in, lead_out,
                                       probe.wave_number)

    def run_cell(args: tuple[int, int, float]) -> list[SnrSample]:
        n, vi, v = args
        phi = voltage_to_beam_tilt(v, drive)
        base = snr_model(phi, geom_for(n), probe.waist_radius, ps, readout, noise)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, vi)))
        out = []
        for r in range(replicates):
            factor = float(np.exp(noise.jitter * rng.standard_normal())) \
                if noise.jitter > 0 else 1.0
            out.append(SnrSample(n, v, base * factor, r))
        return out

    cells = [(n, vi, v) for n in n_values for vi, v in enumerate(voltages)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_cell = list(pool.map(run_cell, cells))
    else:
        per_cell = [run_cell(c) for c in cells]
    samples = tuple(s for cell in per_cell for s in cell)

    line_fits = []
    points = []
    for n in n_values:
        fit = fit_snr_vs_voltage([s for s in samples if s.n_sensors == n])
        line_fits.append(fit)
        points.append((n, voltage_to_beam_tilt(fit.min_voltage, drive)))
    scaling = fit_scaling_law(points)
    rows = qcrb_comparison(n_values, probe, z_bar)
    return SweepResult(samples, tuple(line_fits), tuple(points), scaling,
                       tuple(rows))
