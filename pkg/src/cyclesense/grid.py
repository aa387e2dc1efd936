"""Transverse-mode wavefunctions on a uniform 1-D grid.

The probe lives on a symmetric position grid x_j = (j - n/2) * dx and its
momentum representation lives on the conjugate grid p_m = (m - n/2) * dp with
dp = 2*pi/(n*dx).  Transforms between the two use the unitary continuum
convention

    psi~(p) = (2*pi)^(-1/2) * integral psi(x) exp(-i p x) dx,

discretized with the midpoint rule, which is spectrally accurate for the
smooth, rapidly decaying states handled here.  All values are immutable and
every operation returns a new object, so instances can be shared freely
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from .errors import GridError, NormalizationError

#: L2-norm drift allowed after an explicit normalization.
NORM_TOL = 1e-10
#: norm deviation tolerated by operations that require a normalized input.
NORM_PRECONDITION_TOL = 1e-6

POSITION = "position"
MOMENTUM = "momentum"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform symmetric grid with num_points a power of two.

    Parameters
    ----------
    num_points : int
        Number of samples; must be a power of two so FFT round trips are
        exact and fast.
    half_extent : float
        Grid covers [-half_extent, half_extent) in meters.
    """

    num_points: int
    half_extent: float

    def __post_init__(self):
        n = self.num_points
        if n < 2 or (n & (n - 1)) != 0:
            raise GridError(f"num_points must be a power of two >= 2, got {n}")
        if not self.half_extent > 0:
            raise GridError(f"half_extent must be positive, got {self.half_extent}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_extent / self.num_points

    @property
    def dp(self) -> float:
        return 2.0 * math.pi / (self.num_points * self.dx)

    @cached_property
    def positions(self) -> np.ndarray:
        n = self.num_points
        return _readonly((np.arange(n) - n // 2) * self.dx)

    @cached_property
    def momenta(self) -> np.ndarray:
        n = self.num_points
        return _readonly((np.arange(n) - n // 2) * self.dp)

    @classmethod
    def for_probe(cls, spec: "ProbeSpec", total_path: float = 0.0,
                  num_points: int = 1 << 14, padding: float = 8.0) -> "Grid":
        """Grid sized to hold the probe over its whole flight.

        half_extent = padding * max(w0, w(total_path)) with w(z) the
        diffracted beam radius, so the state never approaches the edge even
        after the longest propagation in the run.
        """
        w_end = diffracted_radius(spec.waist_radius, total_path, spec.wave_number)
        return cls(num_points, padding * max(spec.waist_radius, w_end))


def diffracted_radius(w0: float, z: float, k: float) -> float:
    """Beam radius w(z) = w0 * sqrt(1 + (2 z / (k w0^2))^2) of a Gaussian."""
    return w0 * math.sqrt(1.0 + (2.0 * z / (k * w0 * w0)) ** 2)


@dataclass(frozen=True)
class ProbeSpec:
    """Gaussian probe parameters.

    waist_radius is the 1/e amplitude radius w0, related to the initial
    spreads by Delta_X = w0/2 and Delta_P = 1/w0.  center_x and center_p
    offset the profile in phase space.
    """

    waist_radius: float
    wave_number: float
    center_x: float = 0.0
    center_p: float = 0.0

    def __post_init__(self):
        if not self.waist_radius > 0:
            raise ValueError(f"waist_radius must be positive, got {self.waist_radius}")
        if not self.wave_number > 0:
            raise ValueError(f"wave_number must be positive, got {self.wave_number}")

    @property
    def delta_x(self) -> float:
        return 0.5 * self.waist_radius

    @property
    def delta_p(self) -> float:
        return 1.0 / self.waist_radius


@dataclass(frozen=True)
class Moments:
    """First and second phase-space moments of a pure state."""

    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    cov_xp: float

    def __post_init__(self):
        if not (self.var_x > 0 and self.var_p > 0):
            raise ValueError("variances must be positive")

    @property
    def uncertainty_product(self) -> float:
        return self.var_x * self.var_p - self.cov_xp**2


@dataclass(frozen=True)
class WaveFunction:
    """Complex amplitudes of the transverse mode in one representation."""

    grid: Grid
    amplitudes: np.ndarray = field(repr=False)
    representation: str = POSITION

    def __post_init__(self):
        if self.representation not in (POSITION, MOMENTUM):
            raise ValueError(f"unknown representation {self.representation!r}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.grid.num_points,):
            raise GridError(
                f"amplitude array of shape {amps.shape} does not match grid "
                f"with {self.grid.num_points} points")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    # -- representation handling -------------------------------------------

    @property
    def _weight(self) -> float:
        return self.grid.dx if self.representation == POSITION else self.grid.dp

    def to_position(self) -> "WaveFunction":
        if self.representation == POSITION:
            return self
        g = self.grid
        amps = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(self.amplitudes)))
        amps *= g.num_points * g.dp / math.sqrt(2.0 * math.pi)
        return WaveFunction(g, amps, POSITION)

    def to_momentum(self) -> "WaveFunction":
        if self.representation == MOMENTUM:
            return self
        g = self.grid
        amps = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(self.amplitudes)))
        amps *= g.dx / math.sqrt(2.0 * math.pi)
        return WaveFunction(g, amps, MOMENTUM)

    # -- norms ---------------------------------------------------------------

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self._weight)

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def normalized(self) -> "WaveFunction":
        n = self.norm()
        if n == 0.0:
            raise NormalizationError("cannot normalize the zero wavefunction")
        return WaveFunction(self.grid, self.amplitudes / n, self.representation)

    def require_normalized(self, tol: float = NORM_PRECONDITION_TOL) -> None:
        n = self.norm()
        if abs(n - 1.0) > tol:
            raise NormalizationError(f"wavefunction norm {n} deviates from 1 by more than {tol}")


def make_gaussian(spec: ProbeSpec, grid: Grid) -> WaveFunction:
    """Normalized Gaussian psi(x) ~ exp(-(x-x0)^2/w0^2) * exp(i p0 x).

    Raises GridError when the grid window is smaller than four waist radii,
    which is the point where clipped tails start to bias the moments.
    """
    if grid.half_extent < 4.0 * spec.waist_radius:
        raise GridError(
            f"grid half_extent {grid.half_extent} is too small for waist radius "
            f"{spec.waist_radius}; need at least {4.0 * spec.waist_radius}")
    x = grid.positions
    amps = np.exp(-((x - spec.center_x) ** 2) / spec.waist_radius**2)
    amps = amps.astype(np.complex128) * np.exp(1j * spec.center_p * x)
    return WaveFunction(grid, amps, POSITION).normalized()


def overlap(a: WaveFunction, b: WaveFunction) -> complex:
    """Inner product <a|b> by quadrature in a common representation."""
    if a.grid != b.grid:
        raise GridError("wavefunctions live on different grids")
    if a.representation != b.representation:
        b = b.to_position() if a.representation == POSITION else b.to_momentum()
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a._weight)


def fidelity(a: WaveFunction, b: WaveFunction) -> float:
    """|<a|b>|^2; insensitive to global phases, symmetric in its arguments."""
    a.require_normalized()
    b.require_normalized()
    return abs(overlap(a, b)) ** 2


def moments(psi: WaveFunction) -> Moments:
    """Phase-space moments <X>, <P>, Var X, Var P and Cov(X,P).

    The covariance is the symmetrized one, Cov = <{X,P}>/2 - <X><P>,
    evaluated as Re<psi| X P |psi> - <X><P> on the grid.
    """
    psi.require_normalized()
    pos = psi.to_position()
    mom = psi.to_momentum()
    g = psi.grid
    wx = np.abs(pos.amplitudes) ** 2 * g.dx
    wp = np.abs(mom.amplitudes) ** 2 * g.dp
    mean_x = float(np.sum(g.positions * wx))
    mean_p = float(np.sum(g.momenta * wp))
    var_x = float(np.sum((g.positions - mean_x) ** 2 * wx))
    var_p = float(np.sum((g.momenta - mean_p) ** 2 * wp))
    p_psi = WaveFunction(g, g.momenta * mom.amplitudes, MOMENTUM).to_position()
    mean_xp = float(np.real(np.vdot(g.positions * pos.amplitudes, p_psi.amplitudes)) * g.dx)
    return Moments(mean_x, mean_p, var_x, var_p, mean_xp - mean_x * mean_p)
