"""Polarization ancilla, post-selection and the amplified momentum readout.

The polarization doubles as the order switch: H traverses the network
forward, V traverses it backward through a parity sandwich.  Projecting the
output polarization onto a nearly-orthogonal state concentrates the tilt
signal into the small surviving amplitude with weak-value gain A_w; because
the gain is imaginary here, the branch-antisymmetric position displacement
shows up as a momentum shift of the surviving probe, which a Fourier lens
plus quadrant detector reads out directly.

The polarization is kept as an explicit two-component register tensored
with the grid state (one grid wavefunction per branch); the branches only
meet in the final projection, so nothing ever needs a joint grid.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import PostSelectionError, RegimeError
from .grid import MOMENTUM, POSITION, WaveFunction, moments
from .network import (KickVector, NetworkGeometry, apply_propagation, g_params,
                      traverse_sequence)

#: smallness bounds for the first-order evolution (see wva_final_probe).
GUARD_AMPLIFIED_SHIFT = 0.05
GUARD_KICK_SPREAD = 0.05
GUARD_SINGLE_KICK = 0.5


@dataclass(frozen=True)
class PolarizationState:
    """Normalized Jones vector (amp_h, amp_v)."""

    amp_h: complex
    amp_v: complex

    def __post_init__(self):
        n = abs(self.amp_h) ** 2 + abs(self.amp_v) ** 2
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"Jones vector norm^2 = {n}, expected 1")

    @classmethod
    def diagonal(cls) -> "PolarizationState":
        """The 45-degree linear state (|H> + |V>)/sqrt(2)."""
        s = 1.0 / math.sqrt(2.0)
        return cls(s, s)

    def inner(self, other: "PolarizationState") -> complex:
        """<self|other>."""
        return (self.amp_h.conjugate() * other.amp_h
                + self.amp_v.conjugate() * other.amp_v)


@dataclass(frozen=True)
class PostSelection:
    """Post-selected polarization, offset by epsilon from the dark port.

    variant "imaginary" uses (e^{i eps}|H> - e^{-i eps}|V>)/sqrt(2), which
    gives the purely imaginary gain A_w = i cot(eps); variant "real" rotates
    the analyzer by epsilon instead, giving the real gain cot(eps) with the
    same success probability sin^2(eps).
    """

    epsilon: float
    variant: str = "imaginary"

    def __post_init__(self):
        if not 0.0 < abs(self.epsilon) < 0.5 * math.pi:
            raise PostSelectionError(
                f"epsilon must lie strictly between 0 and pi/2 in magnitude, "
                f"got {self.epsilon}")
        if self.variant not in ("imaginary", "real"):
            raise ValueError(f"unknown post-selection variant {self.variant!r}")

    @classmethod
    def from_weak_value_magnitude(cls, magnitude: float,
                                  variant: str = "imaginary") -> "PostSelection":
        """Choose epsilon = arccot(magnitude), e.g. magnitude 7 for the rig."""
        if not magnitude > 0:
            raise ValueError("weak-value magnitude must be positive")
        return cls(math.atan(1.0 / magnitude), variant)

    @property
    def state(self) -> PolarizationState:
        s = 1.0 / math.sqrt(2.0)
        if self.variant == "imaginary":
            return PolarizationState(s * np.exp(1j * self.epsilon),
                                     -s * np.exp(-1j * self.epsilon))
        beta = 0.25 * math.pi - self.epsilon
        return PolarizationState(math.cos(beta), -math.sin(beta))


@dataclass(frozen=True)
class ReadoutModel:
    """Fourier-lens / quadrant-detector chain constants.

    qpd_gain is the volts-per-watt conversion (responsivity times
    transresistance); position_slope is the detector's linear-response
    constant relating the normalized differential signal to the beam
    centroid in units of the beam radius.
    """

    focal_length: float
    qpd_gain: float
    total_power: float
    position_slope: float = 0.65

    def __post_init__(self):
        if not (self.focal_length > 0 and self.qpd_gain > 0 and self.total_power > 0):
            raise ValueError("focal_length, qpd_gain and total_power must be positive")


def weak_value(ps: PostSelection) -> complex:
    """A_w = <f|A|i>/<f|i> with A = |H><H| - |V><V| and the diagonal input.

    Evaluated from the inner products; equals i*cot(eps) for the imaginary
    variant and cot(eps) for the real one.
    """
    pre = PolarizationState.diagonal()
    post = ps.state
    accepted = post.inner(pre)
    flipped = post.inner(PolarizationState(pre.amp_h, -pre.amp_v))
    if abs(accepted) < 1e-15:
        raise PostSelectionError("pre- and post-selected states are orthogonal")
    return flipped / accepted


def wva_final_probe(psi: WaveFunction, geom: NetworkGeometry, kicks: KickVector,
                    ps: PostSelection, method: str = "exact_grid"
                    ) -> tuple[WaveFunction, float]:
    """Post-selected probe state and the post-selection success probability.

    exact_grid runs both polarization branches through the full operator
    product (reverse branch parity-sandwiched, leads included) and projects
    onto the post-selected polarization.  first_order applies the linearized
    joint evolution instead and is only allowed inside the small-signal
    guards: amplified displacement |A_w| (zbar/2k) N^2 tbar DeltaP < 0.05,
    accumulated kick N tbar DeltaX < 0.05 and each |theta_j| w0 < 0.5.
    """
    if method not in ("exact_grid", "first_order"):
        raise ValueError(f"unknown method {method!r}")
    psi.require_normalized()
    k = geom.wave_number

    if method == "exact_grid":
        fwd = traverse_sequence(psi, geom, kicks, "forward", include_leads=True)
        rev = traverse_sequence(psi, geom, kicks, "reverse",
                                parity_conjugated=True, include_leads=True)
        post = ps.state
        # joint state (fwd (x) H + rev (x) V)/sqrt(2) projected onto <post|
        amps = (post.amp_h.conjugate() * fwd.amplitudes
                + post.amp_v.conjugate() * rev.amplitudes) / math.sqrt(2.0)
        chi = WaveFunction(psi.grid, amps, POSITION)
        prob = chi.norm_squared()
        if prob < 1e-12:
            raise PostSelectionError(
                f"post-selection survival probability {prob:.3e} is degenerate")
        return chi.normalized(), prob

    m = moments(psi)
    delta_x = math.sqrt(m.var_x)
    delta_p = math.sqrt(m.var_p)
    w0 = 2.0 * delta_x
    n = geom.n_sensors
    tbar = kicks.theta_bar
    a_w = weak_value(ps)
    comp = g_params(geom, kicks)
    kappa = (geom.z_bar / (2.0 * k)) * n**2 * tbar \
        + (geom.z_bar / (2.0 * k) + geom.lead_in / k) * n * tbar

    amplified = abs(a_w) * (geom.z_bar / (2.0 * k)) * n**2 * abs(tbar) * delta_p
    if amplified >= GUARD_AMPLIFIED_SHIFT:
        raise RegimeError(
            f"amplified displacement metric {amplified:.3g} exceeds "
            f"{GUARD_AMPLIFIED_SHIFT}; use exact_grid")
    if n * abs(tbar) * delta_x >= GUARD_KICK_SPREAD:
        raise RegimeError(
            f"accumulated kick metric {n * abs(tbar) * delta_x:.3g} exceeds "
            f"{GUARD_KICK_SPREAD}; use exact_grid")
    if any(abs(t) * w0 >= GUARD_SINGLE_KICK for t in kicks.thetas):
        raise RegimeError(
            f"a single kick times the beam width exceeds {GUARD_SINGLE_KICK}; "
            f"use exact_grid")

    pos = psi.to_position()
    x = psi.grid.positions
    p_psi = WaveFunction(psi.grid,
                         psi.grid.momenta * psi.to_momentum().amplitudes,
                         MOMENTUM).to_position()
    amps = (pos.amplitudes
            - 1j * a_w * kappa * p_psi.amplitudes
            - 1j * (comp.g1 - comp.g2) / (2.0 * k) * p_psi.amplitudes
            - 1j * a_w * n * tbar * x * pos.amplitudes)
    bracket = WaveFunction(psi.grid, amps, POSITION)
    survival = abs(ps.state.inner(PolarizationState.diagonal())) ** 2
    prob = survival * bracket.norm_squared()
    out = bracket.normalized()
    if geom.z_total > 0:
        out = apply_propagation(out, geom.z_total, k).to_position()
    return out, prob


def first_order_momentum_shift(geom: NetworkGeometry, var_p: float,
                               ps: PostSelection, theta_bar: float) -> float:
    """Linear-response momentum shift of the post-selected probe.

    2 cot(eps) VarP [ (zbar/2k) N^2 + (zbar/2k + z_in/k) N ] tbar.  The
    lead-out path drops out exactly (it commutes with the momentum readout),
    and cot(eps) is the exact first-order gain; quoting 1/eps instead is the
    small-epsilon shorthand.
    """
    k = geom.wave_number
    n = geom.n_sensors
    bracket = (geom.z_bar / (2.0 * k)) * n**2 \
        + (geom.z_bar / (2.0 * k) + geom.lead_in / k) * n
    return 2.0 / math.tan(ps.epsilon) * var_p * bracket * theta_bar


def momentum_readout(psi_f: WaveFunction, readout: ReadoutModel,
                     wave_number: float) -> tuple[float, float]:
    """Beam-centroid observable (f/k) P at the detector plane.

    Returns (mean, spread) of the measured displacement; for the Gaussian
    probe the spread is the constant f/(w0 k).
    """
    psi_f.require_normalized()
    m = moments(psi_f)
    scale = readout.focal_length / wave_number
    return scale * m.mean_p, scale * math.sqrt(m.var_p)


def min_detectable_tilt(geom: NetworkGeometry, delta_p: float,
                        ps: PostSelection) -> tuple[float, float]:
    """Single-shot detection threshold where signal equals spread.

    delta_theta_min = (k eps / (zbar DeltaP)) / (N^2 + (1 + 2 z_in/zbar) N);
    returns (delta_theta_min, delta_phi_min) with phi = theta/k.
    """
    if not delta_p > 0:
        raise ValueError("delta_p must be positive")
    k = geom.wave_number
    n = geom.n_sensors
    denom = n**2 + (1.0 + 2.0 * geom.lead_in / geom.z_bar) * n
    d_theta = (k * abs(ps.epsilon) / (geom.z_bar * delta_p)) / denom
    return d_theta, d_theta / k


def qpd_signal(phi_bar: float, geom: NetworkGeometry, waist_radius: float,
               ps: PostSelection, readout: ReadoutModel) -> tuple[float, float]:
    """Differential detector signal for an average beam tilt phi_bar.

    I_delta = zbar I0 / (2 slope eps w0) * [N^2 + (1 + 2 z_in/zbar) N] *
    phi_bar, obtained by inverting the detector's centroid relation at the
    received radius 2f/(w0 k); V_delta is the electrical output gain *
    I_delta.  Valid in the same small-signal regime as the linearized
    evolution.
    """
    n = geom.n_sensors
    bracket = n**2 + (1.0 + 2.0 * geom.lead_in / geom.z_bar) * n
    i_delta = (geom.z_bar * readout.total_power
               / (2.0 * readout.position_slope * ps.epsilon * waist_radius)) \
        * bracket * phi_bar
    return i_delta, readout.qpd_gain * i_delta


# -- wave-plate compensation -----------------------------------------------------


SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
QWP_JONES = np.array([[1.0, 0.0], [0.0, 1j]])
HWP_JONES = np.array([[1.0, 0.0], [0.0, -1.0]])


def rotation_y(angle: float) -> np.ndarray:
    return math.cos(angle) * np.eye(2) - 1j * math.sin(angle) * SIGMA_Y


def rotation_z(angle: float) -> np.ndarray:
    return math.cos(angle) * np.eye(2) - 1j * math.sin(angle) * SIGMA_Z


def quarter_wave_plate(angle: float) -> np.ndarray:
    """QWP with fast axis at `angle` from horizontal."""
    return rotation_y(angle) @ QWP_JONES @ rotation_y(-angle)


def half_wave_plate(angle: float) -> np.ndarray:
    """HWP with fast axis at `angle` from horizontal."""
    return rotation_y(angle) @ HWP_JONES @ rotation_y(-angle)


def euler_plate_angles(phi: float, xi: float, zeta: float
                       ) -> tuple[float, float, float]:
    """QWP-HWP-QWP fast-axis angles realizing R_y(phi) R_z(-xi) R_y(zeta)."""
    qwp1 = phi - 0.25 * math.pi
    hwp = 0.5 * (phi + xi - zeta) - 0.25 * math.pi
    qwp2 = -zeta - 0.25 * math.pi
    return qwp1, hwp, qwp2


def waveplate_compensation(delta_theta: float) -> tuple[float, float, float]:
    """Plate angles canceling a relative phase delta_theta between H and V.

    The compensation unitary is R_z(-delta_theta/2); in the sandwich both
    quarter-wave plates sit at -45 degrees and the half-wave plate at
    delta_theta/4 - 45 degrees.
    """
    return euler_plate_angles(0.0, 0.5 * delta_theta, 0.0)


def sandwich_jones(angles: tuple[float, float, float]) -> np.ndarray:
    """Jones matrix of the QWP-HWP-QWP sandwich at the given fast-axis angles."""
    qwp1, hwp, qwp2 = angles
    return quarter_wave_plate(qwp1) @ half_wave_plate(hwp) @ quarter_wave_plate(qwp2)


def max_difference_up_to_phase(a: np.ndarray, b: np.ndarray) -> float:
    """Largest entry difference after aligning the global phases of a and b."""
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(a[idx]) < 1e-15:
        return float(np.max(np.abs(a - b)))
    phase = b[idx] / a[idx]
    phase /= abs(phase)
    return float(np.max(np.abs(a * phase - b)))
