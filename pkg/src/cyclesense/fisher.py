"""Quantum Fisher information matrices and Cramer-Rao bounds.

The traversal imprints the two shift weights (g1, g2) on the probe, and the
network average tilt is the scalar function tbar = (g1+g2)/(N(N+1)zbar) of
them.  This module evaluates the 2x2 information matrix of (g1, g2) for all
query strategies from closed forms in the initial-probe moments, projects it
onto tbar for the bound, and provides an independent finite-difference
evaluation on grid states as the numerical oracle for every closed form.

For a pure family |psi(g)> the matrix entries are

    Q_jl = 4 Re[ <d_j psi|d_l psi> - <d_j psi|psi><psi|d_l psi> ],

evaluated here with central differences.  The order-switched mixed state
keeps its two branches orthogonal through the ancilla label with constant
weights, so its matrix is the weight-average of the branch matrices; that
shortcut replaces any general logarithmic-derivative machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, EstimabilityError
from .grid import Moments, ProbeSpec, WaveFunction, overlap

#: eigenvalues below RANK_TOL * max(eigenvalue) are treated as zero.
RANK_TOL = 1e-10


@dataclass(frozen=True)
class JointState:
    """Probe-ancilla state as a weighted branch pair.

    branch_plus / branch_minus are the forward- and reverse-order probe
    states (each normalized, with any dynamic phase folded into the
    amplitudes).  weights are the ancilla populations; coherence is the
    off-diagonal ancilla weight a0 * conj(a1) (1/2 for the balanced control
    qubit, 0 for the classical mixture).  ancilla_labeled records whether
    the ancilla label survives to the measurement: with the label the mixed
    branches stay orthogonal, without it (probe alone) they generally
    overlap.
    """

    branch_plus: WaveFunction
    branch_minus: Optional[WaveFunction]
    weights: tuple[float, float]
    coherence: complex
    ancilla_labeled: bool = True

    def __post_init__(self):
        w0, w1 = self.weights
        if w0 < 0 or w1 < 0 or abs(w0 + w1 - 1.0) > 1e-9:
            raise ValueError(f"branch weights must be a distribution, got {self.weights}")
        if abs(self.coherence) > np.sqrt(w0 * w1) + 1e-9:
            raise ValueError("ancilla coherence violates positivity")
        if self.branch_minus is None and w1 != 0.0:
            raise ValueError("missing reverse branch with nonzero weight")

    @property
    def is_pure(self) -> bool:
        w0, w1 = self.weights
        if w1 == 0.0 or w0 == 0.0:
            return True
        return abs(abs(self.coherence) - np.sqrt(w0 * w1)) <= 1e-9


def joint_overlap(a: JointState, b: JointState) -> complex:
    """<A|B> of two pure joint states sharing the same ancilla."""
    if a.weights != b.weights:
        raise ValueError("joint states carry different branch weights")
    w0, w1 = a.weights
    val = w0 * overlap(a.branch_plus, b.branch_plus)
    if w1 != 0.0:
        val += w1 * overlap(a.branch_minus, b.branch_minus)
    return val


@dataclass(frozen=True)
class Qfim2:
    """Symmetric 2x2 information matrix over the shift weights (g1, g2)."""

    q11: float
    q12: float
    q22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.q11, self.q12], [self.q12, self.q22]])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.as_array())

    def is_psd(self, tol: float = RANK_TOL) -> bool:
        tr = abs(self.q11) + abs(self.q22)
        return bool(np.all(self.eigenvalues() >= -tol * max(tr, 1e-300)))

    @classmethod
    def from_array(cls, q: np.ndarray) -> "Qfim2":
        if q.shape != (2, 2) or abs(q[0, 1] - q[1, 0]) > 1e-9 * (abs(q[0, 1]) + 1e-300):
            raise ValueError("expected a symmetric 2x2 array")
        return cls(float(q[0, 0]), 0.5 * float(q[0, 1] + q[1, 0]), float(q[1, 1]))


@dataclass(frozen=True)
class QcrbReport:
    """Variance bound on the network-average kick tbar for one strategy."""

    strategy: object
    n_sensors: int
    bound_on_theta_bar: float
    trials: int = 1

    def __post_init__(self):
        if not self.bound_on_theta_bar > 0:
            raise ValueError("bound must be positive")
        if self.trials < 1:
            raise ValueError("trials must be a positive integer")

    @property
    def scaled_bound(self) -> float:
        """bound * N^4; converges for the switched strategies."""
        return self.bound_on_theta_bar * self.n_sensors**4

    @property
    def per_shot_precision(self) -> float:
        return float(np.sqrt(self.bound_on_theta_bar))

    @property
    def precision(self) -> float:
        return float(np.sqrt(self.trials * self.bound_on_theta_bar))


@dataclass(frozen=True)
class GeneratorMoments:
    """Initial-probe moments plus the evolution scalars the closed forms need."""

    var_x: float
    var_p: float
    cov_xp: float
    mean_p: float
    wave_number: float
    z_bar: float
    n_sensors: int
    g1: float = 0.0
    g2: float = 0.0

    def __post_init__(self):
        if not (self.var_x > 0 and self.var_p > 0):
            raise ValueError("variances must be positive")
        if not (self.wave_number > 0 and self.z_bar > 0 and self.n_sensors >= 1):
            raise ValueError("need positive wave number, spacing and sensor count")

    @property
    def span(self) -> float:
        """(N+1) * zbar, the in-network path length."""
        return (self.n_sensors + 1) * self.z_bar

    @classmethod
    def from_moments(cls, m: Moments, wave_number: float, z_bar: float,
                     n_sensors: int, g1: float = 0.0, g2: float = 0.0
                     ) -> "GeneratorMoments":
        return cls(m.var_x, m.var_p, m.cov_xp, m.mean_p,
                   wave_number, z_bar, n_sensors, g1, g2)

    @classmethod
    def from_probe_spec(cls, spec: ProbeSpec, z_bar: float, n_sensors: int,
                        g1: float = 0.0, g2: float = 0.0) -> "GeneratorMoments":
        """Analytic Gaussian moments: Var X = w0^2/4, Var P = 1/w0^2, Cov = 0."""
        return cls(spec.delta_x**2, spec.delta_p**2, 0.0, spec.center_p,
                   spec.wave_number, z_bar, n_sensors, g1, g2)


# -- closed forms ---------------------------------------------------------------


def qfim_sequential(gm: GeneratorMoments) -> Qfim2:
    """Information matrix of a fixed-order traversal (pure final state)."""
    u = 1.0 / gm.span
    k = gm.wave_number
    a = gm.var_x * u**2
    b = gm.var_p / k**2
    c = gm.cov_xp * u / k
    return Qfim2(4.0 * (a + b + 2.0 * c), 4.0 * (a + c), 4.0 * a)


def qfim_quantum_switch(gm: GeneratorMoments) -> Qfim2:
    """Information matrix with the control qubit in the balanced superposition.

    The momentum-generator brackets carry the g-dependent displacements
    [<P>/2k - g2/(2k(N+1)zbar)] and [<P>/2k - g1/(2k(N+1)zbar)]; only these
    branch-asymmetric scalars survive in the variances (branch-symmetric
    scalars are pure gauge), which the finite-difference oracle confirms.
    """
    u = 1.0 / gm.span
    k = gm.wave_number
    base = gm.var_x * u**2 + gm.cov_xp * u / k
    half_p = gm.var_p / (2.0 * k**2)
    bracket1 = gm.mean_p / (2.0 * k) - gm.g2 * u / (2.0 * k)
    bracket2 = gm.mean_p / (2.0 * k) - gm.g1 * u / (2.0 * k)
    var1 = base + half_p + bracket1**2
    var2 = base + half_p + bracket2**2
    cov12 = base - bracket1 * bracket2
    return Qfim2(4.0 * var1, 4.0 * cov12, 4.0 * var2)


def qfim_classical_switch(gm: GeneratorMoments) -> Qfim2:
    """Information matrix of the balanced classical order mixture.

    Equal to the arithmetic mean of the forward- and reverse-order
    sequential matrices: the ancilla label keeps the branches orthogonal and
    the weights carry no parameter dependence.
    """
    u = 1.0 / gm.span
    k = gm.wave_number
    a = gm.var_x * u**2
    b = gm.var_p / k**2
    c = gm.cov_xp * u / k
    diag = a + 0.5 * b + c
    return Qfim2(4.0 * diag, 4.0 * (a + c), 4.0 * diag)


def probe_alone_qfim_at_origin(gm: GeneratorMoments) -> Qfim2:
    """Singular information matrix of the traced-out mixture at g = 0.

    Var(H0) * [[1, 1], [1, 1]] with H0 = P/k + 2X/((N+1)zbar): only the sum
    g1 + g2 is estimable from the probe alone.
    """
    v = _var_h0(gm)
    return Qfim2(v, v, v)


def _var_h0(gm: GeneratorMoments) -> float:
    u = 1.0 / gm.span
    k = gm.wave_number
    return gm.var_p / k**2 + 4.0 * gm.var_x * u**2 + 4.0 * gm.cov_xp * u / k


def probe_alone_qfi_at_origin(gm: GeneratorMoments, trials: int = 1,
                              strategy=None) -> QcrbReport:
    """Bound on tbar from the mixed probe alone, in the small-signal regime.

    1 / (N^2 (N+1)^2 zbar^2 Var(H0)); coincides exactly with the
    classical-switch bound.
    """
    n = gm.n_sensors
    bound = 1.0 / (n**2 * gm.span**2 * _var_h0(gm))
    return QcrbReport(strategy if strategy is not None else "probe_alone",
                      n, bound, trials)


def qcrb_global(q: Qfim2, n_sensors: int, z_bar: float, trials: int = 1,
                strategy=None) -> QcrbReport:
    """Project the (g1, g2) information matrix onto the average kick tbar.

    Computes G Q^-1 G^T with the Jacobian G = [1, 1]/(N(N+1)zbar).  A
    singular matrix is inverted on its range only; if the Jacobian has a
    component along the null space the scalar is not estimable and the call
    raises EstimabilityError.
    """
    w = 1.0 / (n_sensors * (n_sensors + 1) * z_bar)
    jac = np.array([w, w])
    arr = q.as_array()
    evals, evecs = np.linalg.eigh(arr)
    cut = RANK_TOL * max(abs(evals).max(), 1e-300)
    keep = evals > cut
    if not np.any(keep):
        raise EstimabilityError("information matrix is zero; nothing is estimable")
    if not np.all(keep):
        null_part = jac @ evecs[:, ~keep]
        if np.linalg.norm(null_part) > 1e-9 * np.linalg.norm(jac):
            raise EstimabilityError(
                "average kick is not estimable: Jacobian leaves the row space "
                "of the singular information matrix")
    proj = jac @ evecs[:, keep]
    bound = float(np.sum(proj**2 / evals[keep]))
    return QcrbReport(strategy, n_sensors, bound, trials)


# -- finite-difference oracle ----------------------------------------------------


StateBuilder = Callable[[float, float], JointState]


def _pure_qfim_fd(builder: StateBuilder, at: tuple[float, float],
                  steps: tuple[float, float]) -> np.ndarray:
    g1, g2 = at
    h1, h2 = steps
    center = builder(g1, g2)

    def raw_diff(plus: JointState, minus: JointState, h: float):
        dp = (plus.branch_plus.to_position().amplitudes
              - minus.branch_plus.to_position().amplitudes) / (2 * h)
        dm = None
        if plus.branch_minus is not None:
            dm = (plus.branch_minus.to_position().amplitudes
                  - minus.branch_minus.to_position().amplitudes) / (2 * h)
        return dp, dm

    d1 = raw_diff(builder(g1 + h1, g2), builder(g1 - h1, g2), h1)
    d2 = raw_diff(builder(g1, g2 + h2), builder(g1, g2 - h2), h2)
    w0, w1 = center.weights
    dx = center.branch_plus.grid.dx
    c_plus = center.branch_plus.to_position().amplitudes
    c_minus = (center.branch_minus.to_position().amplitudes
               if center.branch_minus is not None else None)

    def ip(a, b) -> complex:
        val = w0 * np.vdot(a[0], b[0]) * dx
        if w1 != 0.0 and a[1] is not None:
            val += w1 * np.vdot(a[1], b[1]) * dx
        return complex(val)

    cen = (c_plus, c_minus)
    ders = (d1, d2)
    q = np.empty((2, 2))
    for j in range(2):
        for l in range(2):
            q[j, l] = 4.0 * np.real(ip(ders[j], ders[l])
                                    - ip(ders[j], cen) * ip(cen, ders[l]))
    return 0.5 * (q + q.T)


def qfim_numerical(builder: StateBuilder, at: tuple[float, float] = (0.0, 0.0),
                   step: Optional[float] = None, rel_step: float = 1e-4,
                   max_disagreement: float = 1e-2, richardson: bool = True) -> Qfim2:
    """Finite-difference information matrix of a state family.

    Central differences at step h and h/2 with one Richardson extrapolation
    level; raises ConvergenceError when the two estimates disagree by more
    than max_disagreement in relative Frobenius norm.  The default step is
    rel_step relative to each parameter value (with a floor of rel_step for
    parameters at zero).  Pure families are differentiated jointly; the
    labeled classical mixture is handled as the weight-average of its branch
    matrices, valid because the weights are parameter-independent and the
    label keeps the branches orthogonal.  richardson=False skips the second
    evaluation and the convergence check (plain second-order differences,
    useful for step-scaling studies).
    """
    probe = builder(*at)
    if not probe.is_pure:
        if not probe.ancilla_labeled:
            raise EstimabilityError(
                "finite-difference matrix for an unlabeled mixture is not "
                "supported; use the closed form at the origin instead")
        w0, w1 = probe.weights

        def fwd_builder(g1, g2):
            s = builder(g1, g2)
            return JointState(s.branch_plus, None, (1.0, 0.0), 0.0)

        def rev_builder(g1, g2):
            s = builder(g1, g2)
            return JointState(s.branch_minus, None, (1.0, 0.0), 0.0)

        qf = qfim_numerical(fwd_builder, at, step, rel_step, max_disagreement,
                            richardson)
        qr = qfim_numerical(rev_builder, at, step, rel_step, max_disagreement,
                            richardson)
        arr = w0 * qf.as_array() + w1 * qr.as_array()
        return Qfim2.from_array(arr)

    if step is not None:
        steps = (float(step), float(step))
    else:
        steps = (rel_step * max(abs(at[0]), 1.0), rel_step * max(abs(at[1]), 1.0))
    q_h = _pure_qfim_fd(builder, at, steps)
    if not richardson:
        return Qfim2.from_array(q_h)
    q_h2 = _pure_qfim_fd(builder, at, (0.5 * steps[0], 0.5 * steps[1]))
    scale = np.linalg.norm(q_h2)
    if scale == 0.0:
        raise ConvergenceError("finite-difference matrix vanished identically")
    disagreement = np.linalg.norm(q_h2 - q_h) / scale
    if disagreement > max_disagreement:
        raise ConvergenceError(
            f"central-difference estimates at h and h/2 disagree by "
            f"{disagreement:.3e} (limit {max_disagreement:g}); refine the grid "
            f"or the step")
    return Qfim2.from_array((4.0 * q_h2 - q_h) / 3.0)
