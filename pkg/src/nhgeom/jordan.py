"""Jordan chains at defective degeneracies and EP dispersion diagnostics.

At an exceptional point the coalesced eigenvalue carries a rank-2 Jordan
block: a right chain (psi0, chi) with (H - E) chi = psi0 and a left chain
(phi0, eta) acting from the right.  The directional matrix element
<phi0| dH |psi0> decides whether a parameter direction couples to the
defective channel; combined with a numerical fit of the eigenvalue
splitting it discriminates linear (Dirac-cone) dispersion from the
square-root splitting of conventional EPs.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    NoDoubleEigenvalueError,
    NotDefectiveError,
)
from .linalg import matrix_scale, null_space, solve_linear
from .spectral import EPKind, Phase, classify_phase

# Window (relative to ||H||) within which two eigenvalues count as the
# double eigenvalue: a numerically represented EP splits its pair by
# ~ sqrt(machine eps), so this sits well above that floor.
DOUBLE_EV_TOL = 1e-6
KERNEL_RANK_TOL = 1e-8

# Radii and fit basis for the splitting fit |E+ - E-|(r).  The basis
# carries Taylor powers up to r^5 so the sqrt(r) amplitude of an analytic
# (EP-free) splitting does not soak up curvature, plus a constant term to
# absorb the small offset induced by a located-not-exact EP; with this
# ladder the residual sqrt amplitude at a Dirac point stays ~ 2e-7
# normalized even for location errors of 1e-8.
FIT_RADII = (2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4, 3.125e-4)
FIT_POWERS = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0)
DIRAC_SQRT_AMP_TOL = 1e-6
NEIGHBOR_RADIUS = 1e-2


@dataclass(frozen=True)
class JordanChain:
    energy: complex
    psi0: np.ndarray  # right eigenvector, unit norm
    chi: np.ndarray  # right generalized vector, psi0 component removed
    phi0: np.ndarray  # left eigenvector (row covector)
    eta: np.ndarray  # left generalized vector (row covector)
    residuals: tuple  # (A psi0, A chi - psi0, phi0 A, eta A - phi0) norms
    gauge_record: dict


@dataclass(frozen=True)
class DispersionDiagnostic:
    angle: float
    a_coefficient: complex  # <phi0| dH(phi) |psi0> in the recorded gauge
    sqrt_coefficient: complex  # predicted Puiseux amplitude 2 sqrt(A/<eta|psi0>)
    splitting_fit: tuple  # (linear slope, sqrt amplitude), raw fit
    normalized_sqrt_amplitude: float  # sqrt amplitude of the unit-scaled fit


def _canonical_phase(v, tol=1e-12):
    """Rotate v so its first non-negligible component is real positive."""
    idx = next((i for i, x in enumerate(v) if abs(x) > tol), 0)
    ph = v[idx] / abs(v[idx]) if abs(v[idx]) > 0 else 1.0
    return v / ph


def jordan_chain(h, energy):
    """Right and left Jordan chains of `h` at the double eigenvalue `energy`.

    Raises NoDoubleEigenvalueError if fewer than two eigenvalues fall in
    the degeneracy window around `energy`, NotDefectiveError if the
    degeneracy is diagonalizable (two-dimensional kernel).
    """
    h = np.asarray(h, dtype=complex)
    scale = matrix_scale(h)
    w = np.linalg.eigvals(h)
    close = np.abs(w - energy) <= DOUBLE_EV_TOL * scale
    if np.count_nonzero(close) < 2:
        raise NoDoubleEigenvalueError(
            f"energy {energy} matches {np.count_nonzero(close)} eigenvalue(s) "
            f"of spectrum {np.sort_complex(w)}"
        )

    a = h - energy * np.eye(h.shape[0])
    kernel = null_space(a, rank_tol=KERNEL_RANK_TOL)
    if len(kernel) != 1:
        raise NotDefectiveError(
            f"kernel of (H - E) is {len(kernel)}-dimensional: the degeneracy "
            "is diagonalizable" if len(kernel) > 1 else
            "no numerical kernel at the given energy"
        )
    psi0 = _canonical_phase(kernel[0])

    chi, _ = solve_linear(a, psi0)
    chi = chi - (psi0.conj() @ chi) * psi0

    left_kernel = null_space(a.conj().T, rank_tol=KERNEL_RANK_TOL)
    if len(left_kernel) != 1:
        raise NotDefectiveError("left kernel dimension != 1")
    phi0 = _canonical_phase(left_kernel[0]).conj()  # row covector
    eta_col, _ = solve_linear(a.conj().T, phi0.conj())
    eta = eta_col.conj()

    # Fix the chain gauge: scale the left pair so <eta|psi0> = 1.
    c = complex(eta @ psi0)
    gauge = {"psi0_norm": 1.0, "eta_psi0_raw": c}
    if abs(c) > 1e-12:
        phi0 = phi0 / c
        eta = eta / c
        gauge["left_scale"] = 1.0 / c

    residuals = (
        float(np.linalg.norm(a @ psi0)),
        float(np.linalg.norm(a @ chi - psi0)),
        float(np.linalg.norm(phi0 @ a)),
        float(np.linalg.norm(eta @ a - phi0)),
    )
    return JordanChain(
        energy=complex(energy),
        psi0=psi0,
        chi=chi,
        phi0=phi0,
        eta=eta,
        residuals=residuals,
        gauge_record=gauge,
    )


def a_coefficient(chain, dh):
    """Directional matrix element <phi0| dH |psi0> in the recorded gauge.

    Its magnitude depends on the chain normalization; vanishing or not is
    gauge invariant.
    """
    dh = np.asarray(dh, dtype=complex)
    if dh.shape != (chain.psi0.shape[0], chain.psi0.shape[0]):
        raise DimensionMismatchError(
            f"dH shape {dh.shape} does not match chain dimension {chain.psi0.shape[0]}"
        )
    return complex(chain.phi0 @ dh @ chain.psi0)


def _splitting(family, ep, phi, r):
    p = (ep.point.q1 + r * math.cos(phi), ep.point.q2 + r * math.sin(phi))
    w = np.linalg.eigvals(family.matrix(p))
    idx = np.argsort(np.abs(w - ep.coalesced_energy))[:2]
    return float(abs(w[idx[0]] - w[idx[1]]))


def _fit_splitting(radii, values):
    rs = np.asarray(radii, dtype=float)
    design = np.column_stack([rs ** p for p in FIT_POWERS])
    coef, _, _, _ = np.linalg.lstsq(design, np.asarray(values, dtype=float), rcond=None)
    sqrt_amp = float(coef[FIT_POWERS.index(0.5)])
    lin_slope = float(coef[FIT_POWERS.index(1.0)])
    return lin_slope, sqrt_amp


def sqrt_coefficient(family, ep, phi):
    """Dispersion diagnostic at a located EP along direction `phi`.

    Combines the analytic defective-channel element <phi0|dH(phi)|psi0>
    (gauge fixed by <eta|psi0> = 1, so the predicted Puiseux splitting is
    2 sqrt(A r)) with a numerical fit of the eigenvalue splitting over
    FIT_RADII.  The normalized sqrt amplitude refits the splitting scaled
    by its value at the largest radius, which is what the Dirac/
    conventional classifier thresholds.
    """
    chain = jordan_chain(family.matrix(ep.point), ep.coalesced_energy)
    dh = family.directional_derivative(ep.point, phi)
    a_val = a_coefficient(chain, dh)
    predicted = 2.0 * cmath.sqrt(a_val)

    values = [_splitting(family, ep, phi, r) for r in FIT_RADII]
    lin, sq = _fit_splitting(FIT_RADII, values)
    s_ref = values[0]
    if s_ref > 0:
        _, sq_norm = _fit_splitting(FIT_RADII, [v / s_ref for v in values])
    else:
        sq_norm = 0.0
    return DispersionDiagnostic(
        angle=float(phi),
        a_coefficient=a_val,
        sqrt_coefficient=predicted,
        splitting_fit=(lin, sq),
        normalized_sqrt_amplitude=abs(sq_norm),
    )


def classify_ep(family, ep, angle_samples=8):
    """Dirac vs conventional classification of a located EP.

    Dirac requires a vanishing normalized sqrt(r) splitting amplitude in
    every sampled direction AND a purely PT-unbroken neighborhood;
    anything else is conventional.
    """
    if angle_samples < 4:
        raise ValueError("need at least 4 angle samples")
    for k in range(angle_samples):
        phi = 2 * math.pi * k / angle_samples
        diag = sqrt_coefficient(family, ep, phi)
        if diag.normalized_sqrt_amplitude > DIRAC_SQRT_AMP_TOL:
            return EPKind.CONVENTIONAL
        neighbor = (
            ep.point.q1 + NEIGHBOR_RADIUS * math.cos(phi),
            ep.point.q2 + NEIGHBOR_RADIUS * math.sin(phi),
        )
        if classify_phase(family, neighbor).label is not Phase.UNBROKEN:
            return EPKind.CONVENTIONAL
    return EPKind.DIRAC
