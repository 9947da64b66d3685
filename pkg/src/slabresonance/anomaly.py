"""Closed-form anomaly lineshapes compared against exact scattering.

The transmission near a guided mode follows a ratio of the fitted zero-curve
polynomials times a slowly varying background.  Case 1 (traveling mode,
nonzero linear coefficient) uses the quotient formula with a linearized
background; case 2 (standing mode) uses the energy-split ratio form, which is
bounded in [0, 1] by construction and reduces to the classic two-parameter
Fano shape when the background is flat and the quadratic coefficients are
real and balanced.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .expansion import ExpansionCoefficients
from .lattice import LatticeConfig, SpectralPoint
from .modes import GuidedMode, omega_root
from .scattering import field_enhancement, solve_scattering

FANO_CONDITION_TOL = 1e-3


@dataclass(frozen=True)
class AnomalyPrediction:
    """Model transmission curve at fixed kappa plus derived features."""

    kappa: float
    omega: np.ndarray
    model: np.ndarray
    omega_peak: float
    omega_dip: float
    fano: dict | None = field(default=None)


def formula_case1(coeffs: ExpansionCoefficients, kappa: float, omega) -> np.ndarray:
    """Case-1 transmission model, clipped to [0, 1].

    t0 * |vp + l1 kt + t2 kt^2| / |vp + l1 kt + l2 kt^2|
       * (1 + eta1 vp + eta2 kt),   vp = omega - omega0, kt = kappa - kappa0.

    The linear background factor can exceed 1 far from the expansion center;
    clipping confines the formula to its asymptotic domain.
    """
    c = coeffs
    kt = kappa - c.kappa0
    vp = np.asarray(omega, dtype=float) - c.omega0
    l1 = c.l1.real
    num = np.abs(vp + l1 * kt + c.t2 * kt * kt)
    den = np.abs(vp + l1 * kt + c.l2 * kt * kt)
    if np.any(den < 1e-14):
        raise ConvergenceError(
            "case-1 denominator vanished: expansion center on the zero curve"
        )
    val = c.t0 * num / den * (1.0 + c.eta1 * vp + c.eta2 * kt)
    return np.clip(val, 0.0, 1.0)


def formula_case2(coeffs: ExpansionCoefficients, kappa: float, omega) -> np.ndarray:
    """Case-2 transmission model: square root of the energy-split ratio."""
    c = coeffs
    kt = kappa - c.kappa0
    vp = np.asarray(omega, dtype=float) - c.omega0
    num = c.t0**2 * np.abs(vp + c.t2 * kt * kt) ** 2 * (1.0 + c.eta * vp) ** 2
    den = c.r0**2 * np.abs(vp + c.r2 * kt * kt) ** 2 + num
    with np.errstate(invalid="ignore"):
        out = np.sqrt(num / den)
    # exactly at the mode both terms vanish; continuity gives t0
    out = np.where(den < 1e-28, c.t0, out)
    return out if out.ndim else float(out)


def model_transmission(coeffs: ExpansionCoefficients, kappa: float, omega):
    if coeffs.case == 2:
        return formula_case2(coeffs, kappa, omega)
    return formula_case1(coeffs, kappa, omega)


def peak_dip_locations(coeffs: ExpansionCoefficients, kappa: float):
    """Predicted full-transmission and zero-transmission frequencies.

    The peak rides the zero curve of the scaled reflection, the dip that of
    the scaled transmission; both share the linear coefficient l1.
    """
    c = coeffs
    kt = kappa - c.kappa0
    l1 = c.l1.real
    omega_peak = c.omega0 - l1 * kt - c.r2.real * kt * kt
    omega_dip = c.omega0 - l1 * kt - c.t2.real * kt * kt
    return float(omega_peak), float(omega_dip)


def anomaly_window(coeffs: ExpansionCoefficients, kappa: float,
                   width_factor: float = 20.0):
    """Frequency window centered on the moving anomaly, width ~ kt^2."""
    c = coeffs
    kt = kappa - c.kappa0
    center = c.omega0 - c.l1.real * kt
    half = width_factor * max(abs(c.l2), abs(c.r2), abs(c.t2)) * kt * kt
    return center - half, center + half


def fano_reduce(coeffs: ExpansionCoefficients, kappa_tilde: float) -> dict:
    """Reduction of the case-2 form to the two-parameter Fano shape.

    Conditions: (1) r2 and t2 real, (2) flat background, (3) balanced
    quadratic coefficients r0^2 r2 + t0^2 t2 = 0.  When all three residuals
    pass the tolerance the width Gamma (at the supplied kt) and asymmetry q
    are returned; otherwise only the residuals are reported.
    """
    c = coeffs
    scale2 = max(abs(c.r2), abs(c.t2), 1e-300)
    residuals = (
        max(abs(c.r2.imag), abs(c.t2.imag)) / scale2,
        abs(c.eta),
        abs(c.r0**2 * c.r2.real + c.t0**2 * c.t2.real) / scale2,
    )
    report = {
        "condition_residuals": residuals,
        "conditions_met": all(r < FANO_CONDITION_TOL for r in residuals),
    }
    if report["conditions_met"]:
        root = np.hypot(c.r2.real * c.r0, c.t2.real * c.t0)
        report["gamma"] = float(2.0 * kappa_tilde**2 * root)
        report["q"] = float(c.t2.real / root)
        report["sigma_const"] = float(c.t0**2)
        report["omega_res"] = c.omega0
    return report


def fano_shape(omega, omega_res: float, gamma: float, q: float,
               const: float = 1.0):
    """Classic two-parameter resonance profile const*(q+f)^2/(1+f^2)."""
    f = (np.asarray(omega, dtype=float) - omega_res) / (gamma / 2.0)
    return const * (q + f) ** 2 / (1.0 + f**2)


def exact_transmission(config: LatticeConfig, kappa: float, omegas):
    """Exact |T|, |R| and transmission phase on a frequency grid."""
    T = np.empty(len(omegas))
    R = np.empty(len(omegas))
    ph = np.empty(len(omegas))
    for i, om in enumerate(omegas):
        sol = solve_scattering(SpectralPoint(kappa, float(om)), config,
                               strict=False)
        T[i] = abs(sol.transmission)
        R[i] = abs(sol.reflection)
        ph[i] = np.angle(sol.transmission)
    return T, R, ph


def phase_curve(kappa: float, omega_grid, config: LatticeConfig) -> np.ndarray:
    """Unwrapped transmission phase arg(trans/eigval) = arg T over the grid.

    A near-pi step is genuine when the transmission passes through zero
    between the two samples (the phase flips at a real transmission zero);
    anywhere else it means the grid is too coarse to unwrap and raises.
    """
    t_abs, _, raw = exact_transmission(config, kappa, omega_grid)
    wrapped = np.angle(np.exp(1j * np.diff(raw)))
    big = np.abs(wrapped) > 0.9 * np.pi
    if np.any(big):
        # inside a notch (transmission well below its background) a near-pi
        # step is the genuine zero-crossing flip; elsewhere it is aliasing
        floor = 0.35 * np.max(t_abs)
        in_notch = np.minimum(t_abs[:-1], t_abs[1:]) < floor
        if np.any(big & ~in_notch):
            raise ConvergenceError(
                "phase unwrapping unsafe: refine the omega grid"
            )
    return np.concatenate([[raw[0]], raw[0] + np.cumsum(wrapped)])


def enhancement_scaling(config: LatticeConfig, mode: GuidedMode,
                        kappa_list, n_grid: int = 81):
    """log-log slope of the peak field enhancement against |kt|.

    For each kt the enhancement is maximized over a frequency window around
    the complex resonance (center at its real part, width from its imaginary
    part).  Raises on non-monotone peak data, which indicates a window
    problem rather than a scaling violation.
    """
    peaks = []
    om_seed = complex(mode.omega0)
    anchor = mode.nullvector
    for kt in kappa_list:
        samp = omega_root(mode.kappa0 + kt, om_seed, config, anchor)
        center = samp.omega.real
        width = max(abs(samp.omega.imag), 1e-12)
        grid = center + np.linspace(-8.0 * width, 8.0 * width, n_grid)
        vals = [
            field_enhancement(SpectralPoint(mode.kappa0 + kt, om), config)
            for om in grid
        ]
        i = int(np.argmax(vals))
        # golden-section sharpen around the grid peak
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, n_grid - 1)]
        golden = 0.5 * (3.0 - np.sqrt(5.0))
        a, b = lo, hi
        for _ in range(40):
            x1 = a + golden * (b - a)
            x2 = b - golden * (b - a)
            f1 = field_enhancement(SpectralPoint(mode.kappa0 + kt, x1), config)
            f2 = field_enhancement(SpectralPoint(mode.kappa0 + kt, x2), config)
            if f1 < f2:
                a = x1
            else:
                b = x2
        best = field_enhancement(
            SpectralPoint(mode.kappa0 + kt, 0.5 * (a + b)), config
        )
        peaks.append(max(best, vals[i]))
    kts = np.abs(np.asarray(kappa_list, dtype=float))
    order = np.argsort(kts)
    sorted_peaks = np.asarray(peaks)[order]
    # the resonant peak must grow as |kt| shrinks
    if np.any(np.diff(sorted_peaks) >= 0):
        raise ConvergenceError(
            "enhancement peaks not monotone in |kt|: refine the omega window"
        )
    slope = float(np.polyfit(np.log(kts), np.log(peaks), 1)[0])
    return slope, list(zip([float(k) for k in kappa_list], [float(p) for p in peaks]))


def predict(coeffs: ExpansionCoefficients, kappa: float,
            n_grid: int = 401) -> AnomalyPrediction:
    """Model curve over the anomaly window plus peak/dip and Fano data."""
    lo, hi = anomaly_window(coeffs, kappa)
    omega = np.linspace(lo, hi, n_grid)
    model = model_transmission(coeffs, kappa, omega)
    pk, dp = peak_dip_locations(coeffs, kappa)
    fano = None
    if coeffs.case == 2:
        fano = fano_reduce(coeffs, kappa - coeffs.kappa0)
    return AnomalyPrediction(kappa, omega, model, pk, dp, fano)
