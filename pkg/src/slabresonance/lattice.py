"""Discrete wave model: uniform 2D lattice with a periodic defect strip.

The ambient medium is the square lattice with equation
``omega^2 u(m,n) = 4 u(m,n) - u(m+-1,n) - u(m,n+-1)``, so plane waves
``exp(i kappa m + i eta n)`` obey ``omega^2 = 4 sin^2(kappa/2) + 4 sin^2(eta/2)``.
The slab is an x-periodic strip of on-site potential defects, optionally
dressed with pendant sites that are eliminated exactly into a real rational
effective potential.  Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, PendantPoleError, WoodAnomalyError

DISPERSION_TOL = 1e-12
WOOD_GUARD = 1e-9
PENDANT_POLE_TOL = 1e-9


@dataclass(frozen=True)
class Defect:
    """On-site potential shift d at lattice site (x, z), 0 <= x < period."""

    x: int
    z: int
    d: float


@dataclass(frozen=True)
class Pendant:
    """Extra site coupled to defect ``host`` with on-site term mu, coupling g."""

    host: int
    mu: float
    g: float


@dataclass(frozen=True)
class LatticeConfig:
    """Periodic slab: cell period, defect sites, pendant sites.

    All potentials and couplings are real (lossless structure).  ``tunable``
    optionally names one scalar parameter by a dotted path such as
    ``"defects.2.d"``, ``"pendants.0.g"`` or ``"pendants.0.mu"``.
    """

    period: int
    defects: tuple[Defect, ...]
    pendants: tuple[Pendant, ...] = ()
    tunable: str | None = None

    def __post_init__(self):
        if self.period < 1:
            raise ConfigError(f"period must be >= 1, got {self.period}")
        if not self.defects:
            raise ConfigError("config needs at least one defect site")
        seen = set()
        for j, df in enumerate(self.defects):
            if not 0 <= df.x < self.period:
                raise ConfigError(f"defect {j}: x={df.x} outside [0, {self.period})")
            if (df.x, df.z) in seen:
                raise ConfigError(f"defect {j}: duplicate site ({df.x}, {df.z})")
            seen.add((df.x, df.z))
            if not np.isfinite(df.d) or isinstance(df.d, complex):
                raise ConfigError(f"defect {j}: potential must be real and finite")
        for j, pn in enumerate(self.pendants):
            if not 0 <= pn.host < len(self.defects):
                raise ConfigError(f"pendant {j}: host index {pn.host} invalid")
            if not (np.isfinite(pn.mu) and np.isfinite(pn.g)):
                raise ConfigError(f"pendant {j}: mu and g must be finite")
        if self.tunable is not None:
            self.tunable_value  # validates the path

    # -- tunable parameter handle -------------------------------------------

    def _tunable_parts(self):
        if self.tunable is None:
            raise ConfigError("config has no tunable parameter")
        try:
            kind, idx, attr = self.tunable.split(".")
            idx = int(idx)
        except ValueError as exc:
            raise ConfigError(f"bad tunable path {self.tunable!r}") from exc
        if kind == "defects" and attr == "d" and 0 <= idx < len(self.defects):
            return kind, idx, attr
        if kind == "pendants" and attr in ("mu", "g") and 0 <= idx < len(self.pendants):
            return kind, idx, attr
        raise ConfigError(f"tunable path {self.tunable!r} does not resolve")

    @property
    def tunable_value(self) -> float:
        kind, idx, attr = self._tunable_parts()
        return getattr(getattr(self, kind)[idx], attr)

    def with_tunable(self, value: float) -> "LatticeConfig":
        """Copy of the config with the tunable parameter set to ``value``."""
        kind, idx, attr = self._tunable_parts()
        items = list(getattr(self, kind))
        items[idx] = replace(items[idx], **{attr: float(value)})
        return replace(self, **{kind: tuple(items)})

    # -- JSON interface -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeConfig":
        try:
            defects = tuple(
                Defect(int(d["x"]), int(d["z"]), float(d["d"])) for d in data["defects"]
            )
            pendants = tuple(
                Pendant(int(p["host"]), float(p["mu"]), float(p["g"]))
                for p in data.get("pendants", [])
            )
            tunable = data.get("tunable")
            if tunable is not None:
                tunable = tunable["path"] if isinstance(tunable, dict) else str(tunable)
            return cls(int(data["period"]), defects, pendants, tunable)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config data: {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "LatticeConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {
            "period": self.period,
            "defects": [{"x": d.x, "z": d.z, "d": d.d} for d in self.defects],
            "pendants": [{"host": p.host, "mu": p.mu, "g": p.g} for p in self.pendants],
        }
        if self.tunable is not None:
            out["tunable"] = {"path": self.tunable}
        return out

    # -- convenience views ----------------------------------------------------

    @property
    def xs(self) -> np.ndarray:
        return np.array([d.x for d in self.defects])

    @property
    def zs(self) -> np.ndarray:
        return np.array([d.z for d in self.defects])

    @property
    def ds(self) -> np.ndarray:
        return np.array([d.d for d in self.defects])


@dataclass(frozen=True)
class SpectralPoint:
    """A (kappa, omega) pair; either entry may be complex."""

    kappa: complex
    omega: complex


@dataclass(frozen=True)
class OrderSpectrum:
    """Per-order transverse wavenumbers and z-wavenumbers for one point."""

    kappa_p: np.ndarray
    eta: np.ndarray
    propagating: np.ndarray
    point: SpectralPoint = field(repr=False, default=None)


def order_wavenumber(kappa_p: complex, omega: complex) -> complex:
    """z-wavenumber eta for one diffraction order.

    Solves ``4 sin^2(kappa_p/2) + 4 sin^2(eta/2) = omega^2`` on the branch
    that is outgoing for propagating orders and decaying (Im eta > 0) for
    evanescent ones, with the propagating sign fixed by the omega + i0 limit.
    The three regions of w = omega^2/4 - sin^2(kappa_p/2) get separate
    closed forms so that each is analytic across the real axis.
    """
    w = complex((complex(omega) / 2.0) ** 2 - np.sin(complex(kappa_p) / 2.0) ** 2)
    if w.real <= 0.0:
        eta = complex(2j * np.arcsinh(np.sqrt(-w)))
    elif w.real < 1.0:
        eta = complex(2.0 * np.arcsin(np.sqrt(w)))
    else:
        eta = complex(np.pi + 2j * np.arccosh(np.sqrt(w)))
    resid = abs(4 * np.sin(complex(kappa_p) / 2) ** 2 + 4 * np.sin(eta / 2) ** 2
                - complex(omega) ** 2)
    if resid > DISPERSION_TOL:
        raise ArithmeticError(
            f"dispersion residual {resid:.2e} exceeds {DISPERSION_TOL:.0e}"
        )
    return eta


def order_arrays(kappa: complex, omega: complex, period: int):
    """kappa_p, eta_p and 1/(2i sin eta_p) for all orders p in 0..period-1."""
    p = np.arange(period)
    kappa_p = np.asarray(kappa, dtype=complex) + 2.0 * np.pi * p / period
    eta = np.array([order_wavenumber(k, omega) for k in kappa_p])
    sin_eta = np.sin(eta)
    if np.any(np.abs(sin_eta) < 1e-14):
        raise WoodAnomalyError("sin(eta_p) vanishes: order at a branch point")
    return kappa_p, eta, 1.0 / (2j * sin_eta)


def propagating_orders(point: SpectralPoint, period: int) -> OrderSpectrum:
    """Classify all orders at a real (kappa, omega) point.

    Raises WoodAnomalyError when any order is within 1e-9 of a branch point
    (w in {0, 1}); the analysis assumes a fixed number of propagating orders.
    """
    kappa, omega = point.kappa, point.omega
    if abs(np.imag(kappa)) > 0 or abs(np.imag(omega)) > 0:
        raise ValueError("propagating_orders expects real kappa and omega")
    p = np.arange(period)
    kappa_p = np.real(kappa) + 2.0 * np.pi * p / period
    w = (np.real(omega) / 2.0) ** 2 - np.sin(kappa_p / 2.0) ** 2
    if np.any(np.abs(w) < WOOD_GUARD) or np.any(np.abs(w - 1.0) < WOOD_GUARD):
        raise WoodAnomalyError(
            f"order within {WOOD_GUARD:.0e} of its branch point at "
            f"kappa={kappa}, omega={omega}"
        )
    eta = np.array([order_wavenumber(k, omega) for k in kappa_p])
    return OrderSpectrum(kappa_p.astype(complex), eta, (w > 0) & (w < 1), point)


def wood_distance(point: SpectralPoint, period: int) -> float:
    """Smallest distance of any order's w to a branch point {0, 1}."""
    p = np.arange(period)
    kappa_p = np.real(point.kappa) + 2.0 * np.pi * p / period
    w = (np.real(point.omega) / 2.0) ** 2 - np.sin(kappa_p / 2.0) ** 2
    return float(min(np.min(np.abs(w)), np.min(np.abs(w - 1.0))))


def greens_function(point: SpectralPoint, period: int, m: int, n: int) -> complex:
    """Quasi-periodic lattice Green's function G(m, n).

    Kernel of ``(omega^2 - L0)^(-1)`` with outgoing/decaying orders, for the
    quasi-periodic delta source at the origin:

        G(m, n) = (1/N) sum_p exp(i kappa_p m) exp(i eta_p |n|) / (2i sin eta_p)
    """
    kappa_p, eta, tp = order_arrays(point.kappa, point.omega, period)
    return complex(
        np.sum(np.exp(1j * kappa_p * m) * np.exp(1j * eta * abs(n)) * tp) / period
    )


def effective_potential(omega: complex, config: LatticeConfig) -> np.ndarray:
    """Diagonal V_eff(omega) on defect sites; pendants eliminated exactly.

    Each pendant contributes ``g^2 / (omega^2 - mu)`` to its host, which keeps
    V_eff real on the real axis (lossless) and rational in omega^2.
    """
    v = config.ds.astype(complex)
    om2 = np.asarray(omega, dtype=complex) ** 2
    for pn in config.pendants:
        denom = om2 - pn.mu
        if abs(denom) < PENDANT_POLE_TOL * (1.0 + abs(pn.mu)):
            raise PendantPoleError(
                f"omega^2 = {om2} hits pendant resonance mu = {pn.mu}"
            )
        v[pn.host] += pn.g**2 / denom
    return v


def greens_matrix(point: SpectralPoint, config: LatticeConfig) -> np.ndarray:
    """Matrix of Green's values between all defect-site pairs."""
    kappa_p, eta, tp = order_arrays(point.kappa, point.omega, config.period)
    dx = config.xs[:, None] - config.xs[None, :]
    dz = np.abs(config.zs[:, None] - config.zs[None, :])
    phases = np.exp(
        1j * kappa_p[:, None, None] * dx[None, :, :]
        + 1j * eta[:, None, None] * dz[None, :, :]
    )
    return np.einsum("p,pjk->jk", tp, phases) / config.period


def interaction_matrix(point: SpectralPoint, config: LatticeConfig) -> np.ndarray:
    """Finite interaction matrix A = I - G V_eff on the defect sites.

    The total field psi on defect sites solves ``A psi = phi_inc``; A is
    analytic in (kappa, omega) away from branch points and pendant poles.
    """
    g = greens_matrix(point, config)
    v = effective_potential(point.omega, config)
    return np.eye(len(config.defects), dtype=complex) - g * v[None, :]
