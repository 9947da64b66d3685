import numpy as np
import pytest

from slabresonance import (
    Defect,
    LatticeConfig,
    Pendant,
    SpectralPoint,
    extract_coefficients,
    find_real_mode,
    tune_structure,
)
from slabresonance.lattice import propagating_orders
from slabresonance.errors import WoodAnomalyError

CASE2 = LatticeConfig(
    period=3,
    defects=(Defect(0, 0, -1.9), Defect(1, 0, -1.9)),
)

CASE1_SEED = LatticeConfig(
    period=3,
    defects=(
        Defect(0, -1, -3.0),
        Defect(0, 0, -0.9),
        Defect(0, 1, -3.0),
        Defect(1, 0, -0.12),
    ),
    pendants=(Pendant(3, 0.5, 0.15),),
    tunable="pendants.0.g",
)


@pytest.fixture(scope="session")
def case2_config():
    return CASE2


@pytest.fixture(scope="session")
def case1_seed_config():
    return CASE1_SEED


@pytest.fixture(scope="session")
def case2_mode(case2_config):
    mode = find_real_mode(case2_config, (-0.25, 0.25), (1.3, 1.7))
    assert mode is not None
    return mode


@pytest.fixture(scope="session")
def case1_tuned(case1_seed_config):
    """(tuned config, mode) produced once per session by the tuner."""
    return tune_structure(
        case1_seed_config, (0.08, 0.32), (1.30, 1.46), param_range=(0.05, 0.8)
    )


@pytest.fixture(scope="session")
def coeffs_case2(case2_config, case2_mode):
    return extract_coefficients(case2_config, case2_mode)


@pytest.fixture(scope="session")
def coeffs_case1(case1_tuned):
    config, mode = case1_tuned
    return extract_coefficients(config, mode)


def random_lossless_config(rng, max_period=3, max_defects=3):
    """A random valid lossless config (possibly with one pendant)."""
    period = int(rng.integers(1, max_period + 1))
    n_def = int(rng.integers(1, max_defects + 1))
    sites = set()
    defects = []
    while len(defects) < n_def:
        x = int(rng.integers(0, period))
        z = int(rng.integers(-2, 3))
        if (x, z) in sites:
            continue
        sites.add((x, z))
        defects.append(Defect(x, z, float(rng.uniform(-2.0, 2.0))))
    pendants = ()
    if rng.random() < 0.5:
        pendants = (
            Pendant(
                int(rng.integers(0, n_def)),
                float(rng.uniform(0.1, 3.0)),
                float(rng.uniform(0.1, 1.0)),
            ),
        )
    return LatticeConfig(period, tuple(defects), pendants)


def random_regime_point(rng, config, max_tries=200):
    """A real (kappa, omega) with exactly order 0 propagating, off Wood lines."""
    for _ in range(max_tries):
        kappa = float(rng.uniform(-0.4, 0.4))
        omega = float(rng.uniform(0.3, 1.9))
        point = SpectralPoint(kappa, omega)
        try:
            spec = propagating_orders(point, config.period)
        except WoodAnomalyError:
            continue
        if not (spec.propagating[0] and np.sum(spec.propagating) == 1):
            continue
        # keep clear margins from the branch points and pendant poles
        w = (omega / 2.0) ** 2 - np.sin(np.real(spec.kappa_p) / 2.0) ** 2
        if min(np.min(np.abs(w)), np.min(np.abs(w - 1.0))) < 1e-3:
            continue
        if any(abs(omega**2 - p.mu) < 0.05 for p in config.pendants):
            continue
        return point
    raise RuntimeError("no regime point found")
