import numpy as np
import pytest

from frespond.antenna import GaussianBeamPattern
from frespond.diffraction import wavelength_m
from frespond.geometry import BodySheet, LinkGeometry

FREQ_HZ = 2.45e9
WAVELENGTH_M = wavelength_m(FREQ_HZ)


@pytest.fixture
def paper_geom():
    return LinkGeometry(d_m=4.0, h_m=0.99)


@pytest.fixture
def paper_body():
    return BodySheet(height_m=2.0, width_m=0.55)


@pytest.fixture
def table1_beam():
    return GaussianBeamPattern(hpbw_az_deg=60.0, hpbw_el_deg=76.0, gain_dbi=9.0)


def random_link_scenarios(n, seed=0):
    """Seeded random (geom, sheet, freq) tuples for symmetry checks."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        d = rng.uniform(2.0, 8.0)
        h = rng.uniform(0.5, 2.0)
        geom = LinkGeometry(d_m=d, h_m=h)
        sheet = BodySheet(
            height_m=rng.uniform(0.5, 2.5),
            width_m=rng.uniform(0.2, 1.0),
            x_m=rng.uniform(0.15 * d, 0.85 * d),
            y_m=rng.uniform(-0.8, 0.8),
        )
        freq = rng.uniform(2.0e9, 3.0e9)
        out.append((geom, sheet, freq))
    return out
