"""Shared random-scenario helpers for the test suite."""

import numpy as np
import pytest

from impactlab.dynamics import BodyParams, ContactGeometry, contact_velocity


def random_setup(rng, require_approach=True):
    """Draw a physically plausible (body, contact, v_pre) triple.

    The gyration radius and contact offset are kept in realistic proportion
    so the contact coupling spans benign to strongly coupled cases.
    """
    m = float(np.exp(rng.uniform(np.log(0.01), np.log(2.0))))
    r_gyr = float(rng.uniform(0.01, 0.3))
    body = BodyParams(m=m, I=m * r_gyr**2)
    for _ in range(200):
        r_x = float(rng.uniform(-2.0, 2.0) * r_gyr)
        r_y = float(rng.uniform(-3.0, -0.1) * r_gyr)
        if np.hypot(r_x, r_y) < 1e-6:
            continue
        contact = ContactGeometry(r_x, r_y)
        v = np.array(
            [rng.uniform(-2.0, 2.0), rng.uniform(-3.0, -0.05), rng.uniform(-30.0, 30.0)]
        )
        if not require_approach:
            return body, contact, v
        v_c = contact_velocity(contact, v)
        if v_c[1] < -1e-3:
            return body, contact, v
    raise RuntimeError("could not sample an approaching contact")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
