"""Planar rigid-body impact kinematics and the admissible-impulse set.

Conventions: the body moves in the vertical plane over a flat horizontal
surface.  The tangential direction is the world x-axis, the normal is the
world y-axis (pointing away from the surface).  Configurations are
q = (x, y, theta), velocities v = (xdot, ydot, thetadot).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateContactError

# Default relative tolerance for admissibility checks.
ADMIT_TOL = 1e-9


@dataclass(frozen=True)
class BodyParams:
    """Mass, central second moment of inertia, and optional ellipse semi-axes.

    The semi-axes (a, b) are only used by the synthetic trial generator;
    impact dynamics depend on (m, I) alone.
    """

    m: float
    I: float
    shape: tuple[float, float] | None = None

    def __post_init__(self):
        if not (self.m > 0 and math.isfinite(self.m)):
            raise ValueError(f"mass must be positive and finite, got {self.m}")
        if not (self.I > 0 and math.isfinite(self.I)):
            raise ValueError(f"inertia must be positive and finite, got {self.I}")
        if self.shape is not None:
            a, b = self.shape
            if not (a >= b > 0):
                raise ValueError(f"ellipse semi-axes must satisfy a >= b > 0, got {self.shape}")


@dataclass(eq=False)
class PlanarState:
    """Configuration q = (x, y, theta) and velocity v = (xdot, ydot, thetadot)."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.q.shape != (3,) or self.v.shape != (3,):
            raise ValueError("q and v must be length-3 vectors")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.v))):
            raise ValueError("state components must be finite")

    def copy(self) -> "PlanarState":
        return PlanarState(self.q.copy(), self.v.copy())


@dataclass(frozen=True)
class ContactGeometry:
    """Contact-point offset (r_x, r_y) from the center of mass, inertial frame."""

    r_x: float
    r_y: float

    def __post_init__(self):
        if not (math.isfinite(self.r_x) and math.isfinite(self.r_y)):
            raise ValueError("contact offset must be finite")
        if math.hypot(self.r_x, self.r_y) == 0.0:
            raise ValueError("contact offset must be nonzero")


@dataclass(eq=False)
class ImpactTrial:
    """One impact event: body, contact geometry, pre/post states.

    The pre configuration is sampled at contact onset and the contact point
    is frozen there.  Dataset files store only the pre configuration (the
    impact is modeled as instantaneous), so loaded trials have
    state_post.q == state_pre.q; freshly simulated ones keep the true
    separation configuration.
    """

    trial_id: int
    body: BodyParams
    contact: ContactGeometry
    state_pre: PlanarState
    state_post: PlanarState
    flags: tuple[str, ...] = field(default=())

    def validate(self, surface_tol: float = 5e-3) -> list[str]:
        """Return a list of invariant violations (empty when the trial is clean)."""
        problems = []
        v_c = contact_velocity(self.contact, self.state_pre.v)
        if not v_c[1] < 0:
            problems.append("pre-impact normal contact velocity is not approaching")
        y_contact = self.state_pre.q[1] + self.contact.r_y
        if abs(y_contact) > surface_tol:
            problems.append(f"contact point off the surface by {y_contact:.2e} m")
        if not np.all(np.isfinite(self.state_post.v)):
            problems.append("post state is not finite")
        return problems


def inertia_matrix(body: BodyParams) -> np.ndarray:
    """3x3 generalized inertia diag(m, m, I)."""
    return np.diag([body.m, body.m, body.I])


def contact_jacobian(contact: ContactGeometry) -> np.ndarray:
    """2x3 map from body velocity to contact-point velocity (v_t, v_n)."""
    return np.array([[1.0, 0.0, -contact.r_y], [0.0, 1.0, contact.r_x]])


def wrench_jacobian(contact: ContactGeometry) -> np.ndarray:
    """3x3 map used when an angular impulse is transmitted as well; det == 1."""
    return np.array(
        [
            [1.0, 0.0, -contact.r_y],
            [0.0, 1.0, contact.r_x],
            [0.0, 0.0, 1.0],
        ]
    )


def contact_velocity(contact: ContactGeometry, v: np.ndarray) -> np.ndarray:
    """Velocity (v_t, v_n) of the contact point for body velocity v."""
    v = np.asarray(v, dtype=float)
    return np.array([v[0] - contact.r_y * v[2], v[1] + contact.r_x * v[2]])


def inverse_contact_inertia(body: BodyParams, contact: ContactGeometry) -> np.ndarray:
    """J M^-1 J^T, the inverse of the effective contact inertia; closed form."""
    im, iI = 1.0 / body.m, 1.0 / body.I
    rx, ry = contact.r_x, contact.r_y
    return np.array(
        [
            [im + ry * ry * iI, -rx * ry * iI],
            [-rx * ry * iI, im + rx * rx * iI],
        ]
    )


def effective_contact_inertia(body: BodyParams, contact: ContactGeometry) -> np.ndarray:
    """2x2 effective inertia felt at the contact point; symmetric positive definite."""
    a = inverse_contact_inertia(body, contact)
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[0, 1]
    if det <= 0:
        raise ArithmeticError("inverse contact inertia is not positive definite")
    m_c = np.array([[a[1, 1], -a[0, 1]], [-a[0, 1], a[0, 0]]]) / det
    return 0.5 * (m_c + m_c.T)


def apply_impulse(
    body: BodyParams, contact: ContactGeometry, v_pre: np.ndarray, impulse: np.ndarray
) -> np.ndarray:
    """Post-impact body velocity after a linear impulse (P_t, P_n) at the contact."""
    p = np.asarray(impulse, dtype=float)
    v = np.asarray(v_pre, dtype=float)
    dv = np.array(
        [
            p[0] / body.m,
            p[1] / body.m,
            (-contact.r_y * p[0] + contact.r_x * p[1]) / body.I,
        ]
    )
    return v + dv


def apply_wrench(
    body: BodyParams, contact: ContactGeometry, v_pre: np.ndarray, wrench: np.ndarray
) -> np.ndarray:
    """Post-impact body velocity after a wrench (P_t, P_n, tau); tau = 0 reduces to apply_impulse."""
    w = np.asarray(wrench, dtype=float)
    v = np.asarray(v_pre, dtype=float)
    dv = np.array(
        [
            w[0] / body.m,
            w[1] / body.m,
            (-contact.r_y * w[0] + contact.r_x * w[1] + w[2]) / body.I,
        ]
    )
    return v + dv


def measured_impulse(trial: ImpactTrial) -> np.ndarray:
    """Least-squares rigid impulse explaining the observed velocity change.

    P = M_c (v_c_post - v_c_pre): exact when the trial is rigid-consistent,
    minimum-residual in the kinetic-energy norm otherwise.
    """
    m_c = effective_contact_inertia(trial.body, trial.contact)
    dv_c = contact_velocity(trial.contact, trial.state_post.v) - contact_velocity(
        trial.contact, trial.state_pre.v
    )
    return m_c @ dv_c


def measured_wrench(trial: ImpactTrial) -> np.ndarray:
    """Exact wrench (P_t, P_n, tau) reproducing the observed velocity change."""
    dv = trial.state_post.v - trial.state_pre.v
    body, contact = trial.body, trial.contact
    p_t = body.m * dv[0]
    p_n = body.m * dv[1]
    tau = body.I * dv[2] + contact.r_y * p_t - contact.r_x * p_n
    return np.array([p_t, p_n, tau])


@dataclass(frozen=True)
class AdmissibilityResult:
    """Outcome of an impulse admissibility query."""

    admissible: bool
    label: str  # one of {"admissible", "energy-violating", "penetrating"}
    alpha: float
    v_cn_post: float
    sticking_side: int  # sign of the post-impact tangential contact velocity


class EnergyEllipse:
    """Admissible-impulse set at a contact: energy retention alpha in [0, 1].

    The set is centered at -M_c v_c_i (the impulse that fully arrests the
    contact point, alpha = 0); the boundary alpha = 1 conserves the incident
    contact-point kinetic energy.  The zero impulse has alpha = 1.
    """

    def __init__(self, m_c: np.ndarray, v_c_i: np.ndarray):
        m_c = np.asarray(m_c, dtype=float)
        v_c_i = np.asarray(v_c_i, dtype=float)
        if m_c.shape != (2, 2) or not np.allclose(m_c, m_c.T):
            raise ValueError("contact inertia must be a symmetric 2x2 matrix")
        if np.linalg.det(m_c) <= 0 or m_c[0, 0] <= 0:
            raise ValueError("contact inertia must be positive definite")
        self.m_c = m_c
        self.v_c_i = v_c_i
        self._a = np.linalg.inv(m_c)  # inverse contact inertia
        self._a = 0.5 * (self._a + self._a.T)
        self.center = -m_c @ v_c_i
        self.incident_energy2 = float(v_c_i @ m_c @ v_c_i)  # 2x the incident KE

    @classmethod
    def from_state(
        cls, body: BodyParams, contact: ContactGeometry, v_pre: np.ndarray
    ) -> "EnergyEllipse":
        return cls(effective_contact_inertia(body, contact), contact_velocity(contact, v_pre))

    def post_contact_velocity(self, impulse: np.ndarray) -> np.ndarray:
        return self.v_c_i + self._a @ np.asarray(impulse, dtype=float)

    def alpha(self, impulse: np.ndarray) -> float:
        """Energy-retention ratio of an impulse; 1 at zero impulse, 0 at the center."""
        if self.incident_energy2 <= 0.0:
            raise DegenerateContactError("incident contact-point velocity is zero")
        d = np.asarray(impulse, dtype=float) - self.center
        return float(d @ self._a @ d) / self.incident_energy2

    def admissibility(self, impulse: np.ndarray, tol: float = ADMIT_TOL) -> AdmissibilityResult:
        """Classify an impulse against the energy and non-penetration constraints.

        An impulse whose alpha exceeds 1 + tol is labeled energy-violating;
        otherwise one whose separating velocity is below -tol * |v_cn_i| is
        labeled penetrating.
        """
        alpha = self.alpha(impulse)
        v_c_post = self.post_contact_velocity(impulse)
        vn_scale = max(abs(self.v_c_i[1]), 1e-12)
        energy_ok = alpha <= 1.0 + tol
        separating = v_c_post[1] >= -tol * vn_scale
        if not energy_ok:
            label = "energy-violating"
        elif not separating:
            label = "penetrating"
        else:
            label = "admissible"
        side = int(np.sign(v_c_post[0]))
        return AdmissibilityResult(energy_ok and separating, label, alpha, float(v_c_post[1]), side)


def energy_alpha(ellipse: EnergyEllipse, impulse: np.ndarray) -> float:
    return ellipse.alpha(impulse)


def is_admissible(
    ellipse: EnergyEllipse, impulse: np.ndarray, tol: float = ADMIT_TOL
) -> AdmissibilityResult:
    return ellipse.admissibility(impulse, tol=tol)


def velocity_gap(
    body: BodyParams,
    v_ref: np.ndarray,
    v_pred: np.ndarray,
    components: str = "full",
) -> float:
    """l2 distance between two body velocities.

    "full" scales the angular component by the gyration radius L = sqrt(I/m)
    so all three terms carry m/s units; "linear" uses (xdot, ydot) only.
    """
    d = np.asarray(v_pred, dtype=float) - np.asarray(v_ref, dtype=float)
    if components == "linear":
        return float(math.hypot(d[0], d[1]))
    if components == "full":
        scale = math.sqrt(body.I / body.m)
        return float(math.sqrt(d[0] ** 2 + d[1] ** 2 + (scale * d[2]) ** 2))
    raise ValueError(f"unknown components mode {components!r}")
