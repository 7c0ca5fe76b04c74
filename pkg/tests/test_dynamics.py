"""Impact kinematics: construction invariants, round trips, admissibility."""

import numpy as np
import pytest

from impactlab.dynamics import (
    AdmissibilityResult,
    BodyParams,
    ContactGeometry,
    EnergyEllipse,
    ImpactTrial,
    PlanarState,
    apply_impulse,
    apply_wrench,
    contact_jacobian,
    contact_velocity,
    effective_contact_inertia,
    inertia_matrix,
    inverse_contact_inertia,
    measured_impulse,
    measured_wrench,
    velocity_gap,
    wrench_jacobian,
)
from impactlab.errors import DegenerateContactError

from conftest import random_setup


def make_trial(body, contact, v_pre, v_post, trial_id=0):
    q = np.array([0.0, -contact.r_y, 0.0])
    return ImpactTrial(
        trial_id=trial_id,
        body=body,
        contact=contact,
        state_pre=PlanarState(q.copy(), np.asarray(v_pre, float)),
        state_post=PlanarState(q.copy(), np.asarray(v_post, float)),
    )


class TestConstruction:
    def test_inertia_matrix_identity(self):
        assert np.array_equal(inertia_matrix(BodyParams(1.0, 1.0)), np.eye(3))

    def test_inertia_matrix_direct(self):
        assert np.array_equal(
            inertia_matrix(BodyParams(2.0, 0.5)), np.diag([2.0, 2.0, 0.5])
        )

    def test_zero_mass_rejected(self):
        with pytest.raises(ValueError):
            BodyParams(0.0, 1.0)

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            BodyParams(1.0, 1.0, shape=(0.03, 0.05))

    def test_zero_offset_rejected(self):
        with pytest.raises(ValueError):
            ContactGeometry(0.0, 0.0)

    def test_nonfinite_state_rejected(self):
        with pytest.raises(ValueError):
            PlanarState(np.zeros(3), np.array([np.nan, 0.0, 0.0]))


class TestJacobians:
    def test_hand_expansion(self):
        j = contact_jacobian(ContactGeometry(0.0, -1.0))
        assert np.array_equal(j, np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]))

    def test_pure_translation(self):
        v_c = contact_velocity(ContactGeometry(0.3, -0.4), np.array([0.0, -1.0, 0.0]))
        assert np.allclose(v_c, [0.0, -1.0])

    def test_pure_rotation(self):
        v_c = contact_velocity(ContactGeometry(0.0, -1.0), np.array([0.0, 0.0, 1.0]))
        assert np.allclose(v_c, [1.0, 0.0])

    def test_wrench_jacobian_extends_contact_jacobian(self):
        contact = ContactGeometry(0.2, -0.7)
        assert np.array_equal(wrench_jacobian(contact)[:2], contact_jacobian(contact))


class TestEffectiveInertia:
    def test_hand_case(self):
        m_c = effective_contact_inertia(BodyParams(1.0, 1.0), ContactGeometry(0.0, -1.0))
        assert np.allclose(m_c, np.diag([0.5, 1.0]), atol=1e-14)

    def test_locked_rotation_limit(self):
        m_c = effective_contact_inertia(BodyParams(1.0, 1e12), ContactGeometry(0.3, -0.4))
        assert np.allclose(m_c, np.diag([1.0, 1.0]), atol=1e-9)

    def test_matches_dense_inversion_oracle(self, rng):
        for _ in range(1000):
            body, contact, _ = random_setup(rng, require_approach=False)
            a = inverse_contact_inertia(body, contact)
            m = inertia_matrix(body)
            j = contact_jacobian(contact)
            a_oracle = j @ np.linalg.inv(m) @ j.T
            assert np.allclose(a, a_oracle, rtol=1e-12, atol=0)
            m_c = effective_contact_inertia(body, contact)
            assert np.allclose(np.linalg.inv(m_c), a_oracle, rtol=1e-9)
            # symmetric positive definite
            assert np.allclose(m_c, m_c.T)
            assert np.all(np.linalg.eigvalsh(m_c) > 0)


class TestImpulseApplication:
    def test_hand_evaluation(self):
        v_post = apply_impulse(
            BodyParams(1.0, 1.0),
            ContactGeometry(0.0, -1.0),
            np.array([0.0, -1.0, 0.0]),
            np.array([0.0, 1.5]),
        )
        assert np.allclose(v_post, [0.0, 0.5, 0.0], atol=1e-15)

    def test_zero_impulse_identity(self):
        v = np.array([0.4, -1.1, 2.0])
        out = apply_impulse(BodyParams(1.0, 1.0), ContactGeometry(0.1, -0.2), v, np.zeros(2))
        assert np.array_equal(out, v)

    def test_matches_matrix_oracle(self):
        body = BodyParams(1.0, 1.0)
        contact = ContactGeometry(0.3, -0.4)
        v_pre = np.array([1.0, -2.0, 0.5])
        p = np.array([0.1, 1.0])
        oracle = v_pre + np.linalg.inv(inertia_matrix(body)) @ contact_jacobian(contact).T @ p
        assert np.allclose(apply_impulse(body, contact, v_pre, p), oracle, atol=1e-15)

    def test_wrench_tau_zero_reduces_exactly(self, rng):
        for _ in range(50):
            body, contact, v = random_setup(rng, require_approach=False)
            p = rng.normal(size=2)
            via_impulse = apply_impulse(body, contact, v, p)
            via_wrench = apply_wrench(body, contact, v, np.array([p[0], p[1], 0.0]))
            assert np.array_equal(via_impulse, via_wrench)

    def test_pure_torque(self):
        v = np.array([0.3, -0.7, 0.1])
        out = apply_wrench(
            BodyParams(1.0, 1.0), ContactGeometry(0.0, -1.0), v, np.array([0.0, 0.0, 1.0])
        )
        assert np.allclose(out, v + np.array([0.0, 0.0, 1.0]), atol=1e-15)

    def test_wrench_matrix_oracle(self):
        body = BodyParams(1.0, 1.0)
        contact = ContactGeometry(0.3, -0.4)
        v_pre = np.array([1.0, -2.0, 0.5])
        w = np.array([0.1, 1.0, -0.05])
        oracle = v_pre + np.linalg.inv(inertia_matrix(body)) @ wrench_jacobian(contact).T @ w
        assert np.allclose(apply_wrench(body, contact, v_pre, w), oracle, atol=1e-15)


class TestMeasuredImpulse:
    def test_inverse_of_apply(self):
        body = BodyParams(1.0, 1.0)
        contact = ContactGeometry(0.0, -1.0)
        trial = make_trial(body, contact, [0.0, -1.0, 0.0], [0.0, 0.5, 0.0])
        assert np.allclose(measured_impulse(trial), [0.0, 1.5], atol=1e-14)

    def test_no_impact_gives_zero(self, rng):
        body, contact, v = random_setup(rng)
        trial = make_trial(body, contact, v, v)
        assert np.allclose(measured_impulse(trial), [0.0, 0.0], atol=1e-15)
        assert np.allclose(measured_wrench(trial), np.zeros(3), atol=1e-15)

    def test_round_trip_random(self, rng):
        for _ in range(300):
            body, contact, v = random_setup(rng)
            p = rng.normal(scale=abs(rng.normal()) + 0.1, size=2)
            v_post = apply_impulse(body, contact, v, p)
            trial = make_trial(body, contact, v, v_post)
            assert np.allclose(measured_impulse(trial), p, rtol=1e-10, atol=1e-12)

    def test_wrench_hand_case(self):
        body = BodyParams(1.0, 1.0)
        contact = ContactGeometry(0.0, -1.0)
        trial = make_trial(body, contact, [0.0, -1.0, 0.0], [0.0, 0.5, 0.0])
        assert np.allclose(measured_wrench(trial), [0.0, 1.5, 0.0], atol=1e-14)

    def test_wrench_round_trip_random(self, rng):
        for _ in range(300):
            body, contact, v = random_setup(rng)
            w = rng.normal(size=3) * np.array([0.5, 0.5, 0.05])
            v_post = apply_wrench(body, contact, v, w)
            trial = make_trial(body, contact, v, v_post)
            w_rec = measured_wrench(trial)
            assert np.allclose(w_rec, w, rtol=1e-10, atol=1e-12)
            assert np.allclose(apply_wrench(body, contact, v, w_rec), v_post, atol=1e-12)


class TestEnergyEllipse:
    def test_alpha_at_zero_impulse_is_one(self, rng):
        for _ in range(100):
            body, contact, v = random_setup(rng)
            ell = EnergyEllipse.from_state(body, contact, v)
            assert ell.alpha(np.zeros(2)) == pytest.approx(1.0, abs=1e-12)

    def test_alpha_at_center_is_zero(self, rng):
        for _ in range(100):
            body, contact, v = random_setup(rng)
            ell = EnergyEllipse.from_state(body, contact, v)
            assert ell.alpha(ell.center) == pytest.approx(0.0, abs=1e-12)

    def test_hand_alpha_quarter(self):
        ell = EnergyEllipse.from_state(
            BodyParams(1.0, 1.0), ContactGeometry(0.0, -1.0), np.array([0.0, -1.0, 0.0])
        )
        assert ell.alpha(np.array([0.0, 1.5])) == pytest.approx(0.25, abs=1e-12)

    def test_degenerate_incident_velocity_rejected(self):
        ell = EnergyEllipse.from_state(
            BodyParams(1.0, 1.0), ContactGeometry(0.0, -1.0), np.zeros(3)
        )
        with pytest.raises(DegenerateContactError):
            ell.alpha(np.array([0.0, 0.1]))

    def test_kinetic_energy_consistency(self, rng):
        # post contact-point KE == alpha * pre contact-point KE
        for _ in range(200):
            body, contact, v = random_setup(rng)
            ell = EnergyEllipse.from_state(body, contact, v)
            p = rng.normal(scale=0.5, size=2) * np.sqrt(ell.incident_energy2)
            alpha = ell.alpha(p)
            v_cf = ell.post_contact_velocity(p)
            pre = ell.incident_energy2
            post = float(v_cf @ ell.m_c @ v_cf)
            assert post == pytest.approx(alpha * pre, rel=1e-10, abs=1e-12 * pre)


class TestAdmissibility:
    def test_zero_impulse_penetrating(self):
        ell = EnergyEllipse.from_state(
            BodyParams(1.0, 1.0), ContactGeometry(0.0, -1.0), np.array([0.0, -1.0, 0.0])
        )
        res = ell.admissibility(np.zeros(2))
        assert not res.admissible and res.label == "penetrating"

    def test_elastic_bounce_on_boundary(self):
        body = BodyParams(1.0, 1.0)
        contact = ContactGeometry(0.0, -1.0)
        ell = EnergyEllipse.from_state(body, contact, np.array([0.0, -1.0, 0.0]))
        m_c = effective_contact_inertia(body, contact)
        p = np.array([0.0, 2.0 * m_c[1, 1] * 1.0])
        res = ell.admissibility(p)
        assert res.admissible
        assert res.alpha == pytest.approx(1.0, abs=1e-12)

    def test_labels_match_direct_constraint_oracle(self, rng):
        body, contact, v = random_setup(rng)
        ell = EnergyEllipse.from_state(body, contact, v)
        scale = np.sqrt(ell.incident_energy2)
        tol = 1e-9
        for _ in range(10_000):
            p = ell.center + rng.uniform(-2.5, 2.5, size=2) * scale
            res = ell.admissibility(p, tol=tol)
            # direct evaluation of both constraints
            d = p - ell.center
            alpha = float(d @ np.linalg.inv(ell.m_c) @ d) / ell.incident_energy2
            v_cn = float((v[1] + contact.r_x * v[2]) + np.linalg.inv(ell.m_c)[1] @ p)
            energy_ok = alpha <= 1 + tol
            separating = v_cn >= -tol * abs(ell.v_c_i[1])
            assert res.admissible == (energy_ok and separating)
            if not energy_ok:
                assert res.label == "energy-violating"
            elif not separating:
                assert res.label == "penetrating"
            else:
                assert res.label == "admissible"

    def test_sticking_side_reported(self):
        ell = EnergyEllipse.from_state(
            BodyParams(1.0, 1.0), ContactGeometry(0.0, -1.0), np.array([1.0, -1.0, 0.0])
        )
        res = ell.admissibility(np.array([0.0, 1.0]))
        assert res.sticking_side == 1  # still sliding forward


class TestVelocityGap:
    def test_exact_match_is_zero(self):
        body = BodyParams(2.0, 0.5)
        v = np.array([0.1, 0.2, 0.3])
        assert velocity_gap(body, v, v) == 0.0

    def test_no_impact_prediction_on_elastic_bounce(self):
        body = BodyParams(1.0, 1.0)
        v_meas = np.array([0.0, 1.0, 0.0])
        v_pred = np.array([0.0, -1.0, 0.0])  # predicted "nothing happens"
        assert velocity_gap(body, v_meas, v_pred) == pytest.approx(2.0)

    def test_matches_norm_oracle(self, rng):
        for _ in range(100):
            body, _, _ = random_setup(rng)
            a, b = rng.normal(size=3), rng.normal(size=3)
            scale = np.sqrt(body.I / body.m)
            oracle = np.linalg.norm((b - a) * np.array([1.0, 1.0, scale]))
            assert velocity_gap(body, a, b) == pytest.approx(oracle, rel=1e-12)
            oracle_lin = np.linalg.norm((b - a)[:2])
            assert velocity_gap(body, a, b, components="linear") == pytest.approx(
                oracle_lin, rel=1e-12
            )


class TestTrialValidation:
    def test_clean_trial(self, rng):
        body, contact, v = random_setup(rng)
        v_post = apply_impulse(body, contact, v, np.array([0.0, 0.2]))
        trial = make_trial(body, contact, v, v_post)
        assert trial.validate() == []

    def test_non_approaching_flagged(self, rng):
        body, contact, v = random_setup(rng)
        v_up = v.copy()
        v_up[1] = 5.0
        v_up[2] = 0.0
        trial = make_trial(body, contact, v_up, v_up)
        assert any("approaching" in p for p in trial.validate())
