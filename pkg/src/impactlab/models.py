"""Two-parameter analytical contact models and the post hoc reference models.

All six models consume a friction coefficient mu and a restitution
coefficient epsilon and select a linear impulse (P_t, P_n) for an
approaching contact.  They share kinematics but differ in construction:

* whittaker        -- sticking solution if it lies in the friction cone,
                      otherwise Coulomb sliding tracked to a Newton
                      (velocity-ratio) normal target.
* ap_newton        -- complementarity case enumeration (stick / slide
                      left / slide right) with Newton restitution.
* ap_poisson       -- two-phase complementarity: compression resolved as
                      an endpoint problem, then a Poisson (impulse-ratio)
                      restitution phase tracked incrementally.
* wang_mason       -- incremental sliding/sticking tracking through
                      compression and a Poisson restitution phase.
* mirtich          -- incremental tracking terminated by an energetic
                      restitution condition (restitution work equals
                      epsilon^2 times compression work).
* drumwright_shell -- minimum post-impact kinetic energy subject to a
                      restitution floor and the friction cone, solved by
                      active-set enumeration of a 2-D QP.

Every predictor output is admissible: non-penetrating and inside the
energy ellipse.  When a restitution hypothesis would demand more energy
than the ellipse allows (possible for kinematic restitution under strong
friction-inertia coupling), the effective restitution is reduced until
the prediction lies on the ellipse boundary.  Friction never carries a
prediction across the line of sticking: a crossing can occur only when
the friction cone is unable to hold the contact on that line
(|a12| > mu * a11), and its magnitude is bounded by the inertial
coupling, so frictionless predictions are the mu -> 0 limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .dynamics import (
    BodyParams,
    ContactGeometry,
    EnergyEllipse,
    ImpactTrial,
    apply_impulse,
    contact_velocity,
    inverse_contact_inertia,
    measured_impulse,
    velocity_gap,
)
from .errors import NoImpactError

MU_MAX = 2.0

_TINY = 1e-13
_CAP_TOL = 1e-12


class ModelId(enum.Enum):
    AP_NEWTON = "ap-newton"
    AP_POISSON = "ap-poisson"
    DRUMWRIGHT_SHELL = "drumwright-shell"
    MIRTICH = "mirtich"
    WANG_MASON = "wang-mason"
    WHITTAKER = "whittaker"


MODEL_IDS = tuple(ModelId)


@dataclass(frozen=True)
class ModelParams:
    """Friction / restitution pair shared by all analytical models."""

    mu: float
    epsilon: float

    def __post_init__(self):
        if not (0.0 <= self.mu <= MU_MAX):
            raise ValueError(f"mu must lie in [0, {MU_MAX}], got {self.mu}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")


# ====================================================================
# Per-trial context: scalar kinematic quantities shared by predictors
# ====================================================================


class ImpactContext:
    """Precomputed contact quantities for one (body, contact, v_pre)."""

    __slots__ = (
        "body",
        "contact",
        "v_pre",
        "a11",
        "a12",
        "a22",
        "det_a",
        "mc11",
        "mc12",
        "mc22",
        "vt0",
        "vn0",
        "s0",
        "q2",
        "cx",
        "cy",
    )

    def __init__(self, body: BodyParams, contact: ContactGeometry, v_pre: np.ndarray):
        self.body = body
        self.contact = contact
        self.v_pre = np.asarray(v_pre, dtype=float)
        a = inverse_contact_inertia(body, contact)
        self.a11, self.a12, self.a22 = float(a[0, 0]), float(a[0, 1]), float(a[1, 1])
        self.det_a = self.a11 * self.a22 - self.a12 * self.a12
        self.mc11 = self.a22 / self.det_a
        self.mc12 = -self.a12 / self.det_a
        self.mc22 = self.a11 / self.det_a
        v_c = contact_velocity(contact, self.v_pre)
        self.vt0, self.vn0 = float(v_c[0]), float(v_c[1])
        thresh = 1e-12 * max(abs(self.vn0), 1e-9)
        self.s0 = 0 if abs(self.vt0) <= thresh else (1 if self.vt0 > 0 else -1)
        # incident contact-point energy (x2) and admissible-set center
        self.q2 = (
            self.mc11 * self.vt0 * self.vt0
            + 2.0 * self.mc12 * self.vt0 * self.vn0
            + self.mc22 * self.vn0 * self.vn0
        )
        self.cx = -(self.mc11 * self.vt0 + self.mc12 * self.vn0)
        self.cy = -(self.mc12 * self.vt0 + self.mc22 * self.vn0)

    def alpha(self, pt: float, pn: float) -> float:
        dx, dy = pt - self.cx, pn - self.cy
        return (self.a11 * dx * dx + 2.0 * self.a12 * dx * dy + self.a22 * dy * dy) / self.q2

    def stick_impulse(self, target_vn: float) -> tuple[float, float]:
        """Impulse with post contact velocity (0, target_vn); unique endpoint map."""
        dvt, dvn = -self.vt0, target_vn - self.vn0
        return (self.mc11 * dvt + self.mc12 * dvn, self.mc12 * dvt + self.mc22 * dvn)

    def post_velocity(self, pt: float, pn: float) -> tuple[float, float]:
        return (
            self.vt0 + self.a11 * pt + self.a12 * pn,
            self.vn0 + self.a12 * pt + self.a22 * pn,
        )

    def in_cone(self, pt: float, pn: float, mu: float) -> bool:
        tol = 1e-12 * (1.0 + abs(pt) + abs(pn))
        return pn >= -tol and abs(pt) <= mu * pn + tol


def make_context(body, contact, v_pre) -> ImpactContext:
    return ImpactContext(body, contact, v_pre)


# ====================================================================
# Incremental impulse-path engine
# ====================================================================


class _ImpulsePath:
    """Tracks contact-point velocity along the accumulating normal impulse.

    Within one contact mode the velocity evolves linearly in the normal
    impulse, so every phase is a short sequence of closed-form segments.
    Mode switching: Coulomb sliding decelerates the slip; when the slip
    stops, the contact sticks if |a12| <= mu*a11, otherwise slip resumes
    on the side demanded by the inertial coupling (constraint-consistent
    counter-slip).  A sticking contact never leaves the sticking line.
    """

    __slots__ = ("ctx", "mu", "v_ct", "v_cn", "pt", "pn", "sigma", "w_abs", "w_rel")

    def __init__(self, ctx: ImpactContext, mu: float):
        self.ctx = ctx
        self.mu = mu
        self.v_ct = ctx.vt0
        self.v_cn = ctx.vn0
        self.pt = 0.0
        self.pn = 0.0
        self.sigma: int | None = None  # None = stuck
        self.w_abs = 0.0  # normal work absorbed while approaching
        self.w_rel = 0.0  # normal work released while separating
        self._set_mode_from_velocity()

    def _set_mode_from_velocity(self):
        ctx, mu = self.ctx, self.mu
        if abs(self.v_ct) <= _TINY * max(1.0, abs(ctx.vn0)):
            self.v_ct = 0.0
            if abs(ctx.a12) <= mu * ctx.a11:
                self.sigma = None
            else:
                self.sigma = 1 if ctx.a12 > 0 else -1
        else:
            self.sigma = 1 if self.v_ct > 0 else -1

    def _rates(self) -> tuple[float, float, float]:
        """(dv_ct, dv_cn, dP_t) per unit of normal impulse in the current mode."""
        ctx, mu = self.ctx, self.mu
        if self.sigma is None:
            return 0.0, ctx.det_a / ctx.a11, -ctx.a12 / ctx.a11
        s = float(self.sigma)
        return ctx.a12 - s * mu * ctx.a11, ctx.a22 - s * mu * ctx.a12, -s * mu

    def _arrest_impulse(self, c_t: float) -> float:
        """Normal impulse to slip arrest in the current mode; inf if none."""
        if self.sigma is None:
            return math.inf
        if self.sigma * c_t >= 0.0:
            return math.inf  # slip not decelerating: no arrest ahead
        return -self.v_ct / c_t

    def _on_arrest(self):
        ctx, mu = self.ctx, self.mu
        self.v_ct = 0.0
        if abs(ctx.a12) <= mu * ctx.a11:
            self.sigma = None
        else:
            self.sigma = 1 if ctx.a12 > 0 else -1

    def _book_work(self, dp: float, c_n: float, v_start: float):
        """Accumulate absorbed/released normal work over a linear segment."""
        v_end = v_start + c_n * dp

        def _accumulate(v0, span):
            w = v0 * span + 0.5 * c_n * span * span
            if w >= 0.0:
                self.w_rel += w
            else:
                self.w_abs -= w

        if v_start == 0.0 or v_end == 0.0 or (v_start > 0.0) == (v_end > 0.0):
            _accumulate(v_start, dp)
        else:
            p_cross = -v_start / c_n
            _accumulate(v_start, p_cross)
            _accumulate(0.0, dp - p_cross)

    def _apply(self, dp: float, c_t: float, c_n: float, dpt: float):
        self._book_work(dp, c_n, self.v_cn)
        self.v_ct += c_t * dp
        self.v_cn += c_n * dp
        self.pt += dpt * dp
        self.pn += dp

    def advance_to_normal_velocity(self, target: float) -> float:
        """Advance until v_cn == target (target >= current v_cn); returns impulse used."""
        used = 0.0
        for _ in range(64):
            gap = target - self.v_cn
            if gap <= _TINY * max(1.0, abs(target)):
                self.v_cn = target
                return used
            c_t, c_n, dpt = self._rates()
            p_arrest = self._arrest_impulse(c_t)
            p_target = gap / c_n if c_n > 0.0 else math.inf
            if p_arrest < p_target:
                self._apply(p_arrest, c_t, c_n, dpt)
                used += p_arrest
                self._on_arrest()
            else:
                if not math.isfinite(p_target):
                    raise ArithmeticError("impulse path cannot reach the normal-velocity target")
                self._apply(p_target, c_t, c_n, dpt)
                used += p_target
                self.v_cn = target
                return used
        raise ArithmeticError("impulse path failed to converge")

    def advance_by_normal_impulse(self, dpn: float):
        """Advance by a prescribed amount of normal impulse."""
        remaining = dpn
        for _ in range(64):
            if remaining <= 0.0:
                return
            c_t, c_n, dpt = self._rates()
            p_arrest = self._arrest_impulse(c_t)
            if p_arrest < remaining:
                self._apply(p_arrest, c_t, c_n, dpt)
                remaining -= p_arrest
                self._on_arrest()
            else:
                self._apply(remaining, c_t, c_n, dpt)
                return
        raise ArithmeticError("impulse path failed to converge")

    def advance_to_work_ratio(self, eps: float):
        """Advance until released normal work reaches eps^2 x absorbed work."""
        if eps == 0.0:
            self.advance_to_normal_velocity(0.0)
            return
        e2 = eps * eps
        for _ in range(200):
            c_t, c_n, dpt = self._rates()
            p_arrest = self._arrest_impulse(c_t)
            # candidate event: termination inside the separating part of this segment
            p_term = self._work_target_impulse(e2, c_n, p_arrest)
            if p_term is not None and p_term <= p_arrest:
                self._apply(p_term, c_t, c_n, dpt)
                return
            if not math.isfinite(p_arrest):
                raise ArithmeticError("impulse path cannot satisfy the work condition")
            self._apply(p_arrest, c_t, c_n, dpt)
            self._on_arrest()
        raise ArithmeticError("impulse path failed to converge")

    def _work_target_impulse(self, e2: float, c_n: float, limit: float) -> float | None:
        """Impulse within the current mode at which w_rel hits e2 * w_abs, if any."""
        v0 = self.v_cn
        w_abs, w_rel = self.w_abs, self.w_rel
        start = 0.0
        if v0 < 0.0:
            # absorb through the approaching part first (if the mode ever separates)
            if c_n <= 0.0:
                return None
            start = -v0 / c_n
            if start > limit:
                return None
            w_abs -= v0 * start + 0.5 * c_n * start * start
            v0 = 0.0
        needed = e2 * w_abs - w_rel
        if needed <= 0.0:
            return start
        # first positive root of v0*dp + c_n*dp^2/2 == needed
        if c_n == 0.0:
            if v0 <= 0.0:
                return None
            return start + needed / v0
        disc = v0 * v0 + 2.0 * c_n * needed
        if disc < 0.0:
            return None  # this mode re-dips before releasing enough work
        root = (-v0 + math.sqrt(disc)) / c_n
        if root < 0.0:
            return None
        return start + root

    def impulse(self) -> tuple[float, float]:
        return self.pt, self.pn


def _finish_poisson_cycles(path: _ImpulsePath, eps: float):
    """Apply Poisson restitution, re-compressing if a jammed slide re-dipped."""
    vn_tol = 1e-12 * max(1.0, abs(path.ctx.vn0))
    for _ in range(16):
        if path.v_cn >= -vn_tol:
            break
        p_c = path.advance_to_normal_velocity(0.0)
        path.advance_by_normal_impulse(eps * p_c)
    if path.v_cn < 0.0:
        path.advance_to_normal_velocity(0.0)


# ====================================================================
# The six predictors
# ====================================================================


def _whittaker(ctx: ImpactContext, mu: float, eps: float) -> tuple[float, float]:
    target = -eps * ctx.vn0
    pt, pn = ctx.stick_impulse(target)
    if ctx.in_cone(pt, pn, mu):
        return pt, pn
    path = _ImpulsePath(ctx, mu)
    path.advance_to_normal_velocity(target)
    return path.impulse()


def _ap_newton(ctx: ImpactContext, mu: float, eps: float) -> tuple[float, float]:
    target = -eps * ctx.vn0
    pt, pn = ctx.stick_impulse(target)
    if ctx.in_cone(pt, pn, mu):
        return pt, pn
    sigmas = (ctx.s0, -ctx.s0) if ctx.s0 != 0 else ((1, -1) if ctx.a12 > 0 else (-1, 1))
    for sigma in sigmas:
        if sigma == 0:
            continue
        c_n = ctx.a22 - sigma * mu * ctx.a12
        if c_n <= 0.0:
            continue
        p_n = (target - ctx.vn0) / c_n
        if p_n < 0.0:
            continue
        p_t = -sigma * mu * p_n
        v_ct_f, _ = ctx.post_velocity(p_t, p_n)
        if sigma * v_ct_f >= -_TINY * max(1.0, abs(ctx.vt0)):
            return p_t, p_n
    return pt, pn  # no consistent sliding mode: fall back to the sticking endpoint


def _compression_endpoint(ctx: ImpactContext, mu: float) -> tuple[float, float, float]:
    """Algebraic compression phase: impulse to v_cn = 0. Returns (pt, pn, v_ct_m)."""
    pt, pn = ctx.stick_impulse(0.0)
    if ctx.in_cone(pt, pn, mu):
        return pt, pn, 0.0
    sigmas = (ctx.s0, -ctx.s0) if ctx.s0 != 0 else ((1, -1) if ctx.a12 > 0 else (-1, 1))
    for sigma in sigmas:
        if sigma == 0:
            continue
        c_n = ctx.a22 - sigma * mu * ctx.a12
        if c_n <= 0.0:
            continue
        p_n = -ctx.vn0 / c_n
        if p_n < 0.0:
            continue
        p_t = -sigma * mu * p_n
        v_ct_m = ctx.vt0 + (ctx.a12 - sigma * mu * ctx.a11) * p_n
        if sigma * v_ct_m >= -_TINY * max(1.0, abs(ctx.vt0)):
            return p_t, p_n, v_ct_m
    return pt, pn, 0.0


def _ap_poisson(ctx: ImpactContext, mu: float, eps: float) -> tuple[float, float]:
    pt1, pn1, v_ct_m = _compression_endpoint(ctx, mu)
    path = _ImpulsePath(ctx, mu)
    path.v_ct, path.v_cn = v_ct_m, 0.0
    path.pt, path.pn = pt1, pn1
    path._set_mode_from_velocity()
    path.advance_by_normal_impulse(eps * max(pn1, 0.0))
    _finish_poisson_cycles(path, eps)
    return path.impulse()


def _wang_mason(ctx: ImpactContext, mu: float, eps: float) -> tuple[float, float]:
    path = _ImpulsePath(ctx, mu)
    p_c = path.advance_to_normal_velocity(0.0)
    path.advance_by_normal_impulse(eps * p_c)
    _finish_poisson_cycles(path, eps)
    return path.impulse()


def _mirtich(ctx: ImpactContext, mu: float, eps: float) -> tuple[float, float]:
    path = _ImpulsePath(ctx, mu)
    path.advance_to_work_ratio(eps)
    return path.impulse()


def _solve_qp2(
    h11: float,
    h12: float,
    h22: float,
    g1: float,
    g2: float,
    constraints: list[tuple[float, float, float]],
) -> tuple[float, float] | None:
    """Minimize 0.5 p'Hp + g'p subject to w.p >= c, by active-set enumeration.

    constraints entries are (w1, w2, c).  Returns the feasible minimizer or
    None when the constraint set has no feasible candidate point.
    """
    det_h = h11 * h22 - h12 * h12
    cands: list[tuple[float, float]] = []
    # unconstrained stationary point
    cands.append(((-g1 * h22 + g2 * h12) / det_h, (-g2 * h11 + g1 * h12) / det_h))
    # one active constraint: minimize on the line w.p == c
    for w1, w2, c in constraints:
        # h p + g = lam w,  w.p = c
        iw1 = (h22 * w1 - h12 * w2) / det_h
        iw2 = (h11 * w2 - h12 * w1) / det_h
        denom = w1 * iw1 + w2 * iw2
        if abs(denom) < 1e-300:
            continue
        ig1 = (h22 * g1 - h12 * g2) / det_h
        ig2 = (h11 * g2 - h12 * g1) / det_h
        lam = (c + w1 * ig1 + w2 * ig2) / denom
        cands.append((-ig1 + lam * iw1, -ig2 + lam * iw2))
    # two active constraints: vertex
    n = len(constraints)
    for i in range(n):
        wi1, wi2, ci = constraints[i]
        for j in range(i + 1, n):
            wj1, wj2, cj = constraints[j]
            det = wi1 * wj2 - wi2 * wj1
            if abs(det) < 1e-14 * (abs(wi1) + abs(wi2)) * (abs(wj1) + abs(wj2)):
                continue
            cands.append(((ci * wj2 - cj * wi2) / det, (wi1 * cj - wj1 * ci) / det))
    best = None
    best_val = math.inf
    for p1, p2 in cands:
        if not (math.isfinite(p1) and math.isfinite(p2)):
            continue
        scale = 1.0 + abs(p1) + abs(p2)
        ok = all(w1 * p1 + w2 * p2 >= c - 1e-10 * (scale + abs(c)) for w1, w2, c in constraints)
        if not ok:
            continue
        val = 0.5 * (h11 * p1 * p1 + 2 * h12 * p1 * p2 + h22 * p2 * p2) + g1 * p1 + g2 * p2
        if val < best_val:
            best_val = val
            best = (p1, p2)
    return best


def _drumwright_shell(ctx: ImpactContext, mu: float, eps: float) -> tuple[float, float]:
    # objective: change in kinetic energy, 0.5 p'Ap + v_c.p
    b = (1.0 + eps) * (-ctx.vn0)
    base = [
        (ctx.a12, ctx.a22, b),  # restitution floor on the separating velocity
        (-1.0, mu, 0.0),  # friction cone
        (1.0, mu, 0.0),
        (0.0, 1.0, 0.0),  # compressive normal impulse
    ]
    if ctx.s0 == 0:
        branches = [base]
    else:
        s = float(ctx.s0)
        branches = [base + [(s * ctx.a11, s * ctx.a12, -s * ctx.vt0)]]  # stay on the incoming side
        if abs(ctx.a12) > mu * ctx.a11:
            # the cone cannot hold the sticking line: inertial crossings are
            # reachable, with friction still not braking past the line
            branches.append(base + [(s, 0.0, 0.0)])
    best = None
    best_val = math.inf
    for cons in branches:
        sol = _solve_qp2(ctx.a11, ctx.a12, ctx.a22, ctx.vt0, ctx.vn0, cons)
        if sol is None:
            continue
        p1, p2 = sol
        val = (
            0.5 * (ctx.a11 * p1 * p1 + 2 * ctx.a12 * p1 * p2 + ctx.a22 * p2 * p2)
            + ctx.vt0 * p1
            + ctx.vn0 * p2
        )
        if val < best_val:
            best_val = val
            best = sol
    if best is None:
        return ctx.stick_impulse(-eps * ctx.vn0)
    return best


_PREDICTORS = {
    ModelId.AP_NEWTON: _ap_newton,
    ModelId.AP_POISSON: _ap_poisson,
    ModelId.DRUMWRIGHT_SHELL: _drumwright_shell,
    ModelId.MIRTICH: _mirtich,
    ModelId.WANG_MASON: _wang_mason,
    ModelId.WHITTAKER: _whittaker,
}


# ====================================================================
# Prediction interface
# ====================================================================


def _predict_capped(model: ModelId, ctx: ImpactContext, mu: float, eps: float) -> tuple[float, float]:
    predictor = _PREDICTORS[model]
    pt, pn = predictor(ctx, mu, eps)
    if ctx.alpha(pt, pn) <= 1.0 + _CAP_TOL:
        return pt, pn
    # restitution demands more energy than the ellipse allows: shrink it
    lo, hi = 0.0, eps
    pt_lo, pn_lo = predictor(ctx, mu, 0.0)
    if ctx.alpha(pt_lo, pn_lo) > 1.0 + _CAP_TOL:  # defensive; maximum compression dissipates
        return ctx.cx, ctx.cy
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        pt_m, pn_m = predictor(ctx, mu, mid)
        if ctx.alpha(pt_m, pn_m) <= 1.0 + _CAP_TOL:
            lo, (pt_lo, pn_lo) = mid, (pt_m, pn_m)
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return pt_lo, pn_lo


def predict_with_context(model: ModelId, ctx: ImpactContext, params: ModelParams) -> np.ndarray:
    """Predict the impulse for a prebuilt context; enforces admissibility."""
    if not ctx.vn0 < 0.0:
        raise NoImpactError(f"contact point is not approaching (v_cn = {ctx.vn0})")
    return np.array(_predict_capped(model, ctx, params.mu, params.epsilon))


def predict_impulse(
    model: ModelId,
    params: ModelParams,
    body: BodyParams,
    contact: ContactGeometry,
    v_pre: np.ndarray,
) -> np.ndarray:
    """Imparted impulse (P_t, P_n) selected by an analytical contact model."""
    return predict_with_context(model, make_context(body, contact, v_pre), params)


def predict_post_velocity(
    model: ModelId,
    params: ModelParams,
    body: BodyParams,
    contact: ContactGeometry,
    v_pre: np.ndarray,
) -> np.ndarray:
    """Post-impact body velocity implied by a model's impulse."""
    p = predict_impulse(model, params, body, contact, v_pre)
    return apply_impulse(body, contact, v_pre, p)


# ====================================================================
# Post hoc reference models
# ====================================================================


def best_post_hoc(
    trials: list[ImpactTrial],
    per_model_params: dict[ModelId, ModelParams],
    components: str = "full",
) -> list[tuple[ModelId, float]]:
    """Per trial, the analytical model with the smallest post-velocity error.

    Exact ties go to the earliest model in ModelId enumeration order.
    """
    if not trials:
        raise ValueError("best_post_hoc requires a nonempty trial list")
    missing = [m for m in MODEL_IDS if m not in per_model_params]
    if missing:
        raise ValueError(f"missing identified parameters for {missing}")
    out = []
    for trial in trials:
        best_model = None
        best_err = math.inf
        for model in MODEL_IDS:
            v_hat = predict_post_velocity(
                model, per_model_params[model], trial.body, trial.contact, trial.state_pre.v
            )
            err = velocity_gap(trial.body, trial.state_post.v, v_hat, components)
            if err < best_err:
                best_err = err
                best_model = model
        out.append((best_model, best_err))
    return out


@dataclass(frozen=True)
class IrbResult:
    """Best admissible rigid impulse for a trial and its attained error."""

    impulse: np.ndarray
    error: float
    alpha: float


def irb_bound(
    trial: ImpactTrial,
    components: str = "full",
    seeds: tuple[np.ndarray, ...] = (),
    constrain: bool = True,
    grid: tuple[int, int] = (128, 64),
    tol: float = 1e-9,
) -> IrbResult:
    """Admissible impulse minimizing the post-velocity error of a trial.

    A polar grid over the energy ellipse (plus any caller-provided seed
    impulses, e.g. analytical predictions) is refined with Nelder-Mead.
    With constrain=False the minimization runs over the whole impulse
    plane instead of the admissible set.
    """
    body, contact = trial.body, trial.contact
    v_pre, v_post = trial.state_pre.v, trial.state_post.v
    ell = EnergyEllipse.from_state(body, contact, v_pre)
    if not ell.v_c_i[1] < 0.0:
        raise NoImpactError("trial contact point is not approaching")

    # velocity change per unit impulse
    basis = np.array(
        [
            [1.0 / body.m, 0.0],
            [0.0, 1.0 / body.m],
            [-contact.r_y / body.I, contact.r_x / body.I],
        ]
    )
    dv_target = v_post - v_pre
    w = np.array([1.0, 1.0, math.sqrt(body.I / body.m)])
    if components == "linear":
        w = np.array([1.0, 1.0, 0.0])

    def error_of(p: np.ndarray) -> float:
        resid = (basis @ p - dv_target) * w
        return float(np.sqrt(resid @ resid))

    if not constrain:
        x0 = measured_impulse(trial)
        res = minimize(error_of, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
        p_best = res.x
        return IrbResult(p_best, error_of(p_best), ell.alpha(p_best))

    # map the unit disc onto the ellipse: P(u) = center + sqrt(q2) * S u, alpha = |u|^2
    evals, evecs = np.linalg.eigh(ell.m_c)
    s_mat = evecs @ np.diag(np.sqrt(evals)) @ evecs.T * math.sqrt(ell.incident_energy2)
    s_inv = np.linalg.inv(s_mat)
    a_row_n = np.linalg.inv(ell.m_c)[1]
    vn_scale = abs(ell.v_c_i[1])

    def from_polar(rho: float, phi: float) -> np.ndarray:
        return ell.center + s_mat @ np.array([rho * math.cos(phi), rho * math.sin(phi)])

    def penalized(x) -> float:
        rho = min(max(x[0], 0.0), 1.0)
        p = from_polar(rho, x[1])
        v_cn_f = ell.v_c_i[1] + a_row_n @ p
        pen = max(0.0, -(v_cn_f + tol * vn_scale))
        return error_of(p) + 1e6 * pen

    n_phi, n_rho = grid
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    rhos = np.linspace(0.0, 1.0, n_rho)
    uu = np.stack(
        [np.outer(rhos, np.cos(phis)).ravel(), np.outer(rhos, np.sin(phis)).ravel()]
    )
    pp = ell.center[:, None] + s_mat @ uu  # (2, G)
    v_cn_f = ell.v_c_i[1] + a_row_n @ pp
    feasible = v_cn_f >= -tol * vn_scale
    resid = (basis @ pp - dv_target[:, None]) * w[:, None]
    errs = np.sqrt(np.sum(resid * resid, axis=0))
    errs[~feasible] = np.inf
    i_best = int(np.argmin(errs))
    rho0, phi0 = rhos[i_best // n_phi], phis[i_best % n_phi]

    starts = [(rho0, phi0)]
    for seed in seeds:
        u = s_inv @ (np.asarray(seed, dtype=float) - ell.center)
        rho = float(np.hypot(u[0], u[1]))
        starts.append((min(rho, 1.0), math.atan2(u[1], u[0])))

    best_p = from_polar(rho0, phi0)
    best_err = error_of(best_p) if feasible[i_best] else math.inf
    for rho_s, phi_s in starts:
        res = minimize(
            penalized,
            np.array([rho_s, phi_s]),
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 400},
        )
        rho = min(max(res.x[0], 0.0), 1.0)
        p = from_polar(rho, res.x[1])
        if ell.v_c_i[1] + a_row_n @ p >= -tol * vn_scale:
            err = error_of(p)
            if err < best_err:
                best_err = err
                best_p = p
    # seed impulses are feasible candidates in their own right
    for seed in seeds:
        p = np.asarray(seed, dtype=float)
        adm = ell.admissibility(p, tol=tol)
        if adm.admissible:
            err = error_of(p)
            if err < best_err:
                best_err = err
                best_p = p
    return IrbResult(best_p, best_err, ell.alpha(best_p))
