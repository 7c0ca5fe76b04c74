"""Synthetic impact-trial generation and dataset I/O.

Ground truth comes from a compliant penalty-contact simulation of an
ellipse dropped on a flat floor: a stiff spring-damper normal force at the
deepest penetration point and velocity-regularized Coulomb friction,
integrated with a semi-implicit Euler scheme.  Pre/post states are sampled
at contact-force onset/offset and the contact point is frozen at onset, so
each accepted event mirrors what a tracking rig would report.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import BodyParams, ContactGeometry, ImpactTrial, PlanarState
from .errors import ConfigError, DatasetFormatError, ImpactLabError

GRAVITY = 9.81

CSV_HEADER = "trial_id,m,I,rx,ry,qx,qy,qth,vx_pre,vy_pre,w_pre,vx_post,vy_post,w_post"
_CSV_FIELDS = CSV_HEADER.split(",")


class TrialRejected(ImpactLabError):
    """A simulated drop did not produce a usable single-impact event."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class GenConfig:
    """Synthetic-dataset configuration; all values SI."""

    n_trials: int = 100
    seed: int = 0
    m: float = 0.04
    a: float = 0.06  # ellipse semi-axes
    b: float = 0.02
    I: float | None = None  # default: uniform ellipse, m*(a^2+b^2)/4
    k_c: float = 5e4  # contact stiffness
    damping: float = 10.0  # contact damping
    mu_true: float = 0.1
    v_reg: float = 1e-3  # friction regularization velocity
    dt: float = 1e-6
    horizon: float = 0.06
    grace: float = 0.005  # re-contact watch window after separation
    min_contact_steps: int = 50
    vx_range: tuple[float, float] = (-1.0, 1.0)
    vy_range: tuple[float, float] = (-1.5, -0.2)
    omega_range: tuple[float, float] = (-30.0, 30.0)
    theta_range: tuple[float, float] = (0.0, 2.0 * math.pi)
    gap_range: tuple[float, float] = (5e-4, 2e-3)
    noise_std: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.n_trials < 0:
            raise ConfigError("n_trials must be nonnegative")
        if self.k_c <= 0 or self.dt <= 0 or self.m <= 0:
            raise ConfigError("k_c, dt, and m must be positive")
        if not (self.a >= self.b > 0):
            raise ConfigError("ellipse semi-axes must satisfy a >= b > 0")
        if self.inertia <= 0:
            raise ConfigError("inertia must be positive")
        # a stiff contact must be resolved by >= min_contact_steps steps;
        # the most compliant direction bounds the event duration from below
        shortest = math.pi * math.sqrt(self.m / (4.0 * self.k_c)) / self.dt
        if shortest < self.min_contact_steps:
            raise ConfigError(
                f"dt={self.dt} resolves a contact with ~{shortest:.0f} steps; "
                f"need at least {self.min_contact_steps}"
            )

    @property
    def inertia(self) -> float:
        if self.I is not None:
            return self.I
        return self.m * (self.a**2 + self.b**2) / 4.0

    def body(self) -> BodyParams:
        return BodyParams(self.m, self.inertia, shape=(self.a, self.b))


@dataclass
class GenStats:
    """Accounting of a generation run."""

    requested: int
    accepted: int
    attempts: int
    rejected: dict[str, int]

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else 1.0


@dataclass
class GenResult:
    trials: list[ImpactTrial]
    stats: GenStats


def _lowest_point(a, b, theta):
    """Offset (r_x, r_y) of the lowest ellipse boundary point from the center."""
    s, c = np.sin(theta), np.cos(theta)
    h = np.sqrt((a * s) ** 2 + (b * c) ** 2)
    r_x = s * c * (b * b - a * a) / h
    return r_x, -h


def _simulate_batch(config: GenConfig, q0: np.ndarray, v0: np.ndarray):
    """Integrate a batch of drops; returns per-drop event records.

    Each record is (status, pre_q, pre_v, post_v, r, contact_steps) where
    status is "ok" or a rejection reason.
    """
    n = q0.shape[0]
    m, inertia = config.m, config.inertia
    a_ax, b_ax = config.a, config.b
    k_c, c_d, mu, v_reg, dt = config.k_c, config.damping, config.mu_true, config.v_reg, config.dt
    n_steps = int(round(config.horizon / dt))
    grace_steps = int(round(config.grace / dt))

    q = q0.astype(float).copy()
    v = v0.astype(float).copy()
    # phases: 0 falling, 1 in contact, 2 grace window, 3 accepted, 4 rejected
    phase = np.zeros(n, dtype=np.int8)
    grace_left = np.zeros(n, dtype=np.int64)
    contact_steps = np.zeros(n, dtype=np.int64)
    pre_q = np.zeros((n, 3))
    pre_v = np.zeros((n, 3))
    post_q = np.zeros((n, 3))
    post_v = np.zeros((n, 3))
    r_rec = np.zeros((n, 2))
    reason = np.zeros(n, dtype=np.int8)  # 1 grazing, 2 multi-impact, 3 no-contact, 4 no-separation

    for _ in range(n_steps):
        active = phase < 3
        if not np.any(active):
            break
        theta = q[:, 2]
        r_x, r_y = _lowest_point(a_ax, b_ax, theta)
        h = -r_y
        delta = h - q[:, 1]
        v_cp_x = v[:, 0] - r_y * v[:, 2]
        v_cp_y = v[:, 1] + r_x * v[:, 2]
        pen = delta > 0.0
        f_n = np.where(pen, np.maximum(k_c * delta - c_d * v_cp_y, 0.0), 0.0)
        touching = f_n > 0.0

        # falling -> contact onset: record the pre-force state and geometry
        onset = (phase == 0) & touching
        if np.any(onset):
            grazing = onset & (v_cp_y >= 0.0)
            phase[grazing] = 4
            reason[grazing] = 1
            good = onset & ~grazing
            pre_q[good] = q[good]
            pre_v[good] = v[good]
            r_rec[good, 0] = r_x[good]
            r_rec[good, 1] = r_y[good]
            phase[good] = 1
            contact_steps[good] = 0

        # contact -> separation: record the post state
        offset = (phase == 1) & ~touching
        if np.any(offset):
            post_q[offset] = q[offset]
            post_v[offset] = v[offset]
            phase[offset] = 2
            grace_left[offset] = grace_steps

        in_contact = phase == 1
        contact_steps[in_contact] += 1

        # grace window: a renewed contact marks a tumbling multi-impact event
        graceing = phase == 2
        re_contact = graceing & touching
        phase[re_contact] = 4
        reason[re_contact] = 2
        still = graceing & ~touching
        grace_left[still] -= 1
        done = still & (grace_left <= 0)
        phase[done] = 3

        f_t = -mu * f_n * np.tanh(v_cp_x / v_reg)
        tau = r_x * f_n - r_y * f_t
        v[:, 0] += dt * f_t / m
        v[:, 1] += dt * (f_n / m - GRAVITY)
        v[:, 2] += dt * tau / inertia
        q += dt * v

    # horizon bookkeeping: unfinished grace windows saw no re-contact
    phase[phase == 2] = 3
    reason[phase == 0] = 3
    reason[phase == 1] = 4

    records = []
    for i in range(n):
        if phase[i] != 3:
            labels = {1: "grazing", 2: "multi-impact", 3: "no-contact", 4: "no-separation"}
            records.append((labels[reason[i]], None, None, None, None, None, 0))
        elif contact_steps[i] < config.min_contact_steps:
            records.append(("under-resolved", None, None, None, None, None, int(contact_steps[i])))
        else:
            records.append(
                ("ok", pre_q[i], pre_v[i], post_q[i], post_v[i], r_rec[i], int(contact_steps[i]))
            )
    return records


def _record_to_trial(config, trial_id, rec, noise_rng=None) -> ImpactTrial:
    _, pre_q, pre_v, post_q, post_v, r, _ = rec
    pre_v = pre_v.copy()
    post_v = post_v.copy()
    if noise_rng is not None and any(s > 0 for s in config.noise_std):
        std = np.asarray(config.noise_std)
        pre_v += noise_rng.normal(0.0, 1.0, 3) * std
        post_v += noise_rng.normal(0.0, 1.0, 3) * std
    contact = ContactGeometry(float(r[0]), float(r[1]))
    v_cn = pre_v[1] + contact.r_x * pre_v[2]
    if v_cn >= 0.0:
        raise TrialRejected("noise-flipped")
    return ImpactTrial(
        trial_id=trial_id,
        body=BodyParams(config.m, config.inertia),
        contact=contact,
        state_pre=PlanarState(pre_q.copy(), pre_v),
        state_post=PlanarState(post_q.copy(), post_v),
    )


def simulate_impact(config: GenConfig, initial_state: PlanarState) -> ImpactTrial:
    """Simulate one drop from a given initial state.

    Raises TrialRejected when the drop does not contain exactly one cleanly
    resolved impact inside the horizon.
    """
    recs = _simulate_batch(config, initial_state.q[None, :], initial_state.v[None, :])
    rec = recs[0]
    if rec[0] != "ok":
        raise TrialRejected(rec[0])
    return _record_to_trial(config, 0, rec)


def _sample_initial(config: GenConfig, rng, n: int):
    theta = rng.uniform(*config.theta_range, n)
    _, r_y = _lowest_point(config.a, config.b, theta)
    gap = rng.uniform(*config.gap_range, n)
    q0 = np.stack([np.zeros(n), -r_y + gap, theta], axis=1)
    v0 = np.stack(
        [
            rng.uniform(*config.vx_range, n),
            rng.uniform(*config.vy_range, n),
            rng.uniform(*config.omega_range, n),
        ],
        axis=1,
    )
    return q0, v0


def generate_dataset(config: GenConfig) -> GenResult:
    """Generate config.n_trials accepted trials with randomized initial conditions.

    Deterministic in the seed.  Raises ConfigError when fewer than 10% of
    simulated drops are usable.
    """
    rng_init = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    rng_noise = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    trials: list[ImpactTrial] = []
    rejected: dict[str, int] = {}
    attempts = 0
    batches = 0
    while len(trials) < config.n_trials:
        batches += 1
        want = config.n_trials - len(trials)
        batch = max(32, int(1.3 * want) + 1)
        q0, v0 = _sample_initial(config, rng_init, batch)
        attempts += batch
        for rec in _simulate_batch(config, q0, v0):
            if rec[0] != "ok":
                rejected[rec[0]] = rejected.get(rec[0], 0) + 1
                continue
            try:
                trial = _record_to_trial(config, len(trials), rec, rng_noise)
            except TrialRejected as exc:
                rejected[exc.reason] = rejected.get(exc.reason, 0) + 1
                continue
            if len(trials) < config.n_trials:
                trials.append(trial)
        if batches >= 4 and len(trials) < 0.1 * attempts:
            raise ConfigError(
                f"acceptance rate {len(trials)}/{attempts} below 10%; "
                f"rejections: {rejected}"
            )
        if batches > 64:
            raise ConfigError("generation did not converge")
    stats = GenStats(config.n_trials, len(trials), attempts, rejected)
    return GenResult(trials, stats)


# --------------------------------------------------------------------
# dataset files
# --------------------------------------------------------------------


def _trial_row(trial: ImpactTrial) -> list:
    return [trial.trial_id] + [
        float(x)
        for x in (
            trial.body.m,
            trial.body.I,
            trial.contact.r_x,
            trial.contact.r_y,
            trial.state_pre.q[0],
            trial.state_pre.q[1],
            trial.state_pre.q[2],
            trial.state_pre.v[0],
            trial.state_pre.v[1],
            trial.state_pre.v[2],
            trial.state_post.v[0],
            trial.state_post.v[1],
            trial.state_post.v[2],
        )
    ]


def save_dataset(path: str | Path, trials: list[ImpactTrial]) -> None:
    """Write trials as CSV (default) or JSON (by .json suffix); full float precision."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        rows = [dict(zip(_CSV_FIELDS, _trial_row(t))) for t in trials]
        path.write_text(json.dumps({"schema": "impactlab-trials-v1", "trials": rows}, indent=1))
        return
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        writer = csv.writer(fh)
        for t in trials:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in _trial_row(t)])


def _trial_from_fields(vals: dict) -> ImpactTrial:
    q = np.array([vals["qx"], vals["qy"], vals["qth"]])
    v_pre = np.array([vals["vx_pre"], vals["vy_pre"], vals["w_pre"]])
    v_post = np.array([vals["vx_post"], vals["vy_post"], vals["w_post"]])
    contact = ContactGeometry(vals["rx"], vals["ry"])
    flags = ()
    v_cn = v_pre[1] + contact.r_x * v_pre[2]
    if v_cn >= 0:
        flags = ("non-approaching",)
    return ImpactTrial(
        trial_id=int(vals["trial_id"]),
        body=BodyParams(vals["m"], vals["I"]),
        contact=contact,
        state_pre=PlanarState(q, v_pre),
        state_post=PlanarState(q.copy(), v_post),
        flags=flags,
    )


def load_dataset(path: str | Path) -> list[ImpactTrial]:
    """Load a trial dataset; schema-validated, bad rows reported with line numbers."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        doc = json.loads(path.read_text())
        if doc.get("schema") != "impactlab-trials-v1":
            raise DatasetFormatError(f"unrecognized schema in {path}")
        raw_rows = [(i + 1, row) for i, row in enumerate(doc["trials"])]
    else:
        with open(path, newline="") as fh:
            header = fh.readline().rstrip("\n")
            if header != CSV_HEADER:
                raise DatasetFormatError(
                    f"header mismatch in {path}: expected {CSV_HEADER!r}, got {header!r}"
                )
            raw_rows = []
            for line_no, row in enumerate(csv.reader(fh), start=2):
                if not row:
                    continue
                raw_rows.append((line_no, row))

    trials = []
    errors = []
    for line_no, vals in raw_rows:
        try:
            if len(vals) != len(_CSV_FIELDS):
                raise ValueError(f"expected {len(_CSV_FIELDS)} fields, got {len(vals)}")
            if not isinstance(vals, dict):
                vals = dict(zip(_CSV_FIELDS, vals))
            parsed = {k: (int(v) if k == "trial_id" else float(v)) for k, v in vals.items()}
            trial = _trial_from_fields(parsed)
        except (ValueError, TypeError, KeyError) as exc:
            errors.append(f"line {line_no}: {exc}")
            continue
        if trial.flags:
            warnings.warn(f"{path} line {line_no}: trial {trial.trial_id} flagged {trial.flags}")
        trials.append(trial)
    if errors:
        raise DatasetFormatError(f"malformed rows in {path}: " + "; ".join(errors))
    return trials
