"""Fixed-step simulation of a homogeneous platoon with first-order actuation lag.

Vehicle 0 leads and follows a prescribed acceleration profile; every
follower ``i`` obeys ``x'' = a``, ``tau a' + a = u`` with

    u_i = sum_l [ k_al a_{i-l} - k_vl (v_i - v_{i-l})
                  - k_pl (x_i - x_{i-l} + l d + l h_w v_i) ]

over the taps it can use. Spacing error is ``e_i = x_i - x_{i-1} + d + h_w v_i``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivergenceError
from .integrate import rk4_linear_propagator
from .tf import ONE_AND_RTH, ControllerSpec, LagSpec

ATTENUATING = "Attenuating"
AMPLIFYING = "Amplifying"
MIXED = "Mixed"

TRAJECTORY_HEADER = ("t", "vehicle", "x", "v", "a", "u", "e")


@dataclass(frozen=True)
class Disturbance:
    """Lead acceleration ``amplitude * sin(omega (t - t_on))`` on ``[t_on, t_off]``."""

    amplitude: float = 2.0
    omega: float = 1.0
    t_on: float = 5.0
    t_off: float = 10.0

    def __call__(self, t: float) -> float:
        if self.t_on <= t <= self.t_off:
            return self.amplitude * math.sin(self.omega * (t - self.t_on))
        return 0.0


@dataclass(frozen=True)
class PlatoonConfig:
    n: int
    spec: ControllerSpec
    lag: LagSpec
    v_r: float = 20.0
    disturbance: Disturbance = field(default_factory=Disturbance)
    dt: float = 1e-3
    t_end: float = 40.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"platoon needs at least 2 vehicles, got n = {self.n}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        dist = self.disturbance
        if not dist.t_on < dist.t_off <= self.t_end:
            raise ValueError(
                f"need t_on < t_off <= t_end, got {dist.t_on}, {dist.t_off}, {self.t_end}"
            )

    @property
    def d(self) -> float:
        return self.spec.d

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @classmethod
    def table2(cls, spec: ControllerSpec, **kw) -> PlatoonConfig:
        """Fifteen vehicles at 20 m/s with lag 0.5 s."""
        kw.setdefault("lag", LagSpec(0.5, 0.5))
        return cls(n=15, spec=spec, **kw)


@dataclass
class SimResult:
    """Trajectories indexed ``[step, vehicle]``; ``e[:, 0]`` is NaN (the lead has no predecessor)."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    u: np.ndarray
    e: np.ndarray

    @property
    def peak_abs_error(self) -> np.ndarray:
        """Per-vehicle ``max_t |e_i(t)|``; entry 0 is NaN."""
        peaks = np.full(self.e.shape[1], np.nan)
        peaks[1:] = np.max(np.abs(self.e[:, 1:]), axis=0)
        return peaks

    def to_csv(self, fh=None) -> str | None:
        """Long-format trajectory CSV, one row per (step, vehicle)."""
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        n = self.x.shape[1]
        for k, t in enumerate(self.t):
            for i in range(n):
                e = "" if i == 0 else f"{self.e[k, i]:.9g}"
                w.writerow([f"{t:.9g}", i, f"{self.x[k, i]:.9g}", f"{self.v[k, i]:.9g}",
                            f"{self.a[k, i]:.9g}", f"{self.u[k, i]:.9g}", e])
        return out.getvalue() if fh is None else None


def available_taps(spec: ControllerSpec, i: int):
    """Taps vehicle ``i`` can use: lag ``l <= i``, and for 1-and-r-th the r-th only when ``i > r``."""
    for tap in spec.taps:
        if tap.lag > i:
            continue
        if spec.arch == ONE_AND_RTH and tap.lag == spec.r and not i > spec.r:
            continue
        yield tap


def control_matrices(cfg: PlatoonConfig):
    """``u = Gx x + Gv v + Ga a + g0`` for all vehicles (row 0, the lead, stays zero)."""
    n, spec = cfg.n, cfg.spec
    Gx = np.zeros((n, n))
    Gv = np.zeros((n, n))
    Ga = np.zeros((n, n))
    g0 = np.zeros(n)
    for i in range(1, n):
        for tap in available_taps(spec, i):
            j = i - tap.lag
            Ga[i, j] += tap.k_a
            Gv[i, i] -= tap.k_v + tap.k_p * tap.lag * spec.h_w
            Gv[i, j] += tap.k_v
            Gx[i, i] -= tap.k_p
            Gx[i, j] += tap.k_p
            g0[i] -= tap.k_p * spec.standstill(tap.lag)
    return Gx, Gv, Ga, g0


def init_equilibrium(cfg: PlatoonConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Positions, speeds and accelerations with every spacing error zero."""
    n = cfg.n
    gap = cfg.d + cfg.spec.h_w * cfg.v_r
    x = np.arange(n, dtype=float) * -gap + 0.0  # no negative zero for the lead
    v = np.full(n, float(cfg.v_r))
    a = np.zeros(n)
    return x, v, a


def spacing_errors(x, v, d, h_w) -> np.ndarray:
    e = np.full(x.shape, np.nan)
    e[..., 1:] = x[..., 1:] - x[..., :-1] + d + h_w * v[..., 1:]
    return e


def _check(y, k):
    if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > 1e150:
        raise DivergenceError(f"simulation diverged at step {k}", step=k)


@dataclass(frozen=True)
class LinearPlatoon:
    """``y' = M y + B w(t)`` with ``w = (a_lead(t), 1)``; accel and control are ``C y + D w``."""

    M: np.ndarray
    B: np.ndarray
    Ca: np.ndarray
    Da: np.ndarray
    Cu: np.ndarray
    Du: np.ndarray


def linear_model(cfg: PlatoonConfig) -> LinearPlatoon:
    """Stack the closed loop as an affine system in positions, speeds (and follower accelerations)."""
    n, tau = cfg.n, cfg.lag.tau
    Gx, Gv, Ga, g0 = control_matrices(cfg)
    Da = np.zeros((n, 2))
    Da[0, 0] = 1.0
    if tau > 0:
        m = 3 * n - 1
        Ca = np.zeros((n, m))
        Ca[1:, 2 * n :] = np.eye(n - 1)
    else:
        m = 2 * n
        # a_f = Ga_ff a_f + Ga_f0 a_0 + Gx_f x + Gv_f v + g0_f with Ga_ff strictly lower triangular
        solve = np.linalg.inv(np.eye(n - 1) - Ga[1:, 1:])
        Ca = np.zeros((n, m))
        Ca[1:, :n] = solve @ Gx[1:]
        Ca[1:, n:] = solve @ Gv[1:]
        Da[1:, 0] = solve @ Ga[1:, 0]
        Da[1:, 1] = solve @ g0[1:]
    Cu = np.zeros((n, m))
    Cu[:, :n] = Gx
    Cu[:, n : 2 * n] = Gv
    Cu += Ga @ Ca
    Du = Ga @ Da
    Du[:, 1] += g0
    # the lead reports its applied acceleration as its input
    Cu[0] = Ca[0]
    Du[0] = Da[0]

    M = np.zeros((m, m))
    B = np.zeros((m, 2))
    M[:n, n : 2 * n] = np.eye(n)
    M[n : 2 * n] = Ca
    B[n : 2 * n] = Da
    if tau > 0:
        M[2 * n :] = (Cu[1:] - Ca[1:]) / tau
        B[2 * n :] = (Du[1:] - Da[1:]) / tau
    return LinearPlatoon(M, B, Ca, Da, Cu, Du)


def rk4_affine(M: np.ndarray, B: np.ndarray, dt: float):
    """Matrices of one classical RK4 step for ``y' = M y + B w(t)``.

    Returns ``(P, Q0, Qh, Q1)`` with
    ``y(t + dt) = P y + Q0 w(t) + Qh w(t + dt/2) + Q1 w(t + dt)``.
    """
    I = np.eye(M.shape[0])
    hM = dt * M
    hM2 = hM @ hM
    P = rk4_linear_propagator(M, dt)
    Q0 = (dt / 6.0) * (I + hM + hM2 / 2 + hM2 @ hM / 4) @ B
    Qh = (dt / 6.0) * (4 * I + 2 * hM + hM2 / 2) @ B
    Q1 = (dt / 6.0) * B
    return P, Q0, Qh, Q1


def _inputs(dist: Disturbance, t: np.ndarray) -> np.ndarray:
    return np.column_stack([[dist(x) for x in t], np.ones(t.size)])


def simulate(cfg: PlatoonConfig) -> SimResult:
    """Integrate the platoon with classical RK4 at fixed step ``cfg.dt``.

    The closed loop is affine, so each RK4 step is applied as precomposed
    matrices; the arithmetic is that of the stage-by-stage scheme.
    """
    if cfg.lag.tau == 0:
        return tau_zero_dynamics(cfg)
    return _run(cfg)


def tau_zero_dynamics(cfg: PlatoonConfig) -> SimResult:
    """Instantaneous actuation: ``a_i = u_i`` and the state is positions and speeds only."""
    if cfg.lag.tau != 0:
        raise ValueError("tau_zero_dynamics requires lag.tau == 0")
    return _run(cfg)


def _run(cfg: PlatoonConfig) -> SimResult:
    # integrate deviations from the cruising equilibrium; they start at exactly
    # zero, so an undisturbed run stays exactly at equilibrium
    n, steps, dt = cfg.n, cfg.steps, cfg.dt
    model = linear_model(cfg)
    P, Q0, Qh, Q1 = rk4_affine(model.M, model.B[:, :1], dt)
    t = np.arange(steps + 1) * dt
    w = _inputs(cfg.disturbance, t)[:, :1]
    w_half = _inputs(cfg.disturbance, t[:-1] + 0.5 * dt)[:, :1]
    drive = w[:-1] @ Q0.T + w_half @ Qh.T + w[1:] @ Q1.T

    y = np.zeros(model.M.shape[0])
    Y = np.empty((steps + 1, y.size))
    Y[0] = y
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            y = P @ y + drive[k]
            Y[k + 1] = y
            if (k + 1) % 1000 == 0 or k + 1 == steps:
                _check(y, k + 1)
    dX = Y[:, :n]
    dV = Y[:, n : 2 * n]
    x0, v0, _ = init_equilibrium(cfg)
    X = x0 + np.outer(t, v0) + dX
    V = v0 + dV
    A = Y @ model.Ca.T + w @ model.Da[:, :1].T
    U = Y @ model.Cu.T + w @ model.Du[:, :1].T
    E = spacing_errors(dX, dV, 0.0, cfg.spec.h_w)
    return SimResult(t, X, V, A, U, E)


def amplification_verdict(result: SimResult | np.ndarray, tol: float = 0.02) -> str:
    """Classify the follower peak-error sequence along the string."""
    peaks = result.peak_abs_error if isinstance(result, SimResult) else np.asarray(result)
    p = peaks[1:] if np.isnan(peaks[0]) else peaks
    if p.size < 2:
        raise ValueError("need at least two followers to judge propagation")
    if np.all(p[1:] <= (1 + tol) * p[:-1]):
        return ATTENUATING
    if np.all(p[:-1] <= (1 + tol) * p[1:]):
        return AMPLIFYING
    return MIXED


def growth_ratio(result: SimResult) -> float:
    """Last-vehicle peak error over first-follower peak error."""
    p = result.peak_abs_error
    return float(p[-1] / p[1]) if p[1] > 0 else math.nan


def steady_state_amplitude(result: SimResult, omega: float, periods: int = 3) -> np.ndarray:
    """Per-follower amplitude of ``e_i`` at ``omega``, least-squares fit over the final periods."""
    span = periods * 2 * math.pi / omega
    mask = result.t >= result.t[-1] - span
    t = result.t[mask]
    basis = np.column_stack([np.sin(omega * t), np.cos(omega * t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(basis, result.e[mask][:, 1:], rcond=None)
    amp = np.full(result.e.shape[1], np.nan)
    amp[1:] = np.hypot(coef[0], coef[1])
    return amp


def with_headway(cfg: PlatoonConfig, h_w: float) -> PlatoonConfig:
    return replace(cfg, spec=cfg.spec.with_headway(h_w))


@dataclass(frozen=True)
class Table3Row:
    r: int
    k_a: float
    h_min: float
    h_a: float
    h_b: float


# headway pairs (a: above the bound, b: below it) for the reference experiments
TABLE3_ROWS = (
    Table3Row(1, 0.25, 0.8, 0.88, 0.68),
    Table3Row(2, 0.0, 0.66, 0.8, 0.63),
    Table3Row(2, 0.25, 0.44, 0.68, 0.4),
    Table3Row(3, 0.0, 0.5, 0.6, 0.47),
    Table3Row(3, 0.25, 0.28, 0.5, 0.27),
)


def table3_config(row: Table3Row, h_w: float, k_p: float = 45.0, k_v: float = 0.8, **kw) -> PlatoonConfig:
    """Reference platoon for one row: r-predecessor gains, fifteen vehicles, lag 0.5 s."""
    arch = "pf" if row.r == 1 else "rpf"
    spec = ControllerSpec.build(arch, row.r, k_p, k_v, row.k_a, h_w)
    return PlatoonConfig.table2(spec, **kw)


def table3_matrix(**kw) -> list[tuple[Table3Row, SimResult, SimResult]]:
    """Simulate every row at both headways; keyword arguments go to :class:`PlatoonConfig`."""
    out = []
    for row in TABLE3_ROWS:
        res_a = simulate(table3_config(row, row.h_a, **kw))
        res_b = simulate(table3_config(row, row.h_b, **kw))
        out.append((row, res_a, res_b))
    return out
