"""Non-negativity of the spacing-error impulse response.

Everything here works in lag-normalized time: with ``s = s'/tau0`` the gains
become ``k_p tau0^2``, ``k_v tau0``, the headway ``h_w / tau0`` and the lag
``tau / tau0`` in ``[0, 1]``, which removes ``tau0`` from the problem.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import NonHurwitzError, NotRealDistinct
from .freqstab import is_hurwitz
from .integrate import rk4_linear_propagator
from .tf import PF, ControllerSpec, RationalTF

CSV_COLUMNS = ("k_tilde_p", "k_tilde_v", "cond_tau0", "real_distinct", "cond_tau_pos")
DEFAULT_TAU_SAMPLES = np.linspace(0.0, 1.0, 21)


@dataclass(frozen=True)
class ScaledTF:
    k_a: float
    k_p: float
    k_v: float
    h_w: float
    tau: float

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"scaled lag must lie in [0, 1], got {self.tau}")

    def tf(self) -> RationalTF:
        return RationalTF(
            (self.k_p, self.k_v, self.k_a),
            (self.k_p, self.k_v + self.k_p * self.h_w, 1.0, self.tau),
        )

    def with_tau(self, tau: float) -> ScaledTF:
        return ScaledTF(self.k_a, self.k_p, self.k_v, self.h_w, tau)

    def unscale(self, tau0: float) -> tuple[float, float, float, float]:
        """Original ``(k_p, k_v, h_w, tau)`` for lag bound ``tau0``."""
        return self.k_p / tau0**2, self.k_v / tau0, self.h_w * tau0, self.tau * tau0


def time_scale(spec: ControllerSpec, tau: float, tau0: float) -> ScaledTF:
    if spec.arch != PF:
        raise ValueError("time scaling is defined for the predecessor-following loop")
    if not 0 <= tau <= tau0:
        raise ValueError(f"tau={tau} outside [0, tau0={tau0}]")
    t = spec.taps[0]
    return ScaledTF(t.k_a, t.k_p * tau0**2, t.k_v * tau0, spec.h_w / tau0, tau / tau0)


def _polish(coeffs_desc, x, steps=3):
    for _ in range(steps):
        p = np.polyval(coeffs_desc, x)
        dp = np.polyval(np.polyder(coeffs_desc), x)
        if dp == 0:
            break
        x = x - p / dp
    return x


def cubic_poles(den) -> tuple[float, float, float] | None:
    """Pole magnitudes ``(p1, p2, p3)``, ascending, of a real cubic denominator.

    ``den`` is ascending ``(c0, c1, c2, c3)`` with ``c3 > 0``; the poles sit
    at ``-p_i``. Returns ``None`` unless the three roots are real and
    distinct (trigonometric Cardano solution, polished by Newton steps).
    """
    c0, c1, c2, c3 = (float(x) for x in den)
    if c3 == 0:
        raise ValueError("cubic_poles needs a non-zero cubic coefficient")
    a, b, c = c2 / c3, c1 / c3, c0 / c3
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    disc = -(4.0 * p**3 + 27.0 * q * q)
    scale = 4.0 * abs(p) ** 3 + 27.0 * q * q
    if not (p < 0 and disc > 1e-12 * scale):
        return None
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
    desc = [1.0, a, b, c]
    roots = [_polish(desc, m * math.cos(theta - 2.0 * math.pi * k / 3.0) - a / 3.0) for k in range(3)]
    poles = sorted(-r for r in roots)
    if poles[0] == poles[1] or poles[1] == poles[2]:
        return None
    return tuple(poles)


@dataclass(frozen=True)
class PoleResidueForm:
    """``h(t) = sum_i c_i exp(-p_i t)`` plus a possible impulse of weight ``direct``."""

    poles: tuple[float, ...]
    residues: tuple[float, ...]
    direct: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return sum(c * np.exp(-p * t) for p, c in zip(self.poles, self.residues))


def pole_residue(scaled: ScaledTF) -> PoleResidueForm:
    """Partial fractions of the scaled error transfer function (``tau > 0``)."""
    if scaled.tau <= 0:
        raise ValueError("pole_residue covers the cubic case tau > 0")
    tf = scaled.tf()
    poles = cubic_poles(tf.den)
    if poles is None:
        raise NotRealDistinct("poles are not real and distinct")
    num = np.array(tf.num[::-1])
    dden = np.polyder(np.array(tf.den[::-1]))
    residues = tuple(float(np.polyval(num, -p) / np.polyval(dden, -p)) for p in poles)
    return PoleResidueForm(poles, residues)


def nnir_tau_zero(scaled: ScaledTF) -> bool:
    """Sufficient non-negativity condition for the instantaneous-actuation loop.

    Needs real distinct poles ``-p1, -p2`` and, for a quadratic numerator,
    real distinct zeros; then checks ``p1 <= h_w k_p / (1 - k_a) <= p1 + p2``.
    """
    if scaled.tau != 0:
        raise ValueError("nnir_tau_zero applies to tau = 0 only")
    k_a, k_p, k_v, h_w = scaled.k_a, scaled.k_p, scaled.k_v, scaled.h_w
    g = k_v + k_p * h_w
    disc = g * g - 4.0 * k_p
    if disc <= 0 or not k_a < 1:
        return False
    if k_a > 0 and k_v * k_v - 4.0 * k_a * k_p <= 0:
        return False
    root = math.sqrt(disc)
    p1, p2 = 0.5 * (g - root), 0.5 * (g + root)
    middle = h_w * k_p / (1.0 - k_a)
    return p1 <= middle <= p1 + p2


def nnir_tau_positive(scaled: ScaledTF) -> bool:
    """Residue-sign condition for ``tau in (0, 1]``.

    With ``c1 >= 0``: either ``c2 < 0`` and ``c3 > (p2 - p1)/(p3 - p1) c2``,
    or all residues are non-negative. Raises :class:`NotRealDistinct` when
    the poles are not real, distinct and stable.
    """
    if not 0 < scaled.tau <= 1:
        raise ValueError("nnir_tau_positive applies to 0 < tau <= 1")
    form = pole_residue(scaled)
    p1, p2, p3 = form.poles
    if p1 <= 0:
        raise NotRealDistinct("real poles but not all in the open left half-plane")
    c1, c2, c3 = form.residues
    thr = 1e-14 * max(abs(c1), abs(c2), abs(c3))
    if c1 < 0:
        return False
    if c2 < -thr:
        return c3 > (p2 - p1) / (p3 - p1) * c2
    return c3 >= 0


def _real_distinct_stable(scaled: ScaledTF) -> bool:
    if scaled.tau == 0:
        g = scaled.k_v + scaled.k_p * scaled.h_w
        return g * g - 4.0 * scaled.k_p > 0 and g > 0 and scaled.k_p > 0
    poles = cubic_poles(scaled.tf().den)
    return poles is not None and poles[0] > 0


@dataclass(frozen=True)
class RegionScan:
    """Labels for a ``(k_p, k_v)`` grid; arrays are indexed ``[i_kp, j_kv]``."""

    k_a: float
    h_w: float
    kp_values: np.ndarray
    kv_values: np.ndarray
    tau_samples: np.ndarray
    cond_tau0: np.ndarray
    real_distinct: np.ndarray
    cond_tau_pos: np.ndarray

    @property
    def admissible(self) -> np.ndarray:
        return self.cond_tau0 & self.real_distinct & self.cond_tau_pos

    def admissible_gains(self) -> list[tuple[float, float]]:
        i, j = np.nonzero(self.admissible)
        return [(float(self.kp_values[a]), float(self.kv_values[b])) for a, b in zip(i, j)]

    def label(self, k_p: float, k_v: float) -> tuple[bool, bool, bool]:
        i = int(np.flatnonzero(np.isclose(self.kp_values, k_p, rtol=1e-12, atol=0))[0])
        j = int(np.flatnonzero(np.isclose(self.kv_values, k_v, rtol=1e-12, atol=0))[0])
        return bool(self.cond_tau0[i, j]), bool(self.real_distinct[i, j]), bool(self.cond_tau_pos[i, j])

    def rows(self):
        for i, kp in enumerate(self.kp_values):
            for j, kv in enumerate(self.kv_values):
                yield (float(kp), float(kv), bool(self.cond_tau0[i, j]),
                       bool(self.real_distinct[i, j]), bool(self.cond_tau_pos[i, j]))

    def to_csv(self, fh=None) -> str | None:
        """Write the grid (row-major, ``k_p`` outer) as CSV; returns text if ``fh`` is None."""
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for kp, kv, a, b, c in self.rows():
            w.writerow([f"{kp:.9g}", f"{kv:.9g}", int(a), int(b), int(c)])
        return out.getvalue() if fh is None else None


def gain_axis(lo: float, hi: float, n: int, log: bool = True, include=()) -> np.ndarray:
    """Grid axis on ``[lo, hi]`` with extra points merged in (sorted, unique)."""
    if n <= 0 or hi < lo:
        base = np.array([])
    elif log:
        base = np.logspace(math.log10(lo), math.log10(hi), n)
    else:
        base = np.linspace(lo, hi, n)
    return np.union1d(base, np.asarray(include, dtype=float))


def region_scan(k_a: float, h_w: float, kp_values, kv_values, tau_samples=DEFAULT_TAU_SAMPLES) -> RegionScan:
    kp_values = np.asarray(kp_values, dtype=float)
    kv_values = np.asarray(kv_values, dtype=float)
    taus = np.asarray(tau_samples, dtype=float)
    shape = (kp_values.size, kv_values.size)
    c0 = np.zeros(shape, dtype=bool)
    rd = np.zeros(shape, dtype=bool)
    cp = np.zeros(shape, dtype=bool)
    positive_taus = taus[taus > 0]
    for i, kp in enumerate(kp_values):
        for j, kv in enumerate(kv_values):
            base = ScaledTF(k_a, kp, kv, h_w, 0.0)
            c0[i, j] = nnir_tau_zero(base)
            distinct = all(_real_distinct_stable(base.with_tau(t)) for t in taus)
            rd[i, j] = distinct
            if distinct and positive_taus.size:
                cp[i, j] = all(nnir_tau_positive(base.with_tau(t)) for t in positive_taus)
    return RegionScan(k_a, h_w, kp_values, kv_values, taus, c0, rd, cp)


@dataclass(frozen=True)
class ImpulseResponse:
    t: np.ndarray
    h: np.ndarray
    direct: float
    decay_rate: float
    method: str

    @property
    def min_value(self) -> float:
        return float(self.h.min())

    def _tail(self, values) -> float:
        # remaining area past t_max, assuming the slowest mode dominates
        return float(values[-1] / self.decay_rate)

    def integral(self) -> float:
        """``int h dt`` including the impulse weight and a truncation tail."""
        return float(simpson(self.h, x=self.t)) + self.direct + self._tail(self.h)

    def l1_norm(self) -> float:
        a = np.abs(self.h)
        return float(simpson(a, x=self.t)) + abs(self.direct) + self._tail(a)


def impulse_numeric(tf: RationalTF, t_max: float, dt: float) -> ImpulseResponse:
    """Sampled impulse response on ``[0, t_max]``.

    A biproper ``tf`` contributes an impulse ``direct * delta(t)`` that is
    reported separately. Real distinct poles use the exact pole/residue sum;
    otherwise the controllable canonical realization is integrated with RK4
    from the impulse initial state.
    """
    den = np.array(tf.den, dtype=float)
    stable = is_hurwitz(den) if len(den) <= 4 else bool(np.all(tf.poles().real < 0))
    if not stable:
        raise NonHurwitzError(f"impulse response of a non-Hurwitz system: denominator {tf.den}")
    n = len(den) - 1
    num = np.zeros(n + 1)
    num[: len(tf.num)] = tf.num
    direct = num[n] / den[n]
    sp = (num - direct * den)[:n] / den[n]  # strictly proper numerator over monic den
    a = den[:n] / den[n]

    t = np.arange(0.0, t_max + 0.5 * dt, dt)
    poles = np.roots(den[::-1])
    slowest = poles[np.argmin(np.abs(poles.real))]
    # tail correction only makes sense for a non-oscillating slowest mode
    decay = float(-slowest.real) if abs(slowest.imag) <= 1e-12 * abs(slowest) else math.inf
    real = np.all(np.abs(poles.imag) <= 1e-12 * np.maximum(np.abs(poles), 1e-300))
    gaps = np.abs(np.subtract.outer(poles, poles))
    sep = np.min(gaps[~np.eye(n, dtype=bool)]) if n > 1 else np.inf
    if real and sep > 1e-8 * np.max(np.abs(poles)):
        p = poles.real
        monic = np.concatenate([[1.0], a[::-1]])
        dmonic = np.polyder(monic)
        c = np.polyval(sp[::-1], p) / np.polyval(dmonic, p)
        h = (c[None, :] * np.exp(np.outer(t, p))).sum(axis=1)
        return ImpulseResponse(t, h, float(direct), decay, "residue")

    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -a
    C = sp.copy()
    sub = max(1, int(math.ceil(dt * np.max(np.abs(poles)) / 0.5)))
    step = np.linalg.matrix_power(rk4_linear_propagator(A, dt / sub), sub)
    x = np.zeros(n)
    x[-1] = 1.0
    h = np.empty(t.size)
    for k in range(t.size):
        h[k] = C @ x
        x = step @ x
    return ImpulseResponse(t, h, float(direct), decay, "rk4")
