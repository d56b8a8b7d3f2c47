"""Robust string-stability tests in the frequency domain.

Three criteria are available, evaluated on a grid over the parasitic lag
``tau`` in ``[0, tau0]``:

* ``HINF_SINGLE``  -- ``||H(jw)||_inf <= 1`` for a single-tap architecture;
* ``SPECTRAL_RADIUS`` -- ``sup_w rho(P(z; w)) <= 1`` with
  ``P(z) = z^r - sum_l H_l(jw) z^(r-l)``;
* ``SUM_NORM`` -- ``sum_l ||H_l(jw)||_inf <= 1`` (sufficient).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NonHurwitzError
from .roots import spectral_radius
from .tf import ControllerSpec, RationalTF, build_error_tf_taps, eval_jw, freqresp

HINF_SINGLE = "hinf"
SPECTRAL_RADIUS = "rho"
SUM_NORM = "sum"
CRITERIA = (HINF_SINGLE, SPECTRAL_RADIUS, SUM_NORM)

STABLE = "RobustlyStringStable"
VIOLATED = "Violated"

VERDICT_TOL = 1e-9
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SweepConfig:
    omega_min: float = 1e-3
    omega_max: float = 1e3
    points_per_decade: int = 200
    refine_tol: float = 1e-10
    tau_grid_points: int = 33

    def __post_init__(self):
        if not self.omega_min > 0:
            raise ValueError("omega_min must be positive")
        if not self.omega_max > self.omega_min:
            raise ValueError("omega_max must exceed omega_min")
        if self.points_per_decade < 16:
            raise ValueError("points_per_decade must be >= 16")
        if self.tau_grid_points < 2:
            raise ValueError("tau_grid_points must be >= 2")

    def tau_grid(self, tau0: float) -> np.ndarray:
        if tau0 == 0:
            return np.array([0.0])
        return np.linspace(0.0, tau0, self.tau_grid_points)

    def omega_grid(self, lo=None, hi=None) -> np.ndarray:
        lo = self.omega_min if lo is None else lo
        hi = self.omega_max if hi is None else hi
        decades = math.log10(hi) - math.log10(lo)
        n = max(int(math.ceil(decades * self.points_per_decade)) + 1, 2)
        return np.logspace(math.log10(lo), math.log10(hi), n)


@dataclass(frozen=True)
class StabilityReport:
    verdict: str
    worst_value: float
    worst_omega: float
    worst_tau: float
    criterion: str

    @property
    def stable(self) -> bool:
        return self.verdict == STABLE


def max_workers() -> int:
    """Thread cap from ``PLATOONLAB_THREADS`` (defaults to the CPU count)."""
    env = os.environ.get("PLATOONLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def is_hurwitz(den) -> bool:
    """Hurwitz test for polynomials up to degree three (ascending coefficients)."""
    c = list(den)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    deg = len(c) - 1
    if deg > 3:
        raise ValueError(f"Hurwitz test supports degree <= 3, got degree {deg}")
    if deg == 0:
        return c[0] != 0
    sign = 1.0 if c[-1] > 0 else -1.0
    c = [sign * x for x in c]
    if any(x <= 0 for x in c):
        return False
    if deg == 3:
        a0, a1, a2, a3 = c
        return a2 * a1 > a3 * a0
    return True


def _root_mags(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    # a leading coefficient this small puts a root beyond float range; drop it
    while c.size > 1 and abs(c[-1]) < 1e-250 * np.max(np.abs(c[:-1])):
        c = c[:-1]
    if c.size < 2:
        return np.array([])
    return np.abs(np.roots(c[::-1]))


def _sweep_bounds(tf: RationalTF, cfg: SweepConfig) -> tuple[float, float]:
    """Widen the configured band so every pole and zero corner is covered."""
    mags = np.concatenate([_root_mags(tf.den), _root_mags(tf.num)])
    mags = mags[np.isfinite(mags) & (mags > 0)]
    lo, hi = cfg.omega_min, cfg.omega_max
    if mags.size:
        lo = min(lo, 0.1 * mags.min())
        hi = max(hi, 10.0 * mags.max())
    # keep w**3 finite; anything past this is covered by the high-frequency limit
    return max(lo, 1e-100), min(hi, 1e100)


def _golden_max(f, a: float, b: float, tol: float) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[a, b]`` by golden-section search."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * max(1.0, abs(a) + abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def hinf_norm(tf: RationalTF, cfg: SweepConfig | None = None, check: bool = True) -> tuple[float, float]:
    """``sup_w |tf(jw)|`` and its argmax.

    Log-grid sweep (band widened to cover all pole/zero corners), plus
    ``w = 0`` and the high-frequency limit, with golden-section refinement
    around each of the largest local maxima of the grid. The argmax is
    ``inf`` when the supremum is the high-frequency limit.
    """
    cfg = cfg or SweepConfig()
    if check and not is_hurwitz(tf.den):
        raise NonHurwitzError(f"denominator {tf.den} is not Hurwitz")
    lo, hi = _sweep_bounds(tf, cfg)
    w = cfg.omega_grid(lo, hi)
    mag = np.abs(freqresp(tf, w))

    best_val, best_w = abs(tf.dc_gain()), 0.0
    hf = tf.high_frequency_gain()
    if hf > best_val:
        best_val, best_w = hf, math.inf

    interior = np.flatnonzero((mag[1:-1] >= mag[:-2]) & (mag[1:-1] >= mag[2:])) + 1
    candidates = list(interior)
    if mag[0] >= mag[1]:
        candidates.append(0)
    if mag[-1] >= mag[-2]:
        candidates.append(len(w) - 1)
    candidates.sort(key=lambda i: -mag[i])

    def f(logw):
        return abs(eval_jw(tf, 10.0**logw))

    for i in candidates[:8]:
        if mag[i] > best_val or (mag[i] == best_val and w[i] < best_w):
            best_val, best_w = float(mag[i]), float(w[i])
        a = math.log10(w[max(i - 1, 0)])
        b = math.log10(w[min(i + 1, len(w) - 1)])
        if b <= a:
            continue
        lw, val = _golden_max(f, a, b, cfg.refine_tol)
        if val > best_val:
            best_val, best_w = val, 10.0**lw
    return best_val, best_w


def tap_polynomials(taps, omega) -> np.ndarray:
    """Descending coefficients of ``P(z; w)`` for each ``w``; shape ``(len(w), r + 1)``."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    r = max(lag for lag, _ in taps)
    coeffs = np.zeros((omega.size, r + 1), dtype=complex)
    coeffs[:, 0] = 1.0
    for lag, tf in taps:
        coeffs[:, lag] -= freqresp(tf, omega)
    return coeffs


def spectral_radius_P(taps, omega, tol: float = 1e-12, max_iter: int = 200):
    """Spectral radius of the spatial characteristic polynomial at ``omega``.

    Scalar ``omega`` gives a float, an array gives an array.
    """
    scalar = np.ndim(omega) == 0
    r = max(lag for lag, _ in taps)
    if r > 8:
        raise ValueError(f"spatial polynomial degree {r} exceeds the supported maximum of 8")
    coeffs = tap_polynomials(taps, omega)
    rho = spectral_radius(coeffs, tol, max_iter)
    return float(rho[0]) if scalar else rho


def _evaluate_tau(spec: ControllerSpec, tau: float, cfg: SweepConfig, criterion: str):
    taps = build_error_tf_taps(spec, tau)
    den = taps[0][1].den
    if not is_hurwitz(den):
        raise NonHurwitzError(
            f"closed loop is not Hurwitz at tau = {tau}: denominator {den}", tau=tau
        )
    if criterion == HINF_SINGLE:
        if len(taps) != 1:
            raise ValueError("the single-transfer-function H-infinity criterion needs a single-tap spec")
        return hinf_norm(taps[0][1], cfg, check=False)
    if criterion == SUM_NORM:
        norms = [hinf_norm(tf, cfg, check=False) for _, tf in taps]
        total = sum(v for v, _ in norms)
        w_at = max(norms, key=lambda vw: vw[0])[1]
        return total, w_at
    if criterion == SPECTRAL_RADIUS:
        w = np.concatenate([[0.0], cfg.omega_grid()])
        rho = spectral_radius_P(taps, w)
        k = int(np.argmax(rho))
        return float(rho[k]), float(w[k])
    raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")


def default_criterion(spec: ControllerSpec) -> str:
    return HINF_SINGLE if len(spec.taps) == 1 else SUM_NORM


def robust_check(
    spec: ControllerSpec,
    tau0: float,
    cfg: SweepConfig | None = None,
    criterion: str | None = None,
) -> StabilityReport:
    """Worst case of ``criterion`` over a uniform grid ``tau in [0, tau0]``."""
    cfg = cfg or SweepConfig()
    criterion = criterion or default_criterion(spec)
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    if tau0 < 0:
        raise ValueError("tau0 must be non-negative")
    taus = cfg.tau_grid(tau0)
    workers = min(max_workers(), len(taus))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda t: _evaluate_tau(spec, float(t), cfg, criterion), taus))
    else:
        results = [_evaluate_tau(spec, float(t), cfg, criterion) for t in taus]

    worst = None
    for tau, (val, w) in zip(taus, results):
        key = (-val, w, tau)
        if worst is None or key < worst[0]:
            worst = (key, val, w, float(tau))
    _, val, w, tau = worst
    verdict = STABLE if val <= 1.0 + VERDICT_TOL else VIOLATED
    return StabilityReport(verdict, float(val), float(w), tau, criterion)
