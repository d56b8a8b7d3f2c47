"""Minimum employable time headway, analytic norm test and gain synthesis."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GainOutOfRangeError
from .tf import ONE_AND_RTH, PF, RPF, ControllerSpec, RationalTF


@dataclass(frozen=True)
class HeadwayBound:
    arch: str
    r: int
    k_a: float
    tau0: float
    h_min: float


def check_accel_gain(arch: str, r: int, k_a: float) -> None:
    """Raise :class:`GainOutOfRangeError` if ``k_a`` is inadmissible for ``arch``."""
    if arch == PF:
        if not 0 <= k_a < 1:
            raise GainOutOfRangeError(f"PF requires k_a in [0, 1), got k_a = {k_a}")
    elif arch == RPF:
        if not 0 <= r * k_a < 1:
            raise GainOutOfRangeError(f"rPF requires r*k_a in [0, 1), got r*k_a = {r * k_a}")
    elif arch == ONE_AND_RTH:
        if not 0 <= 2 * k_a < 1:
            raise GainOutOfRangeError(f"1-and-r-th requires 2*k_a in [0, 1), got 2*k_a = {2 * k_a}")
    else:
        raise ValueError(f"unknown architecture {arch!r}")


def h_min(arch: str, r: int, k_a: float, tau0: float) -> HeadwayBound:
    """Closed-form minimum headway for each information-flow architecture.

    ======================  ===============================  ==================
    architecture            h_min                            admissible k_a
    ======================  ===============================  ==================
    PF                      2 tau0 / (1 + k_a)               0 <= k_a < 1
    rPF                     4 tau0 / ((1 + r)(1 + r k_a))    0 <= r k_a < 1
    1-and-r-th              4 tau0 / ((1 + r)(1 + 2 k_a))    0 <= 2 k_a < 1
    ======================  ===============================  ==================
    """
    if not tau0 > 0:
        raise ValueError(f"tau0 must be positive, got {tau0}")
    if arch == PF:
        if r not in (None, 1):
            raise ValueError(f"PF architecture implies r = 1, got r = {r}")
        r = 1
    elif arch == RPF and r < 1:
        raise ValueError(f"rPF requires r >= 1, got r = {r}")
    elif arch == ONE_AND_RTH and r < 2:
        raise ValueError(f"1-and-r-th requires r >= 2, got r = {r}")
    check_accel_gain(arch, r, k_a)
    if arch == PF:
        value = 2 * tau0 / (1 + k_a)
    elif arch == RPF:
        value = 4 * tau0 / ((1 + r) * (1 + r * k_a))
    else:
        value = 4 * tau0 / ((1 + r) * (1 + 2 * k_a))
    return HeadwayBound(arch, r, k_a, tau0, value)


@dataclass(frozen=True)
class NormTest:
    """Outcome of :func:`analytic_norm_test`.

    ``condition`` names the branch that decided the outcome: ``"nominal"``
    (tau = 0), ``"A"`` (non-negative middle coefficient), ``"B"``
    (non-positive discriminant) or ``"fail"``. On failure ``witness_omega``
    is a frequency where ``|H_e(jw)| > 1``.
    """

    holds: bool
    condition: str
    witness_omega: float | None = None

    def __bool__(self):
        return self.holds


def norm_quartic(k_p, k_v, k_a, h_w, tau) -> tuple[float, float, float]:
    """Coefficients ``(a, b, c)`` of ``a x^2 + b x + c`` in ``x = w^2``.

    ``|H_e(jw)| <= 1`` exactly when this quadratic is non-negative at
    ``x = w^2``.
    """
    g = k_v + h_w * k_p
    a = tau * tau
    b = (1 - k_a * k_a) - 2 * tau * g
    c = g * g - k_v * k_v - 2 * k_p * (1 - k_a)
    return a, b, c


def analytic_norm_test(k_p, k_v, k_a, h_w, tau) -> NormTest:
    """Decide ``||H_e||_inf <= 1`` for one lag value without a frequency sweep."""
    a, b, c = norm_quartic(k_p, k_v, k_a, h_w, tau)
    if a == 0:
        # linear in x: b x + c >= 0 for every x >= 0
        if c >= 0 and b >= 0:
            return NormTest(True, "nominal")
        if c < 0:
            x = -c / (2 * b) if b > 0 else 1.0
        else:
            x = 2 * c / -b
        return NormTest(False, "fail", math.sqrt(x))
    if c < 0:
        x_root = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
        x = max(-b / (2 * a), 0.0)
        if x == 0.0:
            x = 0.5 * x_root
        return NormTest(False, "fail", math.sqrt(x))
    if b >= 0:
        return NormTest(True, "A")
    if b * b <= 4 * a * c:
        return NormTest(True, "B")
    return NormTest(False, "fail", math.sqrt(-b / (2 * a)))


def robust_norm_test(k_p, k_v, k_a, h_w, taus) -> bool:
    """:func:`analytic_norm_test` holds at every lag in ``taus``."""
    return all(analytic_norm_test(k_p, k_v, k_a, h_w, t).holds for t in taus)


@dataclass(frozen=True)
class GainRegionSpec:
    """Intercepts of the two half-planes whose intersection holds stabilizing gains.

    ``S1 = {k_v/a1 + k_p/b1 >= 1}`` encodes the nominal inequality and
    ``S2 = {k_v/a2 + k_p/b2 <= 1}`` the perturbed one at ``tau0``.
    """

    k_a: float
    eta: float
    tau0: float
    a1: float
    b1: float
    a2: float
    b2: float

    @property
    def h_w(self) -> float:
        return 2 * self.tau0 * (1 + self.eta) / (1 + self.k_a)

    def in_s1(self, k_p, k_v) -> bool:
        return k_p > 0 and k_v > 0 and k_v / self.a1 + k_p / self.b1 >= 1

    def in_s2(self, k_p, k_v) -> bool:
        return k_p > 0 and k_v > 0 and k_v / self.a2 + k_p / self.b2 <= 1


def gain_region(k_a: float, eta: float, tau0: float) -> GainRegionSpec:
    if not 0 < k_a < 1:
        raise GainOutOfRangeError(f"k_a must lie in (0, 1), got {k_a}")
    if not eta > 0:
        raise GainOutOfRangeError(f"eta must be positive, got {eta}")
    if not tau0 > 0:
        raise ValueError(f"tau0 must be positive, got {tau0}")
    q = 1 - k_a * k_a
    a1 = q / (2 * tau0 * (1 + eta))
    b1 = (1 + k_a) ** 2 * (1 - k_a) / (2 * tau0**2 * (1 + eta) ** 2)
    a2 = q / (2 * tau0)
    b2 = q * (1 + k_a) / (4 * tau0**2 * (1 + eta))
    return GainRegionSpec(k_a, eta, tau0, a1, b1, a2, b2)


def synthesize_gains(k_a: float, eta: float, tau0: float) -> tuple[float, float, GainRegionSpec]:
    """Deterministic ``(k_p, k_v)`` inside ``S1 & S2``.

    Takes the sliver ``k_p = min(b1, b2) / 100`` and the midpoint of the
    ``k_v`` interval cut out by the two boundary lines there. For small
    ``eta`` the two lines can cross below that sliver, so ``k_p`` is capped
    at half the crossing point.
    """
    region = gain_region(k_a, eta, tau0)
    k_p = min(region.b1, region.b2) / 100
    slope_gap = region.a2 / region.b2 - region.a1 / region.b1
    if slope_gap > 0:
        k_p = min(k_p, 0.5 * (region.a2 - region.a1) / slope_gap)
    kv_lo = region.a1 * (1 - k_p / region.b1)
    kv_hi = region.a2 * (1 - k_p / region.b2)
    return k_p, 0.5 * (kv_lo + kv_hi), region


def synthesize_spec(arch: str, r: int, k_a: float, eta: float, tau0: float, d: float = 5.0) -> ControllerSpec:
    """Equal-gain controller meeting the sum-norm condition for ``arch``.

    ``k_a`` is the per-tap acceleration gain. The taps are folded into one
    equivalent predecessor-following loop (summed gains, rescaled headway),
    gains are synthesized for it, and then split back across the taps.
    """
    if arch == PF:
        r, n_taps, weight = 1, 1, 1.0
    elif arch == RPF:
        n_taps, weight = r, (r + 1) / 2
    elif arch == ONE_AND_RTH:
        if r < 2:
            raise ValueError("1-and-r-th requires r >= 2")
        n_taps, weight = 2, (1 + r) / 2
    else:
        raise ValueError(f"unknown architecture {arch!r}")
    kbar_a = n_taps * k_a
    kbar_p, kbar_v, region = synthesize_gains(kbar_a, eta, tau0)
    h_w = region.h_w / weight
    return ControllerSpec.build(arch, r, kbar_p / n_taps, kbar_v / n_taps, k_a, h_w, d)


@dataclass(frozen=True)
class Recast:
    """Gains without self-acceleration feedback equivalent to a loop that has it."""

    k_a: float
    k_v: float
    k_p: float
    tau_eff: float
    h_min: float


def recast_self_accel(kbar_a, kbar_v, kbar_p, tau) -> Recast:
    """Fold own-acceleration feedback ``kbar_a`` into lag and gains.

    ``h_min`` is the implied bound ``2 tau / (1 + 2 kbar_a)`` when ``tau`` is
    taken as the lag bound.
    """
    if kbar_a < 0:
        raise GainOutOfRangeError(f"kbar_a must be >= 0, got {kbar_a}")
    f = 1 + kbar_a
    return Recast(kbar_a / f, kbar_v / f, kbar_p / f, tau / f, 2 * tau / (1 + 2 * kbar_a))


def unrecast_self_accel(k_a, k_v, k_p, tau_eff) -> tuple[float, float, float, float]:
    """Inverse of :func:`recast_self_accel`; needs ``0 <= k_a < 1``."""
    if not 0 <= k_a < 1:
        raise GainOutOfRangeError(f"k_a must lie in [0, 1), got {k_a}")
    f = 1 / (1 - k_a)
    return k_a * f, k_v * f, k_p * f, tau_eff * f


def self_accel_error_tf(kbar_a, kbar_v, kbar_p, h_w, tau) -> RationalTF:
    """Error propagation when the follower also feeds back its own acceleration."""
    return RationalTF((kbar_p, kbar_v, kbar_a), (kbar_p, kbar_v + kbar_p * h_w, 1 + kbar_a, tau))
