"""Spacing-error transfer functions for predecessor-following architectures.

Polynomials are stored as tuples of real coefficients in *ascending* powers
of ``s``; ``(45.0, 0.8)`` is ``45 + 0.8 s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GainOutOfRangeError, NonHurwitzError

PF = "pf"
RPF = "rpf"
ONE_AND_RTH = "one-and-rth"
ARCHITECTURES = (PF, RPF, ONE_AND_RTH)


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class RationalTF:
    """Proper rational function ``num(s) / den(s)`` with real coefficients."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self):
        num = _trim(self.num)
        den = _trim(self.den)
        if not all(math.isfinite(x) for x in num + den):
            raise ValueError("transfer function coefficients must be finite")
        if den == (0.0,) or not den:
            raise ValueError("denominator is identically zero")
        if len(num) > len(den):
            raise ValueError(
                f"improper transfer function: deg num {len(num) - 1} > deg den {len(den) - 1}"
            )
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def order(self) -> int:
        return len(self.den) - 1

    @property
    def relative_degree(self) -> int:
        return len(self.den) - len(self.num)

    def __call__(self, s):
        """Evaluate at complex ``s`` (scalar or array) without axis checks."""
        return np.polyval(self.num[::-1], s) / np.polyval(self.den[::-1], s)

    def dc_gain(self) -> float:
        return self.num[0] / self.den[0]

    def high_frequency_gain(self) -> float:
        """Limit of ``|H(jw)|`` as ``w`` goes to infinity."""
        if self.relative_degree > 0:
            return 0.0
        return abs(self.num[-1] / self.den[-1])

    def poles(self) -> np.ndarray:
        return np.roots(self.den[::-1])

    def zeros(self) -> np.ndarray:
        return np.roots(self.num[::-1]) if len(self.num) > 1 else np.array([])

    def normalized(self) -> RationalTF:
        """Scale so the denominator constant term is one."""
        c = self.den[0]
        return RationalTF(tuple(x / c for x in self.num), tuple(x / c for x in self.den))


@dataclass(frozen=True)
class Tap:
    """Feedback from the ``lag``-th predecessor."""

    lag: int
    k_p: float
    k_v: float
    k_a: float = 0.0


@dataclass(frozen=True)
class ControllerSpec:
    """Information-flow architecture, per-tap gains and spacing policy.

    Use the :meth:`pf`, :meth:`rpf` and :meth:`one_and_rth` constructors for
    the equal-gain configurations; arbitrary per-tap gains can be passed to
    the class directly.
    """

    arch: str
    taps: tuple[Tap, ...]
    h_w: float
    d: float = 5.0
    r: int = field(default=0)

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.arch!r}; expected one of {ARCHITECTURES}")
        taps = tuple(self.taps)
        object.__setattr__(self, "taps", taps)
        if not taps:
            raise ValueError("at least one tap is required")
        lags = [t.lag for t in taps]
        if lags[0] < 1 or any(b <= a for a, b in zip(lags, lags[1:])):
            raise ValueError(f"tap lag indices must be strictly increasing and >= 1, got {lags}")
        for t in taps:
            if not (t.k_p > 0 and t.k_v > 0):
                raise GainOutOfRangeError(f"tap {t.lag}: k_p and k_v must be positive (k_p={t.k_p}, k_v={t.k_v})")
            if t.k_a < 0:
                raise GainOutOfRangeError(f"tap {t.lag}: k_a must be >= 0, got {t.k_a}")
        if self.h_w < 0:
            raise GainOutOfRangeError(f"time headway must be non-negative, got {self.h_w}")
        r = lags[-1]
        if self.arch == PF and lags != [1]:
            raise ValueError("PF architecture has exactly one tap with lag 1")
        if self.arch == RPF and lags != list(range(1, r + 1)):
            raise ValueError(f"rPF architecture needs taps 1..{r}, got {lags}")
        if self.arch == ONE_AND_RTH and (len(lags) != 2 or lags[0] != 1 or r < 2):
            raise ValueError(f"1-and-r-th architecture needs taps {{1, r}} with r >= 2, got {lags}")
        object.__setattr__(self, "r", r)

    @classmethod
    def pf(cls, k_p, k_v, k_a=0.0, h_w=1.0, d=5.0) -> ControllerSpec:
        return cls(PF, (Tap(1, k_p, k_v, k_a),), h_w, d)

    @classmethod
    def rpf(cls, r, k_p, k_v, k_a=0.0, h_w=1.0, d=5.0) -> ControllerSpec:
        return cls(RPF, tuple(Tap(l, k_p, k_v, k_a) for l in range(1, r + 1)), h_w, d)

    @classmethod
    def one_and_rth(cls, r, k_p, k_v, k_a=0.0, h_w=1.0, d=5.0) -> ControllerSpec:
        return cls(ONE_AND_RTH, (Tap(1, k_p, k_v, k_a), Tap(r, k_p, k_v, k_a)), h_w, d)

    @classmethod
    def build(cls, arch, r, k_p, k_v, k_a=0.0, h_w=1.0, d=5.0) -> ControllerSpec:
        """Equal-gain spec for any architecture tag."""
        if arch == PF:
            if r not in (None, 1):
                raise ValueError(f"PF architecture implies r = 1, got r = {r}")
            return cls.pf(k_p, k_v, k_a, h_w, d)
        if arch == RPF:
            return cls.rpf(r, k_p, k_v, k_a, h_w, d)
        if arch == ONE_AND_RTH:
            return cls.one_and_rth(r, k_p, k_v, k_a, h_w, d)
        raise ValueError(f"unknown architecture {arch!r}")

    def standstill(self, lag: int) -> float:
        """Standstill distance to the ``lag``-th predecessor."""
        return lag * self.d

    def with_headway(self, h_w: float) -> ControllerSpec:
        return ControllerSpec(self.arch, self.taps, h_w, self.d)


@dataclass(frozen=True)
class LagSpec:
    tau: float
    tau0: float

    def __post_init__(self):
        if not self.tau0 > 0:
            raise ValueError(f"lag bound tau0 must be positive, got {self.tau0}")
        if not 0 <= self.tau <= self.tau0:
            raise ValueError(f"lag tau={self.tau} outside [0, tau0={self.tau0}]")


def _tau(lag) -> float:
    return lag.tau if isinstance(lag, LagSpec) else float(lag)


def shared_denominator(spec: ControllerSpec, tau: float) -> tuple[float, ...]:
    """``tau s^3 + s^2 + sum_l [(k_vl + l k_pl h_w) s + k_pl]``."""
    c0 = sum(t.k_p for t in spec.taps)
    c1 = sum(t.k_v + t.lag * t.k_p * spec.h_w for t in spec.taps)
    return (c0, c1, 1.0, float(tau))


def build_error_tf_basic(spec: ControllerSpec, lag) -> RationalTF:
    """Predecessor-following error transfer function without acceleration feedforward."""
    if spec.arch != PF or spec.taps[0].k_a != 0:
        raise ValueError("basic error transfer function requires a PF spec with k_a = 0")
    return build_error_tf_accel(spec, lag)


def build_error_tf_accel(spec: ControllerSpec, lag) -> RationalTF:
    """``H_e(s) = (k_a s^2 + k_v s + k_p) / (tau s^3 + s^2 + (k_v + k_p h_w) s + k_p)``."""
    if spec.arch != PF and len(spec.taps) != 1:
        raise ValueError(f"expected a single-tap spec, got architecture {spec.arch}")
    t = spec.taps[0]
    return RationalTF((t.k_p, t.k_v, t.k_a), shared_denominator(spec, _tau(lag)))


def build_error_tf_taps(spec: ControllerSpec, lag) -> list[tuple[int, RationalTF]]:
    """One transfer function per tap, all over the shared denominator."""
    den = shared_denominator(spec, _tau(lag))
    return [(t.lag, RationalTF((t.k_p, t.k_v, t.k_a), den)) for t in spec.taps]


def eval_jw(tf: RationalTF, omega: float) -> complex:
    """``tf(j omega)`` by Horner evaluation.

    Raises :class:`NonHurwitzError` if the denominator vanishes on the axis.
    """
    s = 1j * float(omega)
    den = 0j
    for c in reversed(tf.den):
        den = den * s + c
    if abs(den) < 1e-300:
        raise NonHurwitzError(f"denominator vanishes at s = j{omega!r}: pole on the imaginary axis")
    num = 0j
    for c in reversed(tf.num):
        num = num * s + c
    return num / den


def freqresp(tf: RationalTF, omega) -> np.ndarray:
    """Vectorized ``tf(j omega)`` over an array of frequencies."""
    s = 1j * np.asarray(omega, dtype=float)
    den = np.polyval(tf.den[::-1], s)
    if np.any(np.abs(den) < 1e-300):
        raise NonHurwitzError("denominator vanishes on the imaginary axis")
    return np.polyval(tf.num[::-1], s) / den
