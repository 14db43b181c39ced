"""Exact magnetic Lagrangians on the flat 2-torus.

``L(q, v) = |v|^2 / 2 + <eta(q), v>`` with the flat metric and a 1-form ``eta``
given by a truncated Fourier series, optionally plus a term ``(0, f(x))`` where
``f`` is a C^2 profile in the first coordinate.  All evaluations accept numpy
arrays and broadcast.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap(a):
    """Reduce torus coordinates into [0, 1)."""
    r = np.mod(a, 1.0)
    # mod can return 1.0 for tiny negative inputs
    return np.where(r >= 1.0, 0.0, r)


@dataclass(frozen=True)
class TorusPoint:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(wrap(self.x)))
        object.__setattr__(self, "y", float(wrap(self.y)))

    def distance(self, other: "TorusPoint") -> float:
        dx = abs(self.x - other.x)
        dy = abs(self.y - other.y)
        return math.hypot(min(dx, 1.0 - dx), min(dy, 1.0 - dy))


@dataclass(frozen=True)
class Velocity:
    v1: float
    v2: float

    def __post_init__(self):
        if not (math.isfinite(self.v1) and math.isfinite(self.v2)):
            raise ValueError("velocity components must be finite")

    @property
    def speed(self) -> float:
        return math.hypot(self.v1, self.v2)


@dataclass(frozen=True)
class PhaseState:
    q: TorusPoint
    v: Velocity

    @classmethod
    def of(cls, x: float, y: float, v1: float, v2: float) -> "PhaseState":
        return cls(TorusPoint(x, y), Velocity(v1, v2))


@dataclass(frozen=True)
class CohomologyClass:
    """Class of the closed form ``c1 dx + c2 dy``."""

    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.c1) and math.isfinite(self.c2)):
            raise ValueError("cohomology class must be finite")

    def pair(self, d1, d2):
        return self.c1 * d1 + self.c2 * d2


# --- x-profiles -------------------------------------------------------------


def _bump(r):
    """(1 - r^2)^3 on |r| < 1, zero outside: C^2, peak 1 at r = 0."""
    r = np.asarray(r, dtype=float)
    u = np.clip(1.0 - r * r, 0.0, None)
    return u ** 3


def _bump_deriv(r):
    r = np.asarray(r, dtype=float)
    u = np.clip(1.0 - r * r, 0.0, None)
    return -6.0 * r * u ** 2


def _gap_blend(t):
    """(4 t (1 - t))^3 on [0, 1]: vanishes to second order at both ends."""
    t = np.asarray(t, dtype=float)
    s = np.clip(4.0 * t * (1.0 - t), 0.0, None)
    return s ** 3


def _gap_blend_deriv(t):
    t = np.asarray(t, dtype=float)
    s = np.clip(4.0 * t * (1.0 - t), 0.0, None)
    return 3.0 * s ** 2 * 4.0 * (1.0 - 2.0 * t)


def _signed_offset(x, center):
    d = np.mod(np.asarray(x, dtype=float) - center + 0.5, 1.0) - 0.5
    return d


@dataclass(frozen=True)
class XProfile:
    """A periodic C^2 function ``f(x)`` entering the 1-form as ``(0, f(x))``.

    ``kind='bumps'``: ``f = top - depth * sum_i bump((x - c_i) / width)``.
    ``kind='plateaus'``: ``f = bottom`` on each interval, rising to ``top``
    across every gap (including the one wrapping through x = 0) with a C^2 blend.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "bumps":
            c = sorted(float(v) % 1.0 for v in self.params["centers"])
            w = float(self.params["width"])
            if not 0.0 < w <= 0.5:
                raise ValueError("bump width must lie in (0, 1/2]")
            if len(c) > 1:
                gaps = np.diff(c + [c[0] + 1.0])
                if np.any(gaps < 2.0 * w - 1e-15):
                    raise ValueError("bumps overlap; reduce width")
        elif self.kind == "plateaus":
            iv = [tuple(map(float, ab)) for ab in self.params["intervals"]]
            if not iv:
                raise ValueError("plateau profile needs at least one interval")
            flat = [v for ab in iv for v in ab]
            if any(b <= a for a, b in iv) or flat != sorted(flat):
                raise ValueError("plateau intervals must be increasing and disjoint")
            if flat[0] < 0.0 or flat[-1] >= flat[0] + 1.0:
                raise ValueError("plateau intervals must fit in one period")
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    # bumps ---------------------------------------------------------------
    def _bumps(self, x, deriv):
        top = float(self.params["top"])
        depth = float(self.params["depth"])
        w = float(self.params["width"])
        out = np.zeros_like(np.asarray(x, dtype=float))
        for c in self.params["centers"]:
            r = _signed_offset(x, float(c)) / w
            out = out + (_bump_deriv(r) / w if deriv else _bump(r))
        return -depth * out if deriv else top - depth * out

    # plateaus ------------------------------------------------------------
    def _gaps(self):
        iv = [tuple(map(float, ab)) for ab in self.params["intervals"]]
        gaps = [(iv[i][1], iv[i + 1][0]) for i in range(len(iv) - 1)]
        gaps.append((iv[-1][1], iv[0][0] + 1.0))
        return gaps

    def _plateaus(self, x, deriv):
        bottom = float(self.params["bottom"])
        top = float(self.params["top"])
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x) if deriv else np.full_like(x, bottom)
        for a, b in self._gaps():
            width = b - a
            t = np.mod(x - a, 1.0) / width
            inside = t < 1.0
            if deriv:
                out = out + np.where(inside, (top - bottom) * _gap_blend_deriv(t) / width, 0.0)
            else:
                out = out + np.where(inside, (top - bottom) * _gap_blend(t), 0.0)
        return out

    def value(self, x):
        if self.kind == "bumps":
            return self._bumps(x, False)
        return self._plateaus(x, False)

    def derivative(self, x):
        if self.kind == "bumps":
            return self._bumps(x, True)
        return self._plateaus(x, True)

    @property
    def is_constant(self) -> bool:
        if self.kind == "bumps":
            return float(self.params["depth"]) == 0.0 or not self.params["centers"]
        return float(self.params["top"]) == float(self.params["bottom"])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params}


# --- 1-forms ----------------------------------------------------------------


def _coeff_array(rows) -> np.ndarray:
    arr = np.asarray(rows if len(rows) else np.zeros((0, 4)), dtype=float).reshape(-1, 4)
    if not np.all(np.isfinite(arr)):
        raise ValueError("Fourier coefficients must be finite")
    if np.any(arr[:, 2:] != np.round(arr[:, 2:])):
        raise ValueError("Fourier degrees must be integers")
    return arr


def _trig_eval(coeffs: np.ndarray, x, y, wrt: str | None = None):
    """Evaluate sum a cos(th) + b sin(th), th = 2 pi (kx x + ky y), or a partial."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    for a, b, kx, ky in coeffs:
        th = TWO_PI * (kx * x + ky * y)
        if wrt is None:
            out = out + a * np.cos(th) + b * np.sin(th)
        else:
            k = kx if wrt == "x" else ky
            if k:
                out = out + TWO_PI * k * (b * np.cos(th) - a * np.sin(th))
    return out


@dataclass(frozen=True, eq=False)
class OneForm:
    """``eta = eta1 dx + eta2 dy`` as truncated Fourier series plus an optional
    ``(0, f(x))`` profile term.

    Each coefficient row ``[a, b, kx, ky]`` contributes
    ``a cos(2 pi (kx x + ky y)) + b sin(2 pi (kx x + ky y))``.
    """

    coeffs1: np.ndarray
    coeffs2: np.ndarray
    max_degree: int
    profile: XProfile | None = None

    def __init__(self, coeffs1=(), coeffs2=(), max_degree: int | None = None,
                 profile: XProfile | None = None):
        c1 = _coeff_array(coeffs1)
        c2 = _coeff_array(coeffs2)
        degs = np.abs(np.concatenate([c1[:, 2:], c2[:, 2:]]).ravel())
        needed = int(degs.max()) if degs.size else 0
        if max_degree is None:
            max_degree = needed
        if needed > max_degree:
            raise ValueError("coefficient degree exceeds max_degree")
        object.__setattr__(self, "coeffs1", c1)
        object.__setattr__(self, "coeffs2", c2)
        object.__setattr__(self, "max_degree", int(max_degree))
        object.__setattr__(self, "profile", profile)

    def __eq__(self, other):
        if not isinstance(other, OneForm):
            return NotImplemented
        return (self.max_degree == other.max_degree
                and np.array_equal(self.coeffs1, other.coeffs1)
                and np.array_equal(self.coeffs2, other.coeffs2)
                and self.profile == other.profile)

    __hash__ = None

    @classmethod
    def zero(cls) -> "OneForm":
        return cls()

    def __add__(self, other: "OneForm") -> "OneForm":
        if self.profile is not None and other.profile is not None:
            raise ValueError("cannot add two profile terms")
        return OneForm(
            np.concatenate([self.coeffs1, other.coeffs1]),
            np.concatenate([self.coeffs2, other.coeffs2]),
            max(self.max_degree, other.max_degree),
            self.profile if self.profile is not None else other.profile,
        )

    def scaled(self, factor: float) -> "OneForm":
        if self.profile is not None:
            raise ValueError("profile terms cannot be rescaled")
        c1, c2 = self.coeffs1.copy(), self.coeffs2.copy()
        c1[:, :2] *= factor
        c2[:, :2] *= factor
        return OneForm(c1, c2, self.max_degree)

    def __call__(self, x, y):
        e1 = _trig_eval(self.coeffs1, x, y)
        e2 = _trig_eval(self.coeffs2, x, y)
        if self.profile is not None:
            e2 = e2 + self.profile.value(np.broadcast_to(np.asarray(x, float), e2.shape))
        return e1, e2

    def curl(self, x, y):
        """``d eta / (dx ^ dy) = d_x eta2 - d_y eta1``, differentiated term by term."""
        b = _trig_eval(self.coeffs2, x, y, "x") - _trig_eval(self.coeffs1, x, y, "y")
        if self.profile is not None:
            b = b + self.profile.derivative(np.broadcast_to(np.asarray(x, float), b.shape))
        return b

    @property
    def is_closed(self) -> bool:
        """True iff the curl vanishes identically, decided on the coefficients."""
        modes: dict[tuple[float, float], np.ndarray] = {}
        # curl of mode (kx, ky) with cos/sin coefficients: 2pi (kx * c2 - ky * c1)
        for sign, coeffs, use_kx in ((1.0, self.coeffs2, True), (-1.0, self.coeffs1, False)):
            for a, b, kx, ky in coeffs:
                key, s = (kx, ky), 1.0
                if (kx, ky) < (-kx, -ky):
                    key, s = (-kx, -ky), -1.0  # cos even, sin odd
                k = kx if use_kx else ky
                acc = modes.setdefault(key, np.zeros(2))
                acc += sign * k * np.array([a, s * b])
        scale = max([1.0] + [float(np.abs(v).max()) for v in modes.values()])
        fourier_closed = all(np.all(np.abs(v) <= 1e-14 * scale) for v in modes.values())
        profile_closed = self.profile is None or self.profile.is_constant
        return fourier_closed and profile_closed

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "max_degree": self.max_degree,
            "coeffs1": [[float(a), float(b), int(kx), int(ky)] for a, b, kx, ky in self.coeffs1],
            "coeffs2": [[float(a), float(b), int(kx), int(ky)] for a, b, kx, ky in self.coeffs2],
        }
        if self.profile is not None:
            d["profile"] = self.profile.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OneForm":
        prof = d.get("profile")
        return cls(d.get("coeffs1", []), d.get("coeffs2", []), d.get("max_degree"),
                   XProfile(prof["kind"], prof["params"]) if prof else None)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "OneForm":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class MagneticLagrangian:
    eta: OneForm

    def __call__(self, x, y, v1, v2):
        e1, e2 = self.eta(x, y)
        return 0.5 * (np.square(v1) + np.square(v2)) + e1 * v1 + e2 * v2

    def perturbed(self, omega: OneForm) -> "MagneticLagrangian":
        return MagneticLagrangian(self.eta + omega)


# --- pointwise operations ---------------------------------------------------


def eval_lagrangian(lag: MagneticLagrangian, s: PhaseState) -> float:
    return float(lag(s.q.x, s.q.y, s.v.v1, s.v.v2))


def eval_energy(s: PhaseState) -> float:
    return 0.5 * (s.v.v1 ** 2 + s.v.v2 ** 2)


def magnetic_field(eta: OneForm, q: TorusPoint) -> float:
    return float(eta.curl(q.x, q.y))


def el_vector_field(lag: MagneticLagrangian, s: PhaseState) -> tuple[Velocity, Velocity]:
    """Euler-Lagrange field ``(qdot, vdot) = (v, -B(q) J v)``, ``J(v1, v2) = (-v2, v1)``."""
    b = magnetic_field(lag.eta, s.q)
    return s.v, Velocity(b * s.v.v2, -b * s.v.v1)


def lifted_displacement(p0: TorusPoint, p1: TorusPoint) -> tuple[float, float]:
    """Shortest lift of the step p0 -> p1 (each coordinate in [-1/2, 1/2))."""
    d1 = (p1.x - p0.x + 0.5) % 1.0 - 0.5
    d2 = (p1.y - p0.y + 0.5) % 1.0 - 0.5
    return d1, d2


def curve_action(lag: MagneticLagrangian, c: CohomologyClass, k: float,
                 path: Sequence[tuple[float, PhaseState]]) -> float:
    """Midpoint-rule action of ``L - c + k`` along a sampled path.

    Each segment is taken straight: its velocity is the lifted displacement
    over the time step, evaluated at the lifted midpoint.  The ``c`` term pairs
    with the lifted displacement, so winding is accounted for as long as
    consecutive samples are less than half a period apart.  The velocities
    stored in the samples are not used.
    """
    if len(path) < 2:
        raise ValueError("path needs at least two samples")
    total = 0.0
    for (t0, s0), (t1, s1) in zip(path[:-1], path[1:]):
        dt = t1 - t0
        if not dt > 0.0:
            raise ValueError("path times must be strictly increasing")
        d1, d2 = lifted_displacement(s0.q, s1.q)
        mx, my = s0.q.x + 0.5 * d1, s0.q.y + 0.5 * d2
        v1, v2 = d1 / dt, d2 / dt
        total += dt * (float(lag(mx, my, v1, v2)) + k) - c.pair(d1, d2)
    return total
