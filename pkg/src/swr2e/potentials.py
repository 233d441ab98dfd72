"""Regularized potentials and the driving laser field.

The bare Coulomb kernel -1/|x| is not locally integrable in one space
dimension, so every interaction here is built from a regularized kernel.
The mollifier B_eps is the usual polynomial bump of order M; the Coulomb
kernel is capped inside |t| < rho = eps/2 by the C^1 parabola
-(3 rho^2 - t^2)/(2 rho^3), which is the interior potential of a uniformly
charged ball of radius rho.  Convolving the capped kernel against B_eps
gives a potential G_eps that is finite and attractive everywhere, smooth,
and identical to the plain mollification of -1/|x| wherever |x| >= 3 eps/2,
so the classical eps^2 mollification accuracy survives away from the core.

Soft-core nucleus potentials, the quintic barrier used to confine local
orbitals, and the circularly polarized laser envelope live here as well.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad

QUAD_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@lru_cache(maxsize=None)
def _sigma(order: int) -> Fraction:
    """Exact normalization 1 / int_{-1}^{1} (1-u^2)^M du.

    The integral obeys I_M = I_{M-1} * 2M/(2M+1) with I_0 = 2, so sigma is
    rational: 3/4, 15/16, 35/32, 315/256 for M = 1..4.
    """
    val = Fraction(2)
    for k in range(1, order + 1):
        val *= Fraction(2 * k, 2 * k + 1)
    return 1 / val


@dataclass(frozen=True)
class Mollifier:
    """Polynomial bump B_eps(x) = sigma_M/eps (1 - (x/eps)^2)^M on [-eps, eps]."""

    eps: float
    order: int = 4

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("mollifier radius must be positive")
        if self.order < 1:
            raise ValueError("mollifier order must be a positive integer")

    @property
    def sigma(self) -> float:
        return float(_sigma(self.order))

    @property
    def sigma_exact(self) -> Fraction:
        return _sigma(self.order)


def mollifier_value(m: Mollifier, x):
    """B_eps at x (scalar or array)."""
    u = np.asarray(x, dtype=float) / m.eps
    body = (m.sigma / m.eps) * np.where(np.abs(u) < 1.0, 1.0 - u * u, 0.0) ** m.order
    out = np.where(np.abs(u) < 1.0, body, 0.0)
    return out if out.ndim else float(out)


def _capped_kernel(t: float, rho: float) -> float:
    at = abs(t)
    if at >= rho:
        return -1.0 / at
    return -(3.0 * rho * rho - t * t) / (2.0 * rho ** 3)


def smoothed_coulomb(m: Mollifier, scale_4pi: bool = False):
    """Smoothed attractive Coulomb potential G_eps as a callable.

    G_eps(x) = c * int B_eps(s) K(x - s) ds with the capped kernel K above
    and c = 1/(4 pi) when scale_4pi is set, 1 otherwise.  The quadrature is
    split at the cap seams x -+ eps/2 where K changes branch.  Accepts
    scalars or arrays; array evaluation deduplicates repeated abscissae, so
    tabulating on tensor grids (where differences repeat along diagonals)
    stays cheap.

    Raises QuadratureError if the integrator cannot certify the result to
    QUAD_TOL.
    """
    eps, order = m.eps, m.order
    sig = m.sigma
    rho = eps / 2.0
    c = 1.0 / (4.0 * np.pi) if scale_4pi else 1.0

    def bump(s):
        u = s / eps
        return sig / eps * (1.0 - u * u) ** order if abs(u) < 1.0 else 0.0

    @lru_cache(maxsize=None)
    def g_scalar(x: float) -> float:
        seams = sorted({-eps, eps, *(p for p in (x - rho, x, x + rho)
                                     if -eps < p < eps)})
        total, err = 0.0, 0.0
        with warnings.catch_warnings():
            # the accumulated abserr below is the accuracy authority
            warnings.simplefilter("ignore", IntegrationWarning)
            for lo, hi in zip(seams[:-1], seams[1:]):
                val, abserr = quad(lambda s: bump(s) * _capped_kernel(x - s, rho),
                                   lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
                total += val
                err += abserr
        if err > QUAD_TOL:
            raise QuadratureError(
                f"G_eps({x:.6g}) quadrature error {err:.2e} exceeds {QUAD_TOL:.0e}")
        return c * total

    def g(x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            return g_scalar(float(arr))
        uniq, inverse = np.unique(arr.ravel(), return_inverse=True)
        vals = np.array([g_scalar(float(u)) for u in uniq])
        return vals[inverse].reshape(arr.shape)

    return g


def mollify(m: Mollifier, f, x):
    """Convolution (f * B_eps) evaluated at points x by adaptive quadrature."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xs)
    for k, xv in enumerate(xs):
        val, abserr = quad(lambda s: f(xv - s) * mollifier_value(m, s),
                           -m.eps, m.eps, epsabs=1e-12, epsrel=1e-12, limit=200)
        if abserr > QUAD_TOL:
            raise QuadratureError(f"mollify at {xv:.6g}: error {abserr:.2e}")
        out[k] = val
    return out if np.ndim(x) else float(out[0])


@dataclass(frozen=True)
class NucleusSet:
    """Fixed nuclei: positions and positive charges, equal lengths."""

    positions: tuple[float, ...]
    charges: tuple[float, ...]

    def __post_init__(self):
        if len(self.positions) != len(self.charges):
            raise ValueError("positions and charges must have equal lengths")
        if any(z <= 0 for z in self.charges):
            raise ValueError("nuclear charges must be positive")

    @staticmethod
    def symmetric_pair(x: float, z: float = 1.0) -> "NucleusSet":
        return NucleusSet((-x, x), (z, z))


def softcore_potential(n: NucleusSet, eta: float, x):
    """Soft-core nuclear attraction -sum_A Z_A / sqrt((x-x_A)^2 + eta^2)."""
    if eta <= 0:
        raise ValueError("soft-core parameter eta must be positive")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x, dtype=float)
    for xa, za in zip(n.positions, n.charges):
        out -= za / np.sqrt((x - xa) ** 2 + eta * eta)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BarrierSpec:
    """Confining barrier: flat 0 inside |x| < x_b, V_inf outside, C^2 blend."""

    x_b: float
    eps_b: float
    V_inf: float

    def __post_init__(self):
        if not (self.x_b > 0 and self.eps_b > 0 and self.V_inf > 0):
            raise ValueError("barrier parameters must all be positive")


def smoothstep(u, eps_b):
    """Quintic step: 0 below -eps_b/2, 1 above +eps_b/2, C^2 in between."""
    t = np.clip((np.asarray(u, dtype=float) + eps_b / 2) / eps_b, 0.0, 1.0)
    out = t * t * t * (6.0 * t * t - 15.0 * t + 10.0)
    return out if out.ndim else float(out)


def barrier_value(b: BarrierSpec, x):
    return smoothstep(np.abs(np.asarray(x, dtype=float)) - b.x_b, b.eps_b) * b.V_inf


def a_eps(b: BarrierSpec, x):
    """Smooth indicator of the orbital support: 1 inside, 0 outside the barrier."""
    val = 1.0 - smoothstep(np.abs(np.asarray(x, dtype=float)) - b.x_b, b.eps_b)
    return val if np.ndim(val) else float(val)


@dataclass(frozen=True)
class LaserField:
    """Gaussian-envelope pulse, circular in the two electron coordinates.

    The two-electron configuration space is a plane, so a circular field
    couples one quadrature to each coordinate: E_x drives x1 and E_y drives
    x2.  linear-scalar mode drives both with E_x.
    """

    E0: float
    omega0: float
    nu0: float
    T: float
    mode: str = "circular"

    def __post_init__(self):
        if self.mode not in ("circular", "linear-scalar"):
            raise ValueError("laser mode must be 'circular' or 'linear-scalar'")
        if min(self.E0, self.omega0, self.nu0, self.T) <= 0:
            raise ValueError("laser parameters must all be positive")


def laser_value(f: LaserField, t: float) -> tuple[float, float]:
    env = f.E0 * np.exp(-f.nu0 * (f.T / 2 - t) ** 2)
    ex = env * np.cos(f.omega0 * t)
    if f.mode == "linear-scalar":
        return ex, ex
    return ex, env * np.sin(f.omega0 * t)


def two_electron_table(x1: np.ndarray, x2: np.ndarray, *, nuclei: NucleusSet,
                       model: str, mollifier: Mollifier | None = None,
                       eta: float | None = None, eta_ee: float | None = None,
                       ee: bool = True, scale_4pi: bool = False) -> np.ndarray:
    """Tabulate V(x1, x2) on the tensor grid of the two axes.

    model 'smoothed' uses G_eps for both the nuclear attraction and the
    electron repulsion (the repulsion enters as -G_eps, which is positive);
    model 'softcore' uses the eta-regularized kernels.  Shape (len(x1),
    len(x2)), first axis is x1.
    """
    X1 = np.asarray(x1, dtype=float)[:, None]
    X2 = np.asarray(x2, dtype=float)[None, :]
    if model == "smoothed":
        if mollifier is None:
            raise ValueError("model 'smoothed' needs a mollifier")
        g = smoothed_coulomb(mollifier, scale_4pi=scale_4pi)
        v = np.zeros((len(x1), len(x2)))
        for xa, za in zip(nuclei.positions, nuclei.charges):
            v += za * (g(X1 - xa) + g(X2 - xa))
        if ee:
            v -= g(X1 - X2)
        return v
    if model == "softcore":
        if eta is None:
            raise ValueError("model 'softcore' needs eta")
        v = softcore_potential(nuclei, eta, X1) + softcore_potential(nuclei, eta, X2)
        v = np.broadcast_to(v, (len(x1), len(x2))).copy()
        if ee:
            ee_eta = eta if eta_ee is None else eta_ee
            v += 1.0 / np.sqrt((X1 - X2) ** 2 + ee_eta * ee_eta)
        return v
    raise ValueError(f"unknown potential model '{model}'")
