"""Shared helpers for the test modules."""

import numpy as np

from swr2e.basis import OrbitalSet, derivative_4th


def sine_orbitals(block, x0, h, npts, k0, m):
    """Discrete sine modes: exactly orthonormal under the h-weighted dot."""
    x = x0 + h * np.arange(npts)
    width = x[-1] - x[0]
    j = np.arange(npts)
    vals = np.stack([np.sin((k + 1) * np.pi * j / (npts - 1)) for k in range(m)],
                    axis=1)
    vals *= np.sqrt(2.0 / (h * (npts - 1)))
    ders = derivative_4th(vals, h)
    lam = np.array([(k + 1) ** 2 * np.pi**2 / (2 * width**2) for k in range(m)])
    return OrbitalSet(block, x, k0, vals, ders, lam, x0 + width / 2,
                      (x[0], x[-1]))
