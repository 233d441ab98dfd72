#!/usr/bin/env python3
"""Regenerate the frozen reference values used by the test suite.

Everything here is computed with mpmath at 30 digits, independently of the
package code: the smoothed Coulomb convolutions, the bare-nucleus orbital
energies and the infinite-well spectrum.  Run it and paste the printed
blocks into tests/reference_values.py whenever a definition changes.
"""

from fractions import Fraction

import mpmath as mp

mp.mp.dps = 30


def sigma(M: int) -> Fraction:
    # 1 / int_{-1}^{1} (1-u^2)^M du via the exact beta-integral recursion
    val = Fraction(2)
    for k in range(1, M + 1):
        val = val * Fraction(2 * k, 2 * k + 1)
    return 1 / val


def bump(s, eps, M):
    u = s / eps
    if abs(u) >= 1:
        return mp.mpf(0)
    return mp.mpf(Fraction(sigma(M)).numerator) / Fraction(sigma(M)).denominator \
        / eps * (1 - u * u) ** M


def kernel(t, rho):
    # attractive Coulomb with a C^1 parabolic cap inside |t| < rho
    if abs(t) >= rho:
        return -1 / abs(t)
    return -(3 * rho * rho - t * t) / (2 * rho ** 3)


def g_eps(x, eps, M):
    rho = eps / mp.mpf(2)
    pts = sorted({-eps, eps, *(p for p in (x - rho, x, x + rho) if -eps < p < eps)})
    f = lambda s: bump(s, eps, M) * kernel(x - s, rho)
    return mp.quad(f, pts)


def well_energies(width, count):
    # -(1/2) d^2/dx^2 on (0, width) with Dirichlet walls
    return [mp.pi ** 2 * k ** 2 / (2 * width ** 2) for k in range(1, count + 1)]


def h2_ground_energy(npts):
    """Ground energy of the two-electron soft-core Hamiltonian on (-15,15)^2.

    Plain 5-point finite differences with Dirichlet walls, nuclei at
    +-1.25 with eta = 0.2 for both the nuclear and electron-electron
    kernels; shift-inverted Lanczos for the lowest eigenvalue.
    """
    import numpy as np
    from scipy.sparse import identity, kron, diags
    from scipy.sparse.linalg import eigsh

    x = np.linspace(-15.0, 15.0, npts)[1:-1]
    h = x[1] - x[0]
    n = x.size
    lap = diags([np.full(n - 1, 1.0), np.full(n, -2.0), np.full(n - 1, 1.0)],
                (-1, 0, 1)) / (h * h)
    eye = identity(n)
    kin = -0.5 * (kron(lap, eye) + kron(eye, lap))

    def vnuc(t):
        return (-1.0 / np.sqrt((t - 1.25) ** 2 + 0.04)
                - 1.0 / np.sqrt((t + 1.25) ** 2 + 0.04))

    x1 = x[:, None]
    x2 = x[None, :]
    v = vnuc(x1) + vnuc(x2) + 1.0 / np.sqrt((x1 - x2) ** 2 + 0.04)
    ham = (kin + diags(v.ravel())).tocsc()
    w = eigsh(ham, k=1, sigma=-12.0, which="LM", return_eigenvectors=False)
    return float(w[0]), float(h)


def free_packet_samples():
    """Free 1-d wave packet: i d_t psi = -1/2 d_xx psi, psi(x,0)=exp(-x^2).

    The closed form psi(x,t) = (1+2it)^(-1/2) exp(-x^2/(1+2it)) is checked
    here against an independent fine-grid finite-difference Crank-Nicolson
    run before its sample values are frozen for the test suite.
    """
    import numpy as np
    from scipy.sparse import diags, identity
    from scipy.sparse.linalg import splu

    span, npts, dt, t_end = 40.0, 8001, 5.0e-4, 0.5
    x = np.linspace(-span, span, npts)
    h = x[1] - x[0]
    lap = diags([np.full(npts - 1, 1.0), np.full(npts, -2.0),
                 np.full(npts - 1, 1.0)], (-1, 0, 1)) / (h * h)
    ham = (-0.5 * lap).tocsc()
    eye = identity(npts, format="csc")
    lhs = splu((eye + 0.5j * dt * ham).tocsc())
    rhs = (eye - 0.5j * dt * ham).tocsc()
    psi = np.exp(-x * x).astype(complex)
    for _ in range(int(round(t_end / dt))):
        psi = lhs.solve(rhs @ psi)

    a = 1.0 + 2.0j * t_end
    exact = a ** -0.5 * np.exp(-x * x / a)
    err = np.sqrt(h * np.sum(np.abs(psi - exact) ** 2))
    print(f"# 1-d FD CN (n={npts}, dt={dt}) vs closed form at t={t_end}: "
          f"L2 diff = {err:.3e}")
    for xv in (0.0, 0.7, 1.3):
        v = complex(a ** -0.5 * np.exp(-xv * xv / a))
        print(f"psi({xv}, t={t_end}) = {v.real:.15f} {v.imag:+.15f}j")


def main():
    print("# smoothed Coulomb G_eps(x), M=4 unless stated, scale_4pi off")
    for eps, x, M in [(0.2, 0.5, 4), (0.1, 0.5, 4), (0.05, 0.5, 4),
                      (0.5, 0.0, 4), (0.1, 0.0, 4), (0.5, 1.5, 2)]:
        v = g_eps(mp.mpf(x), mp.mpf(eps), M)
        print(f"G(eps={eps}, M={M}, x={x}) = {mp.nstr(v, 17)}")

    print()
    print("# mollification defect |G_eps(0.5) + 2| and Richardson ratios")
    d = [abs(g_eps(mp.mpf('0.5'), mp.mpf(e), 4) + 2) for e in ('0.2', '0.1', '0.05')]
    print(f"defects = {[mp.nstr(v, 8) for v in d]}")
    print(f"ratios  = {mp.nstr(d[0] / d[1], 8)}, {mp.nstr(d[1] / d[2], 8)}")

    print()
    print("# infinite square well, width 2, first 4 levels")
    for k, E in enumerate(well_energies(mp.mpf(2), 4), start=1):
        print(f"E_{k} = {mp.nstr(E, 17)}")

    print()
    print("# two-electron soft-core ground energy, finite differences")
    vals = {}
    for npts in (151, 301):
        e, h = h2_ground_energy(npts)
        vals[npts] = e
        print(f"E0(n={npts}, h={h:.4g}) = {e:.12f}")
    rich = (4 * vals[301] - vals[151]) / 3
    print(f"E0(Richardson)     = {rich:.12f}")

    print()
    print("# free wave packet, closed form vs independent FD Crank-Nicolson")
    free_packet_samples()


if __name__ == "__main__":
    main()
