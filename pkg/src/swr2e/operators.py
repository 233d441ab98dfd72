"""Galerkin matrices per subdomain: overlap, Hamiltonian, dipole, laser.

The Hamiltonian is assembled in weak form, so the kinetic term is
(1/2) <grad v_l, grad v_p> and transmission conditions enter through
boundary integrals over the interface lines: Robin contributes
(mu/2) line-mass matrices to the operator and a rank-K map turning
neighbor data g = (d_n + mu) psi_j into a right-hand side; Dirichlet is
imposed by a large penalty on the interface traces.  All volume and line
integrals use composite trapezoid quadrature on the tensor grid slice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import LocalBasis, trapezoid_weights
from .geometry import Edge, Subdomain
from .potentials import LaserField, laser_value

DIRICHLET_PENALTY = 1e6

# side -> (normal axis, slice index picker)
_SIDE_POS = {"W": (0, 0), "E": (0, -1), "S": (1, 0), "N": (1, -1)}


class OperatorError(RuntimeError):
    """Raised when an assembled matrix violates its contract."""


def quadrature_2d(x1: np.ndarray, x2: np.ndarray, f: np.ndarray) -> float:
    """Composite trapezoid integral of a tabulation over the tensor grid."""
    if f.shape != (x1.size, x2.size):
        raise ValueError(f"tabulation shape {f.shape} does not match the grid "
                         f"slice ({x1.size}, {x2.size})")
    return float(trapezoid_weights(x1) @ f @ trapezoid_weights(x2))


def _flat_weights(basis: LocalBasis) -> np.ndarray:
    return np.outer(trapezoid_weights(basis.x1),
                    trapezoid_weights(basis.x2)).ravel()


def assemble_overlap(basis: LocalBasis, analytic: bool = False) -> np.ndarray:
    """Overlap (Gram) matrix A[l][p] = <v_l, v_p>.

    analytic=True uses the closed-form Gaussian product integral
    int exp(-d(x-a)^2) exp(-d(x-b)^2) dx = sqrt(pi/(2d)) exp(-d(a-b)^2/2)
    per axis; it treats the functions as living on the whole line, which is
    accurate whenever their tails die inside the slice.
    """
    if analytic:
        if basis.kind != "gaussian":
            raise OperatorError("analytic overlap requires the gaussian kind")
        delta = basis.meta["delta"]
        cx = np.array([basis.meta["centers_x1"][lab[1]] for lab in basis.labels])
        cy = np.array([basis.meta["centers_x2"][lab[2]] for lab in basis.labels])
        s = np.sqrt(np.pi / (2.0 * delta))
        ax = s * np.exp(-delta * (cx[:, None] - cx[None, :]) ** 2 / 2.0)
        ay = s * np.exp(-delta * (cy[:, None] - cy[None, :]) ** 2 / 2.0)
        a = ax * ay
    else:
        flat = basis.fields.reshape(basis.size, -1)
        a = flat @ (_flat_weights(basis)[:, None] * flat.T)
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise OperatorError(
            "overlap matrix is not positive definite: degenerate basis") from None
    return a


def assemble_hamiltonian(basis: LocalBasis, potential: np.ndarray,
                         sub: Subdomain, edges: list[Edge], tc,
                         penalty: float = DIRICHLET_PENALTY):
    """Volume Hamiltonian plus weak transmission terms.

    Returns (H, H_bdry, boundary_rhs_maps): H is the real symmetric volume
    part (1/2)<grad v_l, grad v_p> + <V v_l, v_p>; H_bdry collects the
    interface line integrals for the transmission kind in `tc` (an object
    with fields kind and mu); boundary_rhs_maps[side] @ g gives the
    right-hand-side vector from neighbor data sampled on that side's line.
    `tc` may be None when no edge carries transmission data (one domain).
    """
    if potential.shape != (basis.x1.size, basis.x2.size):
        raise ValueError("potential tabulation does not match the grid slice")
    wflat = _flat_weights(basis)
    flat = basis.fields.reshape(basis.size, -1)
    d1 = basis.derivative_fields(0).reshape(basis.size, -1)
    d2 = basis.derivative_fields(1).reshape(basis.size, -1)
    h = 0.5 * (d1 @ (wflat[:, None] * d1.T) + d2 @ (wflat[:, None] * d2.T))
    h += flat @ ((wflat * potential.ravel())[:, None] * flat.T)

    if tc is None:
        coeff_mat = coeff_rhs = None
    elif tc.kind == "robin":
        if tc.mu == 0:
            raise ValueError("robin transmission requires mu != 0")
        coeff_mat, coeff_rhs = 0.5 * tc.mu, 0.5
    elif tc.kind == "dirichlet":
        coeff_mat, coeff_rhs = penalty, penalty
    else:
        raise ValueError(f"unknown transmission kind '{tc.kind}'")

    dtype = complex if np.iscomplexobj(coeff_mat) else float
    h_bdry = np.zeros((basis.size, basis.size), dtype=dtype)
    rhs_maps = {}
    for edge in edges:
        if not edge.transmission:
            continue
        if coeff_mat is None:
            raise ValueError("a transmission edge needs a transmission spec")
        axis, pos = _SIDE_POS[edge.side]
        idx = edge.line - (sub.i0 if axis == 0 else sub.j0)
        other = basis.x2 if axis == 0 else basis.x1
        w_line = trapezoid_weights(other)
        vals = basis.line_values(axis, idx)
        h_bdry += coeff_mat * (vals @ (w_line[:, None] * vals.T))
        rhs_maps[edge.side] = coeff_rhs * (vals * w_line[None, :])
    return h, h_bdry, rhs_maps


def assemble_dipole(basis: LocalBasis, mode: str) -> dict[str, np.ndarray]:
    """Dipole coupling matrices for the laser term.

    scalar mode: Q = <(x1+x2) v_l, v_p>; circular: Qx = <x1 v_l, v_p> and
    Qy = <x2 v_l, v_p> separately.
    """
    wflat = _flat_weights(basis)
    flat = basis.fields.reshape(basis.size, -1)
    xx1 = np.broadcast_to(basis.x1[:, None],
                          (basis.x1.size, basis.x2.size)).ravel()
    xx2 = np.broadcast_to(basis.x2[None, :],
                          (basis.x1.size, basis.x2.size)).ravel()
    if mode == "circular":
        qx = flat @ ((wflat * xx1)[:, None] * flat.T)
        qy = flat @ ((wflat * xx2)[:, None] * flat.T)
        return {"x": qx, "y": qy}
    if mode == "linear-scalar":
        q = flat @ ((wflat * (xx1 + xx2))[:, None] * flat.T)
        return {"scalar": q}
    raise ValueError(f"unknown dipole mode '{mode}'")


def assemble_field_matrix(q: dict[str, np.ndarray], laser: LaserField,
                          t: float) -> np.ndarray:
    """T(t) = E_x(t) Qx + E_y(t) Qy (circular) or E(t) Q (scalar)."""
    ex, ey = laser_value(laser, t)
    if "scalar" in q:
        return ex * q["scalar"]
    return ex * q["x"] + ey * q["y"]


@dataclass
class LocalOperators:
    """Everything time stepping needs about one subdomain, immutable once built."""

    A: np.ndarray
    H: np.ndarray
    H_bdry: np.ndarray
    Q: dict[str, np.ndarray] = field(default_factory=dict)
    boundary_rhs_maps: dict[str, np.ndarray] = field(default_factory=dict)
    cond_A: float = np.nan

    @property
    def size(self) -> int:
        return self.A.shape[0]


def build_local_operators(basis: LocalBasis, potential: np.ndarray,
                          sub: Subdomain, edges: list[Edge], tc,
                          dipole_mode: str | None = None,
                          penalty: float = DIRICHLET_PENALTY) -> LocalOperators:
    a = assemble_overlap(basis)
    h, h_bdry, rhs_maps = assemble_hamiltonian(basis, potential, sub, edges,
                                               tc, penalty=penalty)
    q = assemble_dipole(basis, dipole_mode) if dipole_mode else {}
    return LocalOperators(a, h, h_bdry, q, rhs_maps,
                          cond_A=float(np.linalg.cond(a)))


def dump_matrix(path, m: np.ndarray):
    """Dense text dump, row-major, with the dimension in the header."""
    m = np.asarray(m)
    cast = complex if np.iscomplexobj(m) else float
    with open(path, "w") as fh:
        fh.write(f"# K={m.shape[0]} cols={m.shape[1]} dtype={m.dtype.name}\n")
        for row in m:
            fh.write(" ".join(repr(cast(v)) for v in row) + "\n")
