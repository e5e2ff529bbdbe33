"""Second-order two-point boundary problems reduced to the boundary.

Uniform-grid discretization of  -u'' + V u - z u  on [a, b], its Dirichlet and
Neumann realizations, the Neumann-to-Dirichlet map, the bordered problem whose
effective Hamiltonian *is* that map, and the contour identity coupling the two
resolvent traces to the winding of the boundary map.

The Neumann condition is realized with second-order ghost points.  To make the
bordered reduction agree with the ghost-point boundary map exactly (not just
to discretization order), the Dirichlet side of the bordered problem carries
the two ghost values as genuine unknowns: the zero-trace space is

    (ghost_left, u_1, ..., u_m, ghost_right)  in  C^(m+2),

the equation rows are the difference expression at all grid nodes 0..m+1, and
the row border is the centered outward normal derivative written with the
ghost values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BorderedSystem, GrushinInverse, assemble, invert_system
from .errors import (
    ConsistencyError,
    DimensionMismatch,
    NeumannEigenvalue,
    NonInteger,
    OnContourSingular,
)
from .linops import (
    WELL_POSED_LIMIT,
    Contour,
    contour_integrate,
    rank_tolerance,
    spectral_norm,
)


@dataclass(frozen=True)
class Discretization:
    """Uniform grid on [a, b] with m interior nodes and a potential evaluator."""

    a: float
    b: float
    m: int
    v: Callable[[float], float]

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        if self.m < 3:
            raise ValueError("need at least 3 interior nodes")
        vals = np.array([self.v(x) for x in self.grid()], dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential must be finite at every grid node")

    @property
    def step(self) -> float:
        return (self.b - self.a) / (self.m + 1)

    def grid(self) -> np.ndarray:
        """All nodes including the boundary: a = x_0 < ... < x_{m+1} = b."""
        return self.a + self.step * np.arange(self.m + 2)


@dataclass(frozen=True)
class BoundaryData:
    """A pair of boundary values (left endpoint first): Dirichlet or Neumann traces."""

    left: complex
    right: complex

    def as_vector(self) -> np.ndarray:
        return np.array([self.left, self.right], dtype=np.complex128)


def dirichlet_matrix(d: Discretization, z: complex) -> np.ndarray:
    """Second-order stencil of -d2/dx2 + V - z with zero boundary values eliminated."""
    h = d.step
    x = d.grid()
    diag = 2.0 / h**2 + np.array([d.v(xj) for xj in x[1:-1]]) - z
    mat = np.diag(diag.astype(np.complex128))
    off = -1.0 / h**2
    idx = np.arange(d.m - 1)
    mat[idx, idx + 1] = off
    mat[idx + 1, idx] = off
    return mat


def neumann_matrix(d: Discretization, z: complex) -> np.ndarray:
    """Stencil on all nodes with zero Neumann data eliminated through ghost points."""
    h = d.step
    x = d.grid()
    n = d.m + 2
    mat = np.zeros((n, n), dtype=np.complex128)
    for j in range(1, n - 1):
        mat[j, j - 1] = -1.0 / h**2
        mat[j, j] = 2.0 / h**2 + d.v(x[j]) - z
        mat[j, j + 1] = -1.0 / h**2
    mat[0, 0] = 2.0 / h**2 + d.v(x[0]) - z
    mat[0, 1] = -2.0 / h**2
    mat[n - 1, n - 1] = 2.0 / h**2 + d.v(x[-1]) - z
    mat[n - 1, n - 2] = -2.0 / h**2
    return mat


def _solve_refined(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.linalg.solve(a, b)
    return x + np.linalg.solve(a, b - a @ x)


def _require_neumann_invertible(d: Discretization, z: complex) -> np.ndarray:
    mat = neumann_matrix(d, z)
    sig = np.linalg.svd(mat, compute_uv=False)
    if sig[-1] <= rank_tolerance(mat) or sig[0] / sig[-1] >= WELL_POSED_LIMIT:
        raise NeumannEigenvalue(f"z = {z} is a discrete Neumann eigenvalue (sigma_min={sig[-1]:.3e})")
    return mat


def neumann_poisson_solve(d: Discretization, z: complex, data: BoundaryData) -> np.ndarray:
    """Grid solution of the homogeneous equation with prescribed outward Neumann data."""
    mat = _require_neumann_invertible(d, z)
    rhs = np.zeros(d.m + 2, dtype=np.complex128)
    rhs[0] = 2.0 * data.left / d.step
    rhs[-1] = 2.0 * data.right / d.step
    return _solve_refined(mat, rhs)


def neumann_green_solve(d: Discretization, z: complex, rhs) -> np.ndarray:
    """Grid solution with zero Neumann data and interior load ``rhs`` (all nodes)."""
    mat = _require_neumann_invertible(d, z)
    rhs = np.asarray(rhs, dtype=np.complex128)
    if rhs.shape[0] != d.m + 2:
        raise DimensionMismatch(f"load must have {d.m + 2} entries")
    return _solve_refined(mat, rhs)


def _n2d_from_matrix(mat: np.ndarray, step: float) -> np.ndarray:
    """Boundary map from an already-validated Neumann matrix (both columns at once)."""
    n = mat.shape[0]
    rhs = np.zeros((n, 2), dtype=np.complex128)
    rhs[0, 0] = 2.0 / step
    rhs[-1, 1] = 2.0 / step
    sol = _solve_refined(mat, rhs)
    return np.array([[sol[0, 0], sol[0, 1]], [sol[-1, 0], sol[-1, 1]]])


def n2d_map(d: Discretization, z: complex) -> np.ndarray:
    """The 2x2 map from outward Neumann data to Dirichlet traces."""
    mat = _require_neumann_invertible(d, z)
    return _n2d_from_matrix(mat, d.step)


# --- ghost-extended bordered problem ---------------------------------------
#
# Extended-grid vectors have length m + 4 and are indexed
#   [ghost_left, node 0, node 1, ..., node m+1, ghost_right].
# Zero-trace unknowns drop the two boundary nodes:
#   [ghost_left, u_1, ..., u_m, ghost_right]   (length m + 2).


def _difference_rows(d: Discretization, z: complex, extended: np.ndarray) -> np.ndarray:
    """Apply the difference expression at nodes 0..m+1 to an extended-grid vector."""
    h = d.step
    x = d.grid()
    inner = extended[1:-1]  # values at nodes 0..m+1
    vvals = np.array([d.v(xj) for xj in x], dtype=np.complex128)
    return (
        (-extended[:-2] + 2.0 * inner - extended[2:]) / h**2
        + (vvals - z) * inner
    )


def extension_profiles(d: Discretization, support_fraction: float = 0.125) -> np.ndarray:
    """Two extended-grid bump profiles with unit trace and zero centered normal
    derivative at their endpoint, vanishing beyond ceil(m * support_fraction) nodes."""
    q = max(1, math.ceil(d.m * support_fraction))
    q = min(q, (d.m + 1) // 2)
    n_ext = d.m + 4

    def bump(t: float) -> float:
        if t >= 1.0:
            return 0.0
        return 1.0 - 3.0 * t * t + 2.0 * t**3

    left = np.zeros(n_ext, dtype=np.complex128)
    right = np.zeros(n_ext, dtype=np.complex128)
    for j in range(d.m + 2):  # node j lives at extended index j + 1
        left[j + 1] = bump(j / q)
        right[j + 1] = bump((d.m + 1 - j) / q)
    left[0] = left[2]          # ghost value enforcing zero centered derivative at a
    right[-1] = right[-3]      # same at b
    return np.column_stack([left, right])


def bvp_bordered_system(
    d: Discretization, z: complex, support_fraction: float = 0.125
) -> BorderedSystem:
    """The bordered problem for the Dirichlet realization whose effective
    Hamiltonian is the Neumann-to-Dirichlet map.

    Column border: the difference expression applied to the boundary-data
    extension.  Row border: the centered outward normal derivative.
    """
    h = d.step
    m = d.m
    dim = m + 2  # ghost_left, u_1..u_m, ghost_right
    x = d.grid()

    p = np.zeros((dim, dim), dtype=np.complex128)
    # row: node 0; unknown ghost_left at column 0, u_1 at column 1
    p[0, 0] = -1.0 / h**2
    p[0, 1] = -1.0 / h**2
    for j in range(1, m + 1):  # node j, unknown u_j at column j
        if j - 1 >= 1:
            p[j, j - 1] = -1.0 / h**2
        p[j, j] = 2.0 / h**2 + d.v(x[j]) - z
        if j + 1 <= m:
            p[j, j + 1] = -1.0 / h**2
    p[m + 1, m] = -1.0 / h**2
    p[m + 1, m + 1] = -1.0 / h**2

    rplus = np.zeros((2, dim), dtype=np.complex128)
    rplus[0, 0] = 1.0 / (2.0 * h)
    rplus[0, 1] = -1.0 / (2.0 * h)
    rplus[1, m + 1] = 1.0 / (2.0 * h)
    rplus[1, m] = -1.0 / (2.0 * h)

    profiles = extension_profiles(d, support_fraction)
    rminus = np.column_stack(
        [_difference_rows(d, z, profiles[:, 0]), _difference_rows(d, z, profiles[:, 1])]
    )
    return assemble(p, rminus, rplus)


def bvp_grushin(
    d: Discretization, z: complex, support_fraction: float = 0.125
) -> GrushinInverse:
    """Invert the boundary bordered problem and confirm that its effective
    Hamiltonian reproduces the Neumann-to-Dirichlet map to 1e-9 scale."""
    _require_neumann_invertible(d, z)
    inverse = invert_system(bvp_bordered_system(d, z, support_fraction))
    reference = n2d_map(d, z)
    scale = max(1.0, spectral_norm(reference))
    if spectral_norm(inverse.e_minus_plus - reference) > 1e-9 * scale:
        raise ConsistencyError("effective Hamiltonian disagrees with the boundary map")
    return inverse


def dn_trace_identity(d: Discretization, contour: Contour, tol: float = 1e-8) -> tuple[int, int]:
    """Count (Neumann eigenvalues inside) - (Dirichlet eigenvalues inside) two ways:

      * difference of the two resolvent traces integrated over the contour,
      * minus the winding of the Neumann-to-Dirichlet map (derivative by
        central differences).

    Both are returned as integers and must agree; node checks reject contours
    through either discrete spectrum.
    """
    a_n = neumann_matrix(d, 0.0)
    a_d = dirichlet_matrix(d, 0.0)
    eye_n = np.eye(a_n.shape[0], dtype=np.complex128)
    eye_d = np.eye(a_d.shape[0], dtype=np.complex128)

    nodes, _ = contour.quadrature(max(8, contour.nodes))
    for z in nodes:
        for mat in (z * eye_n - a_n, z * eye_d - a_d):
            sig = np.linalg.svd(mat, compute_uv=False)
            if sig[-1] <= 1e3 * rank_tolerance(mat):
                raise OnContourSingular(f"contour node z={z} on a discrete spectrum")

    def lhs_integrand(z: complex) -> complex:
        res_n = np.trace(np.linalg.inv(z * eye_n - a_n))
        res_d = np.trace(np.linalg.inv(z * eye_d - a_d))
        return complex(res_n - res_d)

    delta = 1e-4 * contour.scale()

    def boundary_map(z: complex) -> np.ndarray:
        # nodes were prechecked; skip the per-call invertibility scan
        return _n2d_from_matrix(a_n - z * eye_n, d.step)

    def rhs_integrand(z: complex) -> complex:
        n_val = boundary_map(z)
        n_dot = (boundary_map(z + delta) - boundary_map(z - delta)) / (2.0 * delta)
        return complex(np.trace(np.linalg.solve(n_val, n_dot)))

    lhs_raw = contour_integrate(lhs_integrand, contour, tol) / (2j * np.pi)
    rhs_raw = -contour_integrate(rhs_integrand, contour, tol) / (2j * np.pi)
    lhs_count = int(round(lhs_raw.real))
    rhs_count = int(round(rhs_raw.real))
    if abs(lhs_raw - lhs_count) >= 1e-6 or abs(rhs_raw - rhs_count) >= 1e-6:
        raise NonInteger(f"trace integrals {lhs_raw}, {rhs_raw} not at integers")
    return lhs_count, rhs_count


# --- potentials --------------------------------------------------------------


def potential_zero(_: float) -> float:
    return 0.0


def potential_from_name(name: str, a: float, b: float) -> Callable[[float], float]:
    """Builtin potentials: ``zero``, ``harmonic`` (centered parabola), ``well``
    (depth-5 dip over the middle third)."""
    mid = 0.5 * (a + b)
    third = (b - a) / 3.0
    if name == "zero":
        return potential_zero
    if name == "harmonic":
        return lambda x: (x - mid) ** 2
    if name == "well":
        return lambda x: -5.0 if abs(x - mid) <= 0.5 * third else 0.0
    raise ValueError(f"unknown potential {name!r}")


def load_potential_table(path) -> np.ndarray:
    """Read one real per line (m + 2 lines: every grid node including boundary)."""
    with open(path, "r", encoding="utf-8") as handle:
        values = [float(line.strip()) for line in handle if line.strip()]
    return np.asarray(values, dtype=float)


def tabulated_potential(a: float, b: float, m: int, values) -> Callable[[float], float]:
    """Potential evaluator backed by a node table; only grid nodes may be queried."""
    values = np.asarray(values, dtype=float)
    if values.size != m + 2:
        raise DimensionMismatch(f"table needs {m + 2} values, got {values.size}")
    step = (b - a) / (m + 1)

    def evaluate(x: float) -> float:
        j = int(round((x - a) / step))
        if not 0 <= j <= m + 1 or abs(x - (a + j * step)) > 1e-9 * (b - a):
            raise ValueError(f"x={x} is not a grid node")
        return float(values[j])

    return evaluate
