"""Dense complex linear algebra and closed-contour quadrature.

All matrices are plain ``numpy`` arrays of ``complex128``.  Decompositions are
delegated to LAPACK through ``numpy.linalg``; this module pins down the
conventions the rest of the library relies on: the rank tolerance, the
condition estimate attached to every solve, and the node-doubling trapezoidal
rule used for every contour integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    NonConvergent,
    RankAmbiguous,
    SingularMatrix,
)

EPS = float(np.finfo(np.float64).eps)

#: A bordered problem counts as well posed while its condition estimate stays
#: below 1/(100*eps).
WELL_POSED_LIMIT = 1.0 / (100.0 * EPS)

#: Hard cap for quadrature node doubling.
NODE_CAP = 2**18


def as_cmatrix(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array, optionally checking its shape."""
    m = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix entries must be finite")
    if rows is not None and m.shape[0] != rows:
        raise DimensionMismatch(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionMismatch(f"expected {cols} columns, got {m.shape[1]}")
    return m


def as_cvector(v, size: int | None = None) -> np.ndarray:
    """Coerce ``v`` to a finite 1-D complex array."""
    w = np.asarray(v, dtype=np.complex128).ravel()
    if not np.all(np.isfinite(w.real)) or not np.all(np.isfinite(w.imag)):
        raise ValueError("vector entries must be finite")
    if size is not None and w.size != size:
        raise DimensionMismatch(f"expected length {size}, got {w.size}")
    return w


def singular_values(a) -> np.ndarray:
    a = as_cmatrix(a)
    if a.size == 0:
        return np.zeros(0)
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - pathological input
        raise ConvergenceFailure(str(exc)) from exc


def spectral_norm(a) -> float:
    s = singular_values(a)
    return float(s[0]) if s.size else 0.0


def condition_number(a) -> float:
    """sigma_max / sigma_min; ``inf`` for singular or non-square-rank input."""
    s = singular_values(a)
    if s.size == 0:
        return 1.0
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def rank_tolerance(a, factor: float = 8.0) -> float:
    """Default numerical-rank tolerance: max(rows, cols) * sigma_max * eps * factor."""
    a = as_cmatrix(a)
    if a.size == 0:
        return 0.0
    return max(a.shape) * spectral_norm(a) * EPS * factor


def numerical_rank(sigma: np.ndarray, tol: float, band: float = 10.0) -> int:
    """Count singular values above ``tol``.

    Raises :class:`RankAmbiguous` when any nonzero singular value sits inside
    the band ``[tol/band, tol*band]`` -- integer-valued conclusions (kernel
    dimensions, indices) must not be guessed there.
    """
    sigma = np.asarray(sigma, dtype=float)
    if tol > 0.0:
        ambiguous = (sigma >= tol / band) & (sigma <= tol * band)
        if np.any(ambiguous):
            raise RankAmbiguous(
                f"singular value(s) {sigma[ambiguous]} within 10x of tolerance {tol:.3e}"
            )
    return int(np.count_nonzero(sigma > tol))


@dataclass(frozen=True)
class SvdResult:
    """Full SVD ``A = left @ diag(singular) @ right_h`` with unitary factors."""

    left: np.ndarray
    singular: np.ndarray
    right_h: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.singular.size
        return (self.left[:, :k] * self.singular) @ self.right_h[:k, :]


@dataclass(frozen=True)
class SolveResult:
    solution: np.ndarray
    condition: float


def svd(a) -> SvdResult:
    a = as_cmatrix(a)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SvdResult(u, s, vh)


def solve_linear(a, b, tol_factor: float = 8.0) -> SolveResult:
    """Solve ``A X = B`` by LU with one step of iterative refinement.

    Raises :class:`SingularMatrix` when sigma_min falls at or below the rank
    tolerance.  The returned condition number is sigma_max/sigma_min.
    """
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    s = singular_values(a)
    tol = max(a.shape) * (s[0] if s.size else 0.0) * EPS * tol_factor
    if s.size == 0 or s[-1] <= tol:
        raise SingularMatrix(f"sigma_min={0.0 if s.size == 0 else s[-1]:.3e} <= tol={tol:.3e}")
    x = np.linalg.solve(a, b)
    x = x + np.linalg.solve(a, b - a @ x)
    return SolveResult(x, float(s[0] / s[-1]))


def refined_inverse(a) -> np.ndarray:
    """Explicit inverse with one Newton refinement step (internal helper)."""
    a = as_cmatrix(a)
    n = a.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    x = np.linalg.solve(a, ident)
    return x + np.linalg.solve(a, ident - a @ x)


def eigenvalues(a) -> np.ndarray:
    """All eigenvalues of a square matrix (LAPACK geev: balancing + shifted QR)."""
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    if a.shape[0] == 0:
        return np.zeros(0, dtype=np.complex128)
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


@dataclass(frozen=True)
class Contour:
    """A closed curve in the complex plane with a starting quadrature resolution.

    Two parametrizations are supported: a circle (center, radius > 0) and a
    closed polyline through a list of vertices (the closing edge back to the
    first vertex is implicit).  ``nodes`` is the initial node count for the
    doubling quadrature; it must be at least 8.
    """

    kind: str
    center: complex = 0j
    radius: float = 0.0
    points: tuple = ()
    nodes: int = 64

    def __post_init__(self):
        if self.kind not in ("circle", "polyline"):
            raise ValueError(f"unknown contour kind {self.kind!r}")
        if self.nodes < 8:
            raise ValueError("node count must be >= 8")
        if self.kind == "circle" and not self.radius > 0.0:
            raise ValueError("circle radius must be positive")
        if self.kind == "polyline" and len(self.points) < 3:
            raise ValueError("polyline needs at least 3 vertices")

    @staticmethod
    def circle(center: complex, radius: float, nodes: int = 64) -> "Contour":
        return Contour("circle", center=complex(center), radius=float(radius), nodes=nodes)

    @staticmethod
    def polyline(points: Sequence[complex], nodes: int = 64) -> "Contour":
        return Contour("polyline", points=tuple(complex(p) for p in points), nodes=nodes)

    def quadrature(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``z_k`` and weights ``w_k`` so that ``sum f(z_k) w_k ~ closed integral``."""
        if self.kind == "circle":
            t = 2.0 * np.pi * np.arange(n) / n
            phase = np.exp(1j * t)
            z = self.center + self.radius * phase
            w = (2.0 * np.pi / n) * 1j * self.radius * phase
            return z, w
        verts = np.asarray(self.points, dtype=np.complex128)
        segs = list(zip(verts, np.roll(verts, -1)))
        lengths = np.array([abs(q - p) for p, q in segs])
        total = lengths.sum()
        z_parts, w_parts = [], []
        for (p, q), ell in zip(segs, lengths):
            m = max(2, int(round(n * ell / total)))
            s = np.linspace(0.0, 1.0, m + 1)
            zs = p + s * (q - p)
            ws = np.full(m + 1, (q - p) / m, dtype=np.complex128)
            ws[0] *= 0.5
            ws[-1] *= 0.5
            z_parts.append(zs)
            w_parts.append(ws)
        return np.concatenate(z_parts), np.concatenate(w_parts)

    def contains(self, z: complex) -> bool:
        """Point-in-region test for the enclosed open set."""
        if self.kind == "circle":
            return abs(z - self.center) < self.radius
        verts = np.asarray(self.points, dtype=np.complex128)
        angles = np.angle((np.roll(verts, -1) - z) / (verts - z))
        return abs(angles.sum()) > np.pi

    def scale(self) -> float:
        """Characteristic length used for difference steps."""
        if self.kind == "circle":
            return self.radius
        verts = np.asarray(self.points, dtype=np.complex128)
        return float(np.abs(verts - verts.mean()).max())


def contour_integrate(
    f: Callable[[complex], complex],
    contour: Contour,
    tol: float = 1e-10,
    node_cap: int = NODE_CAP,
) -> complex:
    """Trapezoidal closed-contour integral with node doubling.

    Doubles the node count until two successive estimates differ by less than
    ``tol * (1 + |estimate|)`` or the cap is reached (:class:`NonConvergent`,
    which carries the last two estimates).
    """
    n = max(8, contour.nodes)
    estimates = [_quad_once(f, contour, n)]
    while n < node_cap:
        n *= 2
        estimates.append(_quad_once(f, contour, n))
        if abs(estimates[-1] - estimates[-2]) <= tol * (1.0 + abs(estimates[-1])):
            return estimates[-1]
    raise NonConvergent(f"no convergence at {node_cap} nodes", estimates[-2], estimates[-1])


def _quad_once(f, contour: Contour, n: int) -> complex:
    z, w = contour.quadrature(n)
    vals = np.array([f(zk) for zk in z], dtype=np.complex128)
    if not np.all(np.isfinite(vals.real)) or not np.all(np.isfinite(vals.imag)):
        raise ValueError("integrand is not finite at a quadrature node")
    return complex(np.sum(vals * w))
