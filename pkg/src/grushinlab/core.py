"""Bordered systems: assembly, inversion, Schur identities, index, transfer,
iteration, the Feshbach reduction, and the circulant demonstration problem.

A bordered system for ``P : C^n1 -> C^n2`` is the block operator

    [[P,       rminus],
     [rplus,   corner]]  :  C^n1 (+) C^k-  ->  C^n2 (+) C^k+ ,

and when it is invertible the inverse is written in blocks

    [[e,       e_plus],
     [e_minus, e_minus_plus]],

whose lower-right block is the effective Hamiltonian: ``P`` is invertible
exactly when ``e_minus_plus`` is, and the two inverses determine each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    ComplementSingular,
    ConsistencyError,
    CornerSingular,
    DimensionMismatch,
    EffectiveSingular,
    IllPosed,
    InnerSingular,
    TransferSingular,
)
from .linops import (
    EPS,
    WELL_POSED_LIMIT,
    as_cmatrix,
    condition_number,
    numerical_rank,
    rank_tolerance,
    refined_inverse,
    singular_values,
    spectral_norm,
)


@dataclass(frozen=True)
class BorderedSystem:
    """The block operator [[P, R-], [R+, corner]] with its dimension metadata."""

    p: np.ndarray
    rminus: np.ndarray
    rplus: np.ndarray
    corner: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.p.shape[0]

    @property
    def n_cols(self) -> int:
        return self.p.shape[1]

    @property
    def k_minus(self) -> int:
        return self.rminus.shape[1]

    @property
    def k_plus(self) -> int:
        return self.rplus.shape[0]

    def assembled(self) -> np.ndarray:
        return np.block([[self.p, self.rminus], [self.rplus, self.corner]])


@dataclass(frozen=True)
class GrushinInverse:
    """The four blocks of the inverse of a well-posed bordered system.

    ``e_minus_plus`` is the effective Hamiltonian.  ``condition`` is the
    condition estimate (sigma_max/sigma_min of the assembled system, or a
    documented proxy for derived inverses).
    """

    e: np.ndarray
    e_plus: np.ndarray
    e_minus: np.ndarray
    e_minus_plus: np.ndarray
    condition: float

    @property
    def effective_hamiltonian(self) -> np.ndarray:
        return self.e_minus_plus

    def assembled(self) -> np.ndarray:
        return np.block([[self.e, self.e_plus], [self.e_minus, self.e_minus_plus]])

    def apply(self, v, v_plus) -> tuple[np.ndarray, np.ndarray]:
        v = np.asarray(v, dtype=np.complex128)
        v_plus = np.asarray(v_plus, dtype=np.complex128)
        u = self.e @ v + self.e_plus @ v_plus
        u_minus = self.e_minus @ v + self.e_minus_plus @ v_plus
        return u, u_minus


@dataclass(frozen=True)
class Split:
    """Index set selecting the distinguished block of a square matrix."""

    indices: tuple[int, ...]

    def __post_init__(self):
        if len(self.indices) == 0:
            raise ValueError("split must be nonempty")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("split indices must be distinct")

    def complement(self, n: int) -> tuple[int, ...]:
        chosen = set(self.indices)
        if not chosen.issubset(range(n)) or len(chosen) >= n:
            raise ValueError(f"split must be a proper subset of range({n})")
        return tuple(i for i in range(n) if i not in chosen)


@dataclass(frozen=True)
class IndexReport:
    dim_kernel: int
    dim_cokernel: int
    index: int


def assemble(p, rminus, rplus, corner=None) -> BorderedSystem:
    """Build a bordered system, checking block compatibility only."""
    p = as_cmatrix(p)
    rminus = as_cmatrix(rminus) if np.size(rminus) else np.zeros((p.shape[0], 0), complex)
    rplus = as_cmatrix(rplus) if np.size(rplus) else np.zeros((0, p.shape[1]), complex)
    if rminus.shape[0] != p.shape[0]:
        raise DimensionMismatch(
            f"rminus has {rminus.shape[0]} rows, P has {p.shape[0]}"
        )
    if rplus.shape[1] != p.shape[1]:
        raise DimensionMismatch(
            f"rplus has {rplus.shape[1]} columns, P has {p.shape[1]}"
        )
    k_plus, k_minus = rplus.shape[0], rminus.shape[1]
    if corner is None:
        corner = np.zeros((k_plus, k_minus), dtype=np.complex128)
    else:
        corner = as_cmatrix(corner) if np.size(corner) else np.zeros((k_plus, k_minus), complex)
        if corner.shape != (k_plus, k_minus):
            raise DimensionMismatch(
                f"corner shape {corner.shape} != ({k_plus}, {k_minus})"
            )
    return BorderedSystem(p, rminus, rplus, corner)


def invert_system(system: BorderedSystem) -> GrushinInverse:
    """Invert a bordered system and report its condition estimate.

    Well-posedness means the condition estimate stays below
    ``WELL_POSED_LIMIT``; otherwise :class:`IllPosed` carries the estimate.
    """
    mat = system.assembled()
    if mat.shape[0] != mat.shape[1]:
        raise DimensionMismatch(f"assembled system is {mat.shape}, not square")
    sig = singular_values(mat)
    if sig.size and sig[-1] > 0.0:
        cond = float(sig[0] / sig[-1])
    else:
        cond = np.inf
    if not np.isfinite(cond) or cond >= WELL_POSED_LIMIT:
        raise IllPosed(f"condition estimate {cond:.3e} beyond well-posed limit", cond)
    full = refined_inverse(mat)
    n1, n2 = system.n_cols, system.n_rows
    return GrushinInverse(
        e=full[:n1, :n2],
        e_plus=full[:n1, n2:],
        e_minus=full[n1:, :n2],
        e_minus_plus=full[n1:, n2:],
        condition=cond,
    )


@dataclass(frozen=True)
class RecoveredResolvent:
    matrix: np.ndarray
    residual: float


def recover_resolvent(
    system: BorderedSystem, inverse: GrushinInverse, tol: float | None = None
) -> RecoveredResolvent:
    """P^{-1} = e - e_plus @ e_minus_plus^{-1} @ e_minus, with its residual.

    ``tol`` overrides the rank tolerance used to decide whether the effective
    Hamiltonian is invertible (:class:`EffectiveSingular` otherwise -- the
    probe point sits in the spectrum).
    """
    emp = inverse.e_minus_plus
    if emp.shape[0] != emp.shape[1]:
        raise DimensionMismatch("effective Hamiltonian must be square to invert")
    if emp.size:
        sig = singular_values(emp)
        if sig[-1] <= (rank_tolerance(emp) if tol is None else tol):
            raise EffectiveSingular(
                f"effective Hamiltonian singular (sigma_min={sig[-1]:.3e})"
            )
        pinv = inverse.e - inverse.e_plus @ np.linalg.solve(emp, inverse.e_minus)
    else:
        pinv = inverse.e
    resid = spectral_norm(system.p @ pinv - np.eye(system.n_rows))
    return RecoveredResolvent(pinv, resid)


def schur_check(a, b, head: int) -> float:
    """Residual ||B11^{-1} - (A11 - A12 A22^{-1} A21)|| for B = A^{-1}.

    ``head`` is the size of the leading block.  Raises
    :class:`CornerSingular` when A22 fails the rank tolerance.
    """
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("A and B must be square and of equal shape")
    if not 0 < head < a.shape[0]:
        raise DimensionMismatch(f"invalid split {head} of size {a.shape[0]}")
    a11, a12 = a[:head, :head], a[:head, head:]
    a21, a22 = a[head:, :head], a[head:, head:]
    sig = singular_values(a22)
    if sig[-1] <= rank_tolerance(a22):
        raise CornerSingular(f"A22 singular at tolerance (sigma_min={sig[-1]:.3e})")
    complement = a11 - a12 @ np.linalg.solve(a22, a21)
    b11 = b[:head, :head]
    return float(spectral_norm(refined_inverse(b11) - complement))


def effective_index(
    system: BorderedSystem,
    inverse: GrushinInverse,
    tol: float | None = None,
) -> IndexReport:
    """Kernel/cokernel dimensions of P read off either side of the reduction.

    Checks that the dimensions computed from P agree with those computed from
    the effective Hamiltonian and that the index equals k_plus - k_minus.
    """
    sp = singular_values(system.p)
    tp = rank_tolerance(system.p) if tol is None else tol
    rank_p = numerical_rank(sp, tp)
    dim_ker = system.n_cols - rank_p
    dim_coker = system.n_rows - rank_p

    emp = inverse.e_minus_plus
    se = singular_values(emp)
    te = rank_tolerance(emp) if tol is None else tol
    if emp.size == 0:
        rank_e = 0
    else:
        rank_e = numerical_rank(se, te)
    ker_e = system.k_plus - rank_e
    coker_e = system.k_minus - rank_e
    if (dim_ker, dim_coker) != (ker_e, coker_e):
        raise ConsistencyError(
            f"kernel/cokernel mismatch: P gives ({dim_ker}, {dim_coker}), "
            f"effective Hamiltonian gives ({ker_e}, {coker_e})"
        )
    index = dim_ker - dim_coker
    if index != system.k_plus - system.k_minus:
        raise ConsistencyError(
            f"index {index} != k_plus - k_minus = {system.k_plus - system.k_minus}"
        )
    return IndexReport(dim_ker, dim_coker, index)


def transfer(inverse: GrushinInverse, rminus_new, rplus_new) -> GrushinInverse:
    """Re-border a solved problem without touching P.

    Builds the transfer system

        G = [[-R+' e R-',  R+' e_plus],
             [-e_minus R-',  e_minus_plus]],

    inverts it, and reads the new inverse blocks from it.  Raises
    :class:`TransferSingular` when G is singular or beyond the well-posed
    limit (the re-bordered problem is ill posed).
    """
    rm = as_cmatrix(rminus_new) if np.size(rminus_new) else np.zeros((inverse.e.shape[0], 0), complex)
    rp = as_cmatrix(rplus_new) if np.size(rplus_new) else np.zeros((0, inverse.e.shape[0]), complex)
    if rm.shape[0] != inverse.e.shape[1]:
        raise DimensionMismatch("new rminus rows must match the codomain of P")
    if rp.shape[1] != inverse.e.shape[0]:
        raise DimensionMismatch("new rplus columns must match the domain of P")
    e, ep, em, emp = inverse.e, inverse.e_plus, inverse.e_minus, inverse.e_minus_plus
    g = np.block([[-rp @ e @ rm, rp @ ep], [-em @ rm, emp]])
    if g.shape[0] != g.shape[1]:
        raise DimensionMismatch("transfer system is not square; borders incompatible")
    if g.size == 0:
        # empty borders on both sides: the re-bordered inverse is P^{-1} = e
        n1, n2 = e.shape
        return GrushinInverse(
            e,
            np.zeros((n1, 0), complex),
            np.zeros((0, n2), complex),
            np.zeros((0, 0), complex),
            inverse.condition,
        )
    cond_g = condition_number(g)
    if not np.isfinite(cond_g) or cond_g >= WELL_POSED_LIMIT:
        raise TransferSingular(f"transfer system condition {cond_g:.3e}", cond_g)
    w = refined_inverse(g)
    k_new_minus = rm.shape[1]
    w11 = w[:k_new_minus, : rp.shape[0]]
    w12 = w[:k_new_minus, rp.shape[0]:]
    w21 = w[k_new_minus:, : rp.shape[0]]
    w22 = w[k_new_minus:, rp.shape[0]:]
    new_emp = w11
    new_em = -w11 @ rp @ e - w12 @ em
    new_ep = -e @ rm @ w11 + ep @ w21
    new_e = (
        e
        + e @ rm @ w11 @ rp @ e
        + e @ rm @ w12 @ em
        - ep @ w21 @ rp @ e
        - ep @ w22 @ em
    )
    return GrushinInverse(new_e, new_ep, new_em, new_emp, cond_g * inverse.condition)


def iterate(inverse: GrushinInverse, nminus, nplus) -> GrushinInverse:
    """Compose the bordered problem with inner borders N-/N+.

    The result equals the inverse of the problem bordered by
    ``rminus @ nminus`` and ``nplus @ rplus``.  Raises
    :class:`InnerSingular` when [[e_minus_plus, N-], [N+, 0]] is not
    invertible.
    """
    nm = as_cmatrix(nminus)
    np_ = as_cmatrix(nplus)
    emp = inverse.e_minus_plus
    if nm.shape[0] != emp.shape[0]:
        raise DimensionMismatch("nminus rows must match k_minus")
    if np_.shape[1] != emp.shape[1]:
        raise DimensionMismatch("nplus columns must match k_plus")
    inner = np.block(
        [[emp, nm], [np_, np.zeros((np_.shape[0], nm.shape[1]), complex)]]
    )
    if inner.shape[0] != inner.shape[1]:
        raise DimensionMismatch("inner system is not square")
    cond_inner = condition_number(inner)
    if not np.isfinite(cond_inner) or cond_inner >= WELL_POSED_LIMIT:
        raise InnerSingular(f"inner system condition {cond_inner:.3e}", cond_inner)
    finv = refined_inverse(inner)
    k_plus = emp.shape[1]
    k_minus = emp.shape[0]
    f = finv[:k_plus, :k_minus]
    f_plus = finv[:k_plus, k_minus:]
    f_minus = finv[k_plus:, :k_minus]
    f_minus_plus = finv[k_plus:, k_minus:]
    e, ep, em = inverse.e, inverse.e_plus, inverse.e_minus
    return GrushinInverse(
        e - ep @ f @ em,
        ep @ f_plus,
        f_minus @ em,
        -f_minus_plus,
        cond_inner * inverse.condition,
    )


def feshbach_effective(h, split: Split, z: complex, cross_check: bool = True) -> np.ndarray:
    """The resonance function of the distinguished block:

        G_v(z) = z - H^vv - H^vw (z - H^ww)^{-1} H^wv ,

    where w is the complementary index set.  When ``cross_check`` is on, the
    same quantity is recomputed as minus the effective Hamiltonian of the
    bordered problem for z - H with inclusion/projection borders, and the two
    must agree to 1e-10 scale.
    """
    h = as_cmatrix(h)
    n = h.shape[0]
    if h.shape[0] != h.shape[1]:
        raise DimensionMismatch("H must be square")
    v = list(split.indices)
    w = list(split.complement(n))
    hvv = h[np.ix_(v, v)]
    hvw = h[np.ix_(v, w)]
    hwv = h[np.ix_(w, v)]
    hww = h[np.ix_(w, w)]
    zw = z * np.eye(len(w)) - hww
    sig = singular_values(zw)
    if sig[-1] <= rank_tolerance(zw) or sig[0] / max(sig[-1], 1e-300) >= WELL_POSED_LIMIT:
        raise ComplementSingular(f"z within spectrum of the complementary block (sigma_min={sig[-1]:.3e})")
    g_v = z * np.eye(len(v)) - hvv - hvw @ np.linalg.solve(zw, hwv)
    if cross_check:
        rminus = np.zeros((n, len(v)), dtype=np.complex128)
        rminus[v, range(len(v))] = 1.0
        rplus = np.zeros((len(v), n), dtype=np.complex128)
        rplus[range(len(v)), v] = 1.0
        ginv = invert_system(assemble(z * np.eye(n) - h, rminus, rplus))
        scale = max(1.0, spectral_norm(g_v))
        if spectral_norm(ginv.e_minus_plus + g_v) > 1e-10 * scale * ginv.condition:
            raise ConsistencyError("bordered effective Hamiltonian disagrees with -G_v")
    return g_v


def dft_matrix(n: int) -> np.ndarray:
    """Forward DFT, negative exponent, unnormalized (the module-wide convention)."""
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n)


def circulant_matrix(kernel) -> np.ndarray:
    """Circular convolution by ``kernel`` on Z_N: row i holds kernel[(i-j) mod N]."""
    k = np.asarray(kernel, dtype=np.complex128).ravel()
    n = k.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return k[idx]


def circulant_effective(kernel) -> tuple[BorderedSystem, GrushinInverse]:
    """Bordered problem for circular convolution with DFT borders.

    The borders are the forward DFT and minus the inverse DFT, so the problem
    is well posed for every kernel and the effective Hamiltonian is the
    diagonal matrix of the kernel's DFT.
    """
    k = np.asarray(kernel, dtype=np.complex128).ravel()
    if k.size < 2:
        raise DimensionMismatch("kernel must have length >= 2")
    n = k.size
    f = dft_matrix(n)
    f_inv = np.conj(f).T / n
    system = assemble(circulant_matrix(k), -f_inv, f)
    return system, invert_system(system)


def circle_monodromy_inverse(z: complex, h: float, nodes: int) -> GrushinInverse:
    """Discretized inverse blocks of the circle transport problem.

    On a uniform grid over [0, 2*pi) with left-endpoint weights, the blocks
    are the sampled solution operators of the first-order problem whose
    effective Hamiltonian is 1 - exp(2*pi*i*z/h); the return-map factor
    exp(2*pi*i*z/h) plays the role of the monodromy.
    """
    x = 2.0 * np.pi * np.arange(nodes) / nodes
    wq = 2.0 * np.pi / nodes
    phase = np.exp(1j * z * x / h)
    mono = np.exp(2j * np.pi * z / h)
    # e[i, j] = weight * exp(i (x_i - x_j) z / h) for x_j < x_i; the kernel
    # jumps on the diagonal, so the diagonal carries half weight (this also
    # makes the discrete pairing identity |B|^2 = A + conj(A) exact).
    lower = np.tril(np.ones((nodes, nodes)), k=-1) + 0.5 * np.eye(nodes)
    e = wq * lower * np.outer(phase, 1.0 / phase)
    e_plus = phase.reshape(-1, 1)
    e_minus = (-mono * wq / phase).reshape(1, -1)
    e_minus_plus = np.array([[1.0 - mono]], dtype=np.complex128)
    return GrushinInverse(e, e_plus, e_minus, e_minus_plus, 1.0)


def symmetric_monodromy_borders(
    profile: Callable[[float], complex], z: complex, h: float, nodes: int
) -> tuple[np.ndarray, np.ndarray]:
    """Discretized equal borders f(x) exp(i x z / h) for the circle problem.

    Pairing the new row border with a vector uses the same left-endpoint
    weights as :func:`circle_monodromy_inverse`, so products of the borders
    with those blocks reproduce the continuum integrals exactly at the grid
    level.
    """
    x = 2.0 * np.pi * np.arange(nodes) / nodes
    wq = 2.0 * np.pi / nodes
    fvals = np.array([profile(xk) for xk in x], dtype=np.complex128)
    phase = np.exp(1j * z * x / h)
    rminus = (fvals * phase).reshape(-1, 1)
    rplus = (wq * np.conj(fvals * phase)).reshape(1, -1)
    return rminus, rplus
