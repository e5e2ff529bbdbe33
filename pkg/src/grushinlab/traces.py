"""Contour trace formulas.

Eigenvalue counting through the logarithmic derivative of a holomorphic
family, the same count through the effective Hamiltonian of a bordered
problem with constant finite-rank borders, weighted versions of both, the
closed-loop trace identity for families of bordered systems, a numerical
proof of the lattice summation formula through the circle monodromy factor,
and the self-adjoint border obstruction of the circle problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import BorderedSystem, assemble, invert_system
from .errors import (
    ContractionCertificateFails,
    DimensionMismatch,
    IllPosed,
    IllPosedOnContour,
    NonInteger,
    OnContourSingular,
    SingularAtNode,
    SupportViolation,
)
from .linops import (
    EPS,
    WELL_POSED_LIMIT,
    Contour,
    as_cmatrix,
    condition_number,
    contour_integrate,
    rank_tolerance,
    spectral_norm,
    svd,
)

TWO_PI_I = 2j * np.pi


@dataclass(frozen=True)
class HolomorphicFamily:
    """A matrix family z -> P(z) together with its derivative evaluator."""

    value: Callable[[complex], np.ndarray]
    derivative: Callable[[complex], np.ndarray]

    @staticmethod
    def pencil(a) -> "HolomorphicFamily":
        """The family z*I - A."""
        a = as_cmatrix(a)
        ident = np.eye(a.shape[0], dtype=np.complex128)
        return HolomorphicFamily(lambda z: z * ident - a, lambda z: ident.copy())

    @staticmethod
    def from_value(value: Callable[[complex], np.ndarray], scale: float = 1.0) -> "HolomorphicFamily":
        """Attach a central-difference derivative with Richardson step control."""
        step = EPS ** (1.0 / 3.0) * scale

        def derivative(z: complex) -> np.ndarray:
            coarse = (value(z + step) - value(z - step)) / (2.0 * step)
            fine = (value(z + step / 2.0) - value(z - step / 2.0)) / step
            return (4.0 * fine - coarse) / 3.0

        return HolomorphicFamily(value, derivative)

    def check_consistency(self, probes: Sequence[complex], rtol: float = 1e-6, scale: float = 1.0):
        """Central-difference check of the derivative at the probe points."""
        step = EPS ** (1.0 / 3.0) * scale
        for z in probes:
            fd = (self.value(z + step) - self.value(z - step)) / (2.0 * step)
            dv = self.derivative(z)
            ref = max(spectral_norm(dv), 1.0)
            if spectral_norm(fd - dv) > rtol * ref:
                raise ValueError(f"derivative inconsistent with finite differences at z={z}")


def _probe_points(contour: Contour) -> list[complex]:
    z, _ = contour.quadrature(8)
    return [z[0], z[3], z[5]]


def count_direct(family: HolomorphicFamily, contour: Contour, tol: float = 1e-10) -> int:
    """Number of spectral points inside the contour, counted with multiplicity:

        (1 / 2 pi i) * closed integral of tr( P'(z) P(z)^{-1} ) dz .

    The family must be invertible at the contour's node set; the integral
    must land on an integer within 1e-6.
    """
    family.check_consistency(_probe_points(contour), scale=max(contour.scale(), 1.0))
    nodes, _ = contour.quadrature(max(8, contour.nodes))
    for z in nodes:
        p = family.value(z)
        sig = np.linalg.svd(p, compute_uv=False)
        if sig[-1] <= rank_tolerance(p):
            raise OnContourSingular(f"P(z) singular at node z={z}")

    def integrand(z: complex) -> complex:
        return complex(np.trace(np.linalg.solve(family.value(z), family.derivative(z))))

    raw = contour_integrate(integrand, contour, tol) / TWO_PI_I
    return _as_integer(raw)


def _as_integer(raw: complex, tol: float = 1e-6) -> int:
    nearest = int(round(raw.real))
    if abs(raw - nearest) >= tol:
        raise NonInteger(f"counting integral {raw} is {abs(raw - nearest):.2e} from an integer")
    return nearest


def borders_from_base_point(
    family: HolomorphicFamily, z_base: complex, tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """Constant borders from the singular directions of the family at a base point.

    The left/right singular vectors of ``P(z_base)`` with singular value below
    ``tol`` give maximal-rank borders transversal to the range and kernel,
    which is exactly what a counting problem near that point needs.
    """
    from .pseudoinverse import canonical_borders

    cb = canonical_borders(family.value(z_base), tol)
    return cb.rminus, cb.rplus


def invariant_subspace_borders(a, contour: Contour) -> tuple[np.ndarray, np.ndarray]:
    """Borders spanning the right/left invariant subspaces for the eigenvalues
    of ``a`` inside the contour.

    For the pencil z*I - A these borders keep the bordered problem invertible
    throughout the enclosed region (the matrix decouples along the invariant
    splitting), which is the standing hypothesis of the counting identity when
    the contour encloses several eigenvalues.  Assumes semisimple enclosed
    eigenvalues.
    """
    a = as_cmatrix(a)
    n = a.shape[0]
    vals, vecs = np.linalg.eig(a)
    inside = np.array([contour.contains(v) for v in vals])
    if not np.any(inside):
        return np.zeros((n, 0), complex), np.zeros((0, n), complex)
    right = np.linalg.qr(vecs[:, inside])[0]
    vals_l, vecs_l = np.linalg.eig(a.conj().T)
    inside_l = np.array([contour.contains(np.conj(v)) for v in vals_l])
    left = np.linalg.qr(vecs_l[:, inside_l])[0]
    if left.shape[1] != right.shape[1]:
        raise DimensionMismatch("left/right enclosed multiplicities disagree")
    return right, left.conj().T


def count_effective(
    family: HolomorphicFamily,
    rminus,
    rplus,
    contour: Contour,
    tol: float = 1e-10,
) -> int:
    """The same count through the effective Hamiltonian:

        (1 / 2 pi i) * closed integral of tr( E_-+'(z) E_-+(z)^{-1} ) dz ,

    with constant borders, where E_-+' = -e_minus P' e_plus.  The bordered
    problem must be well posed at the contour's node set.
    """
    rm = as_cmatrix(rminus) if np.size(rminus) else None
    rp = as_cmatrix(rplus) if np.size(rplus) else None
    family.check_consistency(_probe_points(contour), scale=max(contour.scale(), 1.0))

    def blocks(z: complex):
        p = family.value(z)
        if rm is None or rp is None:
            return invert_system(assemble(
                p,
                np.zeros((p.shape[0], 0), complex),
                np.zeros((0, p.shape[1]), complex),
            ))
        return invert_system(assemble(p, rm, rp))

    nodes, _ = contour.quadrature(max(8, contour.nodes))
    for z in nodes:
        try:
            blocks(z)
        except IllPosed as exc:
            raise IllPosedOnContour(f"bordered problem ill posed at node z={z}") from exc

    def integrand(z: complex) -> complex:
        ginv = blocks(z)
        if ginv.e_minus_plus.size == 0:
            return 0.0j
        num = ginv.e_minus @ family.derivative(z) @ ginv.e_plus
        return complex(-np.trace(np.linalg.solve(ginv.e_minus_plus, num)))

    raw = contour_integrate(integrand, contour, tol) / TWO_PI_I
    return _as_integer(raw)


@dataclass(frozen=True)
class WeightedTrace:
    direct: complex
    effective: complex

    @property
    def difference(self) -> float:
        return abs(self.direct - self.effective)


def weighted_trace(
    family: HolomorphicFamily,
    rminus,
    rplus,
    contour: Contour,
    weight: Callable[[complex], complex],
    tol: float = 1e-10,
) -> WeightedTrace:
    """Both weighted counting integrals (they agree for holomorphic weights;
    with weight z the result is the sum of the enclosed spectral points)."""
    rm = as_cmatrix(rminus) if np.size(rminus) else None
    rp = as_cmatrix(rplus) if np.size(rplus) else None
    family.check_consistency(_probe_points(contour), scale=max(contour.scale(), 1.0))

    def direct_integrand(z: complex) -> complex:
        return complex(
            np.trace(np.linalg.solve(family.value(z), family.derivative(z))) * weight(z)
        )

    def effective_integrand(z: complex) -> complex:
        p = family.value(z)
        if rm is None or rp is None:
            return 0.0j
        try:
            ginv = invert_system(assemble(p, rm, rp))
        except IllPosed as exc:
            raise IllPosedOnContour(str(exc)) from exc
        if ginv.e_minus_plus.size == 0:
            return 0.0j
        num = ginv.e_minus @ family.derivative(z) @ ginv.e_plus
        return complex(-np.trace(np.linalg.solve(ginv.e_minus_plus, num)) * weight(z))

    direct = contour_integrate(direct_integrand, contour, tol) / TWO_PI_I
    effective = contour_integrate(effective_integrand, contour, tol) / TWO_PI_I
    return WeightedTrace(direct, effective)


# ---------------------------------------------------------------------------
# closed loops of bordered systems


def _trig_eval(coeffs: Mapping[int, np.ndarray], t: float, differentiate: bool) -> np.ndarray:
    total = None
    for m, c in coeffs.items():
        factor = np.exp(1j * m * t)
        if differentiate:
            factor *= 1j * m
        term = factor * c
        total = term if total is None else total + term
    return total


def _trig_disc(coeffs: Mapping[int, np.ndarray], z: complex) -> np.ndarray:
    # harmonic extension to the closed unit disc: e^{imt} -> z^m (m >= 0),
    # conj(z)^{|m|} (m < 0)
    total = None
    for m, c in coeffs.items():
        factor = z**m if m >= 0 else np.conj(z) ** (-m)
        term = factor * c
        total = term if total is None else total + term
    return total


@dataclass(frozen=True)
class LoopFamily:
    """A closed C^1 loop of bordered systems with trigonometric-polynomial blocks.

    Each block is given by its Fourier coefficients {m: C_m}, meaning
    sum_m C_m e^{i m t}; the loop closes up exactly.  The corner block may be
    nonzero along the loop.
    """

    p_coeffs: dict
    rminus_coeffs: dict
    rplus_coeffs: dict
    corner_coeffs: dict

    @staticmethod
    def from_blocks(p, rminus, rplus, corner=None) -> "LoopFamily":
        def norm(block, template_builder):
            if block is None:
                return {0: template_builder()}
            out = {}
            for m, c in block.items():
                out[int(m)] = np.asarray(c, dtype=np.complex128)
            return out

        p = {int(m): np.asarray(c, dtype=np.complex128) for m, c in p.items()}
        shape = next(iter(p.values())).shape
        rminus = norm(rminus, lambda: np.zeros((shape[0], 0), complex))
        rplus = norm(rplus, lambda: np.zeros((0, shape[1]), complex))
        k_plus = next(iter(rplus.values())).shape[0]
        k_minus = next(iter(rminus.values())).shape[1]
        corner = norm(corner, lambda: np.zeros((k_plus, k_minus), complex))
        return LoopFamily(p, rminus, rplus, corner)

    def system(self, t: float) -> BorderedSystem:
        return assemble(
            _trig_eval(self.p_coeffs, t, False),
            _trig_eval(self.rminus_coeffs, t, False),
            _trig_eval(self.rplus_coeffs, t, False),
            _trig_eval(self.corner_coeffs, t, False),
        )

    def p_derivative(self, t: float) -> np.ndarray:
        return _trig_eval(self.p_coeffs, t, True)

    def assembled_derivative(self, t: float) -> np.ndarray:
        return np.block(
            [
                [_trig_eval(self.p_coeffs, t, True), _trig_eval(self.rminus_coeffs, t, True)],
                [_trig_eval(self.rplus_coeffs, t, True), _trig_eval(self.corner_coeffs, t, True)],
            ]
        )

    def disc_system(self, z: complex) -> np.ndarray:
        return np.block(
            [
                [_trig_disc(self.p_coeffs, z), _trig_disc(self.rminus_coeffs, z)],
                [_trig_disc(self.rplus_coeffs, z), _trig_disc(self.corner_coeffs, z)],
            ]
        )

    def closure_residual(self) -> float:
        return spectral_norm(self.system(0.0).assembled() - self.system(2.0 * np.pi).assembled())


@dataclass(frozen=True)
class LoopTraceResult:
    trace_p: complex
    trace_effective: complex

    @property
    def difference(self) -> float:
        return abs(self.trace_p - self.trace_effective)


def _periodic_integral(f: Callable[[float], complex], tol: float, cap: int = 2**16) -> complex:
    n = 64
    previous = _periodic_once(f, n)
    while n < cap:
        n *= 2
        current = _periodic_once(f, n)
        if abs(current - previous) <= tol * (1.0 + abs(current)):
            return current
        previous = current
    raise NonInteger(f"loop quadrature did not converge ({previous} vs {current})")


def _periodic_once(f, n: int) -> complex:
    ts = 2.0 * np.pi * np.arange(n) / n
    return complex(sum(f(t) for t in ts) * (2.0 * np.pi / n))


def loop_trace_identity(
    loop: LoopFamily,
    certificate: Callable[[float, float], np.ndarray] | None = None,
    tol: float = 1e-9,
    certificate_times: int = 17,
    certificate_radii: int = 9,
) -> LoopTraceResult:
    """Check tr of the loop integrals of P^{-1} dP and E_-+^{-1} dE_-+.

    The loop must come with a contraction certificate: a sampled homotopy
    (t, s) -> assembled bordered matrix, s in [0, 1], that stays invertible
    (default: the harmonic extension of the trigonometric blocks to the unit
    disc).  Both traces are computed by doubling trapezoidal quadrature in t;
    each is 2 pi i times a winding integer for these finite-dimensional loops.
    """
    if certificate is None:
        certificate = lambda t, s: loop.disc_system(s * np.exp(1j * t))
    if loop.closure_residual() > 1e-12:
        raise ValueError("loop does not close up")
    for s in np.linspace(0.0, 1.0, certificate_radii):
        for t in 2.0 * np.pi * np.arange(certificate_times) / certificate_times:
            mat = certificate(float(t), float(s))
            cond = condition_number(mat)
            if not np.isfinite(cond) or cond >= WELL_POSED_LIMIT:
                raise ContractionCertificateFails(
                    f"certificate matrix singular at t={t:.3f}, s={s:.3f}"
                )

    def integrand_p(t: float) -> complex:
        p = loop.system(t).p
        sig = np.linalg.svd(p, compute_uv=False)
        if sig[-1] <= rank_tolerance(p):
            raise SingularAtNode(f"P(t) singular at t={t:.4f}")
        return complex(np.trace(np.linalg.solve(p, loop.p_derivative(t))))

    def integrand_eff(t: float) -> complex:
        system = loop.system(t)
        try:
            ginv = invert_system(system)
        except IllPosed as exc:
            raise SingularAtNode(f"bordered matrix singular at t={t:.4f}") from exc
        n1, n2 = system.n_cols, system.n_rows
        full = ginv.assembled()
        dotted = -(full @ loop.assembled_derivative(t) @ full)
        e_dot = dotted[n1:, n2:]
        return complex(np.trace(np.linalg.solve(ginv.e_minus_plus, e_dot)))

    trace_p = _periodic_integral(integrand_p, tol)
    trace_eff = _periodic_integral(integrand_eff, tol)
    return LoopTraceResult(trace_p, trace_eff)


# ---------------------------------------------------------------------------
# lattice summation through the circle monodromy factor


@dataclass(frozen=True)
class DecayCertificate:
    """A decay bound used to size truncations and quadrature windows.

    kinds:
      * ``polynomial``: |f(x)| <= constant / |x|**rate for |x| >= 1
      * ``gaussian``:   |f(x)| <= constant * exp(-rate * x**2)
      * ``compact``:    f vanishes for |x| > constant (half-width)
      * ``null``:       the lattice samples beyond the origin are bounded by
                        ``constant`` in total (exact-zero sampling patterns)
    """

    kind: str
    constant: float
    rate: float = 0.0

    def tail_sum(self, t: int) -> float:
        if self.kind == "polynomial":
            if self.rate <= 1.0:
                return np.inf
            return 2.0 * self.constant / ((self.rate - 1.0) * t ** (self.rate - 1.0))
        if self.kind == "gaussian":
            return 2.0 * self.constant * math.exp(-self.rate * t * t)
        if self.kind == "compact":
            return 0.0 if t >= self.constant else np.inf
        if self.kind == "null":
            return self.constant
        raise ValueError(f"unknown certificate kind {self.kind!r}")

    def tail_integral(self, w: float) -> float:
        if self.kind == "polynomial":
            if self.rate <= 1.0:
                return np.inf
            return 2.0 * self.constant / ((self.rate - 1.0) * w ** (self.rate - 1.0))
        if self.kind == "gaussian":
            return self.constant * math.exp(-self.rate * w * w) / max(self.rate * w, 1.0)
        if self.kind == "compact":
            return 0.0 if w >= self.constant else np.inf
        if self.kind == "null":
            return self.constant
        raise ValueError(f"unknown certificate kind {self.kind!r}")


@dataclass(frozen=True)
class TestFunction:
    """A test function with its transform and the certificates that make the
    lattice sums and the real-line quadrature truncatable.

    ``value`` and ``transform`` must accept numpy arrays.  The transform
    convention is  fhat(xi) = integral f(x) exp(-i x xi) dx.
    """

    value: Callable[[np.ndarray], np.ndarray]
    transform: Callable[[np.ndarray], np.ndarray]
    decay: DecayCertificate
    lattice_decay: DecayCertificate
    transform_decay: DecayCertificate


def sinc_squared() -> TestFunction:
    """f(x) = (sin(pi x) / (pi x))^2, transform = unit triangle on [-2 pi, 2 pi].

    Lattice samples away from the origin vanish identically (sin(pi n) = 0),
    so the lattice certificate is the exact-zero one.
    """

    def value(x):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        nz = x != 0.0
        out[nz] = (np.sin(np.pi * x[nz]) / (np.pi * x[nz])) ** 2
        return out

    def transform(xi):
        xi = np.asarray(xi, dtype=float)
        return np.maximum(0.0, 1.0 - np.abs(xi) / (2.0 * np.pi))

    return TestFunction(
        value,
        transform,
        decay=DecayCertificate("polynomial", 1.0 / np.pi**2, 2.0),
        lattice_decay=DecayCertificate("null", 1e-30),
        transform_decay=DecayCertificate("compact", 2.0 * np.pi),
    )


def gaussian_test() -> TestFunction:
    """f(x) = exp(-pi x^2), transform = exp(-xi^2 / (4 pi))."""

    def value(x):
        return np.exp(-np.pi * np.asarray(x, dtype=float) ** 2)

    def transform(xi):
        return np.exp(-np.asarray(xi, dtype=float) ** 2 / (4.0 * np.pi))

    return TestFunction(
        value,
        transform,
        decay=DecayCertificate("gaussian", 1.0, np.pi),
        lattice_decay=DecayCertificate("gaussian", 1.0, np.pi),
        transform_decay=DecayCertificate("gaussian", 1.0, 1.0 / (4.0 * np.pi)),
    )


@dataclass(frozen=True)
class PoissonResult:
    lattice_sum: complex           # sum of f over the integers
    transform_sum: complex         # sum of fhat over 2 pi Z
    monodromy_sum: complex | None  # the finite-k contour-collapsed sum; None if skipped
    support_ok: bool
    lattice_truncation: int
    transform_truncation: int
    tail_bounds: dict

    def discrepancies(self) -> dict:
        out = {"lattice_vs_transform": abs(self.lattice_sum - self.transform_sum)}
        if self.monodromy_sum is not None:
            out["lattice_vs_monodromy"] = abs(self.lattice_sum - self.monodromy_sum)
            out["transform_vs_monodromy"] = abs(self.transform_sum - self.monodromy_sum)
        return out


def _truncation_from(cert: DecayCertificate, target: float, cap: int = 200_000) -> int:
    t = 1
    while cert.tail_sum(t) > target:
        t = t + max(1, t // 2)
        if t > cap:
            raise ValueError(
                f"certificate cannot reach tail bound {target:.1e} below truncation {cap}"
            )
    return t


def poisson_verify(
    tf: TestFunction,
    n_terms: int,
    truncation: int | None = None,
    tol: float = 1e-10,
    strict_support: bool = False,
) -> PoissonResult:
    """Compare three computations of the lattice sum of ``tf``:

      1. direct:      sum_n f(n)
      2. transform:   sum_m fhat(2 pi m)
      3. monodromy:   (1/2 pi i) sum_{|k| <= N} integral f(z) M(z)^k M'(z) dz
                      with M(z) = exp(2 pi i z), by real-line quadrature.

    The third route needs the transform supported inside (-2 pi N, 2 pi N);
    when the support check fails it is skipped (or raises
    :class:`SupportViolation` with ``strict_support=True``).
    """
    if n_terms < 1:
        raise ValueError("need at least one monodromy term")
    t_f = truncation if truncation is not None else _truncation_from(tf.lattice_decay, 0.01 * tol)
    if tf.lattice_decay.tail_sum(t_f) > tol:
        raise ValueError("lattice tail bound above tolerance at that truncation")
    ns = np.arange(-t_f, t_f + 1)
    lattice_sum = complex(np.sum(tf.value(ns)))

    if tf.transform_decay.kind == "compact":
        t_hat = int(math.ceil(tf.transform_decay.constant / (2.0 * np.pi)))
    else:
        t_hat = _truncation_from(tf.transform_decay, 0.01 * tol)
    ms = 2.0 * np.pi * np.arange(-t_hat, t_hat + 1)
    transform_sum = complex(np.sum(tf.transform(ms)))

    edge = 2.0 * np.pi * n_terms
    edge_values = np.abs(tf.transform(np.array([-edge, edge, -1.125 * edge, 1.125 * edge])))
    if tf.transform_decay.kind == "compact":
        support_ok = tf.transform_decay.constant <= edge and float(edge_values.max()) <= 1e-12
    else:
        support_ok = float(edge_values.max()) <= 1e-12
    tails = {
        "lattice": float(tf.lattice_decay.tail_sum(t_f)),
        "transform": float(tf.transform_decay.tail_sum(t_hat)),
    }
    if not support_ok:
        if strict_support:
            raise SupportViolation(
                f"transform not negligible at the band edge 2 pi N = {edge:.3f}"
            )
        return PoissonResult(lattice_sum, transform_sum, None, False, t_f, t_hat, tails)

    monodromy_sum = _monodromy_route(tf, n_terms, tol)
    return PoissonResult(lattice_sum, transform_sum, monodromy_sum, True, t_f, t_hat, tails)


def _monodromy_route(tf: TestFunction, n_terms: int, tol: float) -> complex:
    """Finite monodromy-power sum by composite trapezoid on [-W, W].

    The window comes from the decay certificate.  For polynomial decay the
    1/W truncation term is removed by one window-doubling extrapolation on
    integer windows (the oscillatory remainder there is O(1/W^2)).
    """
    if tf.transform_decay.kind == "compact":
        bandwidth = tf.transform_decay.constant / (2.0 * np.pi) + n_terms + 1
    else:
        bandwidth = 4.0 + n_terms + 1
    step = 1.0 / (2.0 * math.ceil(bandwidth))
    if tf.decay.kind == "polynomial":
        # integer windows + one window doubling: the 1/W truncation term is
        # extrapolated away and the oscillatory leftovers are >= 2nd order,
        # so a cube-root window is enough
        w = max(64, 4 * int(math.ceil((max(tf.decay.constant, 1e-6) / tol) ** (1.0 / 3.0))))
        extrapolate = True
    elif tf.decay.kind == "gaussian":
        w = int(math.ceil(math.sqrt(math.log(max(tf.decay.constant, 1.0) / (0.01 * tol)) / tf.decay.rate))) + 2
        extrapolate = False
    else:
        w = 64
        extrapolate = False

    per_unit = int(round(1.0 / step))
    half = w * per_unit
    xs = step * np.arange(-2 * half, 2 * half + 1)
    fvals = np.asarray(tf.value(xs), dtype=np.complex128)
    mono = np.exp(TWO_PI_I * xs)          # M(z) on the real line
    mono_prime = TWO_PI_I * mono

    def windowed(values: np.ndarray, half_nodes: int) -> complex:
        mid = 2 * half
        lo, hi = mid - half_nodes, mid + half_nodes
        total = values[lo : hi + 1].sum() - 0.5 * (values[lo] + values[hi])
        return complex(step * total)

    total_w = 0.0j
    total_2w = 0.0j
    power = mono ** (-n_terms)            # M^k for k = -N
    for k in range(-n_terms, n_terms + 1):
        integrand = fvals * power * mono_prime / TWO_PI_I
        total_w += windowed(integrand, half)
        total_2w += windowed(integrand, 2 * half)
        power = power * mono
    if extrapolate:
        return 2.0 * total_2w - total_w
    return total_2w


# ---------------------------------------------------------------------------
# self-adjoint border obstruction for the circle problem


@dataclass(frozen=True)
class ObstructionReport:
    ordered_pairing: complex      # A = double integral over y < x of conj(f(x)) f(y)
    mean_value: complex           # B = integral of f
    identity_residual: float      # | |B|^2 - 2 Re A |
    crossings: np.ndarray         # real z where Re(A e^{-i pi z / h}) changes sign
    quadrature_delta: float


def selfadjoint_obstruction(
    profile: Callable[[float], complex],
    h: float,
    z_grid: Sequence[float],
    tol: float = 1e-8,
    node_cap: int = 2**21,
) -> ObstructionReport:
    """Evaluate the invertibility obstruction for equal borders on the circle.

    Computes A (the ordered double integral), B (the mean), checks the exact
    identity |B|^2 = 2 Re A, and locates the real shifts where
    Re(A e^{-i pi z / h}) changes sign -- the problem is never well posed for
    all real shifts once A is nonzero.
    """
    n = 512
    a_prev, b_prev = _obstruction_once(profile, n)
    delta = np.inf
    while n < node_cap:
        n *= 2
        a_val, b_val = _obstruction_once(profile, n)
        delta = max(abs(a_val - a_prev), abs(b_val - b_prev))
        if delta <= tol * max(1.0, abs(a_val)):
            break
        a_prev, b_prev = a_val, b_val
    residual = abs(abs(b_val) ** 2 - 2.0 * a_val.real)

    def sign_fn(z: float) -> float:
        return (a_val * np.exp(-1j * np.pi * z / h)).real

    grid = np.asarray(z_grid, dtype=float)
    crossings = []
    vals = np.array([sign_fn(z) for z in grid])
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            crossings.append(grid[i])
        elif vals[i] * vals[i + 1] < 0.0:
            lo, hi = grid[i], grid[i + 1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if sign_fn(lo) * sign_fn(mid) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            crossings.append(0.5 * (lo + hi))
    return ObstructionReport(a_val, b_val, float(residual), np.asarray(crossings), float(delta))


def _obstruction_once(profile, n: int) -> tuple[complex, complex]:
    xs = np.linspace(0.0, 2.0 * np.pi, n + 1)
    f = np.asarray([profile(x) for x in xs], dtype=np.complex128)
    dx = xs[1] - xs[0]
    inner = np.concatenate([[0.0], np.cumsum(0.5 * dx * (f[:-1] + f[1:]))])
    b_val = complex(inner[-1])
    integrand = np.conj(f) * inner
    a_val = complex(np.sum(0.5 * dx * (integrand[:-1] + integrand[1:])))
    return a_val, b_val
