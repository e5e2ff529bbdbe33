import numpy as np
import pytest

from grushinlab.core import (
    Split,
    assemble,
    circulant_effective,
    circle_monodromy_inverse,
    dft_matrix,
    effective_index,
    feshbach_effective,
    invert_system,
    iterate,
    recover_resolvent,
    schur_check,
    symmetric_monodromy_borders,
    transfer,
)
from grushinlab.errors import (
    ComplementSingular,
    CornerSingular,
    DimensionMismatch,
    EffectiveSingular,
    IllPosed,
    InnerSingular,
    RankAmbiguous,
    TransferSingular,
)
from grushinlab.linops import spectral_norm
from grushinlab.perturbation import jordan_block


def _rng(seed):
    return np.random.default_rng(np.random.SeedSequence(seed))


def _random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _unit_borders(n):
    rminus = np.zeros((n, 1), complex)
    rminus[-1, 0] = 1.0
    rplus = np.zeros((1, n), complex)
    rplus[0, 0] = 1.0
    return rminus, rplus


def test_assemble_jordan_borders_shape():
    rm, rp = _unit_borders(3)
    system = assemble(jordan_block(3), rm, rp)
    assert system.assembled().shape == (4, 4)
    assert system.k_minus == system.k_plus == 1


def test_assemble_smallest_system():
    system = assemble(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
    assert np.allclose(system.assembled(), [[0, 1], [1, 0]])


def test_assemble_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        assemble(jordan_block(3), np.ones((2, 1)), np.ones((1, 3)))
    with pytest.raises(DimensionMismatch):
        assemble(jordan_block(3), np.ones((3, 1)), np.ones((1, 2)))
    with pytest.raises(DimensionMismatch):
        assemble(jordan_block(3), np.ones((3, 1)), np.ones((1, 3)), corner=np.ones((2, 2)))


def test_invert_involution():
    system = assemble(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
    ginv = invert_system(system)
    assert np.allclose(ginv.assembled(), system.assembled())
    assert ginv.e_minus_plus[0, 0] == pytest.approx(0.0)


def test_invert_jordan_shift():
    rm, rp = _unit_borders(2)
    ginv = invert_system(assemble(jordan_block(2) - 0.5 * np.eye(2), rm, rp))
    assert ginv.e_minus_plus[0, 0] == pytest.approx(0.25)


def test_invert_illposed():
    with pytest.raises(IllPosed):
        invert_system(assemble(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1))))


def test_two_sided_inverse_with_corners():
    for seed in range(20):
        rng = _rng(seed)
        n, k = 6, 2
        p = _random_complex(rng, (n, n))
        system = assemble(
            p,
            _random_complex(rng, (n, k)),
            _random_complex(rng, (k, n)),
            corner=_random_complex(rng, (k, k)),
        )
        try:
            ginv = invert_system(system)
        except IllPosed:
            continue
        dim = n + k
        a = system.assembled()
        e = ginv.assembled()
        bound = 1e-10 * ginv.condition
        assert spectral_norm(a @ e - np.eye(dim)) <= bound
        assert spectral_norm(e @ a - np.eye(dim)) <= bound


def test_recover_resolvent_empty_borders():
    p = np.diag([2.0, 3.0])
    system = assemble(p, np.zeros((2, 0)), np.zeros((0, 2)))
    rec = recover_resolvent(system, invert_system(system))
    assert np.allclose(rec.matrix, np.diag([0.5, 1.0 / 3.0]))


def test_recover_resolvent_jordan():
    n = 3
    rm, rp = _unit_borders(n)
    p = jordan_block(n) - 0.5 * np.eye(n)
    system = assemble(p, rm, rp)
    rec = recover_resolvent(system, invert_system(system))
    assert rec.residual <= 1e-12
    assert spectral_norm(rec.matrix - np.linalg.solve(p, np.eye(n))) <= 1e-11


def test_recover_resolvent_effective_singular():
    n = 3
    rm, rp = _unit_borders(n)
    system = assemble(jordan_block(n), rm, rp)
    with pytest.raises(EffectiveSingular):
        recover_resolvent(system, invert_system(system))


def test_schur_identity_cases():
    assert schur_check(np.eye(4), np.eye(4), 2) <= 1e-14
    a = np.diag([2.0, 3.0])
    assert schur_check(a, np.diag([0.5, 1.0 / 3.0]), 1) <= 1e-14
    rng = _rng(5)
    m = _random_complex(rng, (6, 6)) + 4.0 * np.eye(6)
    assert schur_check(m, np.linalg.inv(m), 3) <= 1e-11
    with pytest.raises(CornerSingular):
        schur_check(np.diag([1.0, 0.0]), np.eye(2), 1)


def test_second_schur_identity():
    # E_-+^{-1} = -R+ P^{-1} R- when P invertible and borders square
    rng = _rng(9)
    n, k = 5, 2
    p = _random_complex(rng, (n, n)) + 3.0 * np.eye(n)
    rm = _random_complex(rng, (n, k))
    rp = _random_complex(rng, (k, n))
    ginv = invert_system(assemble(p, rm, rp))
    lhs = np.linalg.inv(ginv.e_minus_plus)
    rhs = -rp @ np.linalg.solve(p, rm)
    scale = max(1.0, spectral_norm(lhs))
    assert spectral_norm(lhs - rhs) <= 1e-9 * scale


def test_effective_index_jordan():
    n = 3
    rm, rp = _unit_borders(n)
    system = assemble(jordan_block(n), rm, rp)
    report = effective_index(system, invert_system(system))
    assert (report.dim_kernel, report.dim_cokernel, report.index) == (1, 1, 0)


def test_effective_index_invertible():
    rng = _rng(2)
    p = _random_complex(rng, (4, 4)) + 3.0 * np.eye(4)
    system = assemble(p, _random_complex(rng, (4, 1)), _random_complex(rng, (1, 4)))
    report = effective_index(system, invert_system(system))
    assert (report.dim_kernel, report.dim_cokernel, report.index) == (0, 0, 0)


def test_effective_index_rectangular():
    from grushinlab.pseudoinverse import canonical_borders

    rng = _rng(4)
    p = _random_complex(rng, (2, 3))
    cb = canonical_borders(p)
    system = assemble(p, cb.rminus, cb.rplus)
    report = effective_index(system, invert_system(system))
    assert report.index == 1 == system.k_plus - system.k_minus


def test_effective_index_rank_ambiguous():
    p = np.diag([1.0, 1e-8]).astype(complex)
    system = assemble(p, np.zeros((2, 0)), np.zeros((0, 2)))
    ginv = invert_system(system)
    with pytest.raises(RankAmbiguous):
        effective_index(system, ginv, tol=1e-8)


def test_invertibility_equivalence():
    checked = 0
    for seed in range(200):
        rng = _rng(10_000 + seed)
        n = int(rng.integers(3, 9))
        if seed % 2 == 0:
            p = _random_complex(rng, (n, n))
            from grushinlab.pseudoinverse import canonical_borders

            k = int(rng.integers(1, 3))
            rm = np.linalg.qr(_random_complex(rng, (n, k)))[0]
            rp = np.linalg.qr(_random_complex(rng, (n, k)))[0].conj().T
        else:
            r = int(rng.integers(1, n))
            p = _random_complex(rng, (n, r)) @ _random_complex(rng, (r, n))
            from grushinlab.pseudoinverse import canonical_borders

            cb = canonical_borders(p)
            rm, rp = cb.rminus, cb.rplus
        system = assemble(p, rm, rp)
        try:
            ginv = invert_system(system)
        except IllPosed:
            continue
        checked += 1
        p_invertible = np.linalg.svd(p, compute_uv=False)[-1] > 1e-8 * spectral_norm(p)
        emp = ginv.e_minus_plus
        if emp.size == 0:
            e_invertible = True
        else:
            se = np.linalg.svd(emp, compute_uv=False)
            e_invertible = se[-1] > 1e-8 * max(1.0, se[0])
        assert p_invertible == e_invertible
    assert checked >= 150


def test_transfer_same_borders_roundtrip():
    rng = _rng(21)
    n, k = 6, 2
    p = _random_complex(rng, (n, n)) + 2.0 * np.eye(n)
    rm = _random_complex(rng, (n, k))
    rp = _random_complex(rng, (k, n))
    ginv = invert_system(assemble(p, rm, rp))
    again = transfer(ginv, rm, rp)
    for blk, ref in (
        (again.e, ginv.e), (again.e_plus, ginv.e_plus),
        (again.e_minus, ginv.e_minus), (again.e_minus_plus, ginv.e_minus_plus),
    ):
        assert spectral_norm(blk - ref) <= 1e-10 * max(1.0, spectral_norm(ref))


def test_transfer_matches_direct_inversion():
    rng = _rng(22)
    n, k = 6, 2
    p = _random_complex(rng, (n, n)) + 2.0 * np.eye(n)
    ginv = invert_system(assemble(p, _random_complex(rng, (n, k)), _random_complex(rng, (k, n))))
    rm_new = _random_complex(rng, (n, k))
    rp_new = _random_complex(rng, (k, n))
    moved = transfer(ginv, rm_new, rp_new)
    direct = invert_system(assemble(p, rm_new, rp_new))
    for blk, ref in (
        (moved.e, direct.e), (moved.e_plus, direct.e_plus),
        (moved.e_minus, direct.e_minus), (moved.e_minus_plus, direct.e_minus_plus),
    ):
        assert spectral_norm(blk - ref) <= 1e-9 * max(1.0, spectral_norm(ref))


def test_transfer_transfer_back():
    rng = _rng(23)
    n, k = 5, 2
    p = _random_complex(rng, (n, n)) + 2.0 * np.eye(n)
    rm = _random_complex(rng, (n, k))
    rp = _random_complex(rng, (k, n))
    ginv = invert_system(assemble(p, rm, rp))
    rm2 = _random_complex(rng, (n, k))
    rp2 = _random_complex(rng, (k, n))
    back = transfer(transfer(ginv, rm2, rp2), rm, rp)
    for blk, ref in (
        (back.e, ginv.e), (back.e_plus, ginv.e_plus),
        (back.e_minus, ginv.e_minus), (back.e_minus_plus, ginv.e_minus_plus),
    ):
        assert spectral_norm(blk - ref) <= 1e-9 * max(1.0, spectral_norm(ref))


def test_transfer_empty_borders_returns_resolvent():
    rng = _rng(24)
    n = 4
    p = _random_complex(rng, (n, n)) + 3.0 * np.eye(n)
    ginv = invert_system(assemble(p, _random_complex(rng, (n, 1)), _random_complex(rng, (1, n))))
    moved = transfer(ginv, np.zeros((n, 0)), np.zeros((0, n)))
    assert spectral_norm(moved.e - np.linalg.inv(p)) <= 1e-9
    assert moved.e_minus_plus.shape == (0, 0)


def test_transfer_monodromy_selfadjoint_border_singular():
    # equal borders f(x) e^{ixz/h} on the circle problem: the transfer matrix
    # determinant is -2 e^{i pi z/h} Re(A e^{-i pi z/h}); pick z at a sign change
    h = 0.5
    nodes = 256
    profile = lambda x: 1.0 + 0.3 * np.cos(x)
    ginv = circle_monodromy_inverse(0.3, h, nodes)
    rm, rp = symmetric_monodromy_borders(profile, 0.3, h, nodes)
    a_disc = complex((rp @ ginv.e @ rm)[0, 0])
    z_star = (np.angle(a_disc) + np.pi / 2.0) * h / np.pi
    ginv_star = circle_monodromy_inverse(z_star, h, nodes)
    rm_s, rp_s = symmetric_monodromy_borders(profile, z_star, h, nodes)
    with pytest.raises(TransferSingular):
        transfer(ginv_star, rm_s, rp_s)
    # away from the bad set the transfer succeeds
    z_ok = z_star + 0.3 * h
    moved = transfer(
        circle_monodromy_inverse(z_ok, h, nodes),
        *symmetric_monodromy_borders(profile, z_ok, h, nodes),
    )
    assert np.all(np.isfinite(moved.e_minus_plus))


def test_iterate_identity_recovers_blocks():
    rng = _rng(31)
    n, k = 5, 2
    p = _random_complex(rng, (n, n)) + 2.0 * np.eye(n)
    ginv = invert_system(assemble(p, _random_complex(rng, (n, k)), _random_complex(rng, (k, n))))
    same = iterate(ginv, np.eye(k), np.eye(k))
    for blk, ref in (
        (same.e, ginv.e), (same.e_plus, ginv.e_plus),
        (same.e_minus, ginv.e_minus), (same.e_minus_plus, ginv.e_minus_plus),
    ):
        assert spectral_norm(blk - ref) <= 1e-10 * max(1.0, spectral_norm(ref))


def test_iterate_matches_direct_inversion():
    rng = _rng(32)
    n, k, v = 6, 3, 2
    p = _random_complex(rng, (n, n)) + 2.0 * np.eye(n)
    rm = _random_complex(rng, (n, k))
    rp = _random_complex(rng, (k, n))
    ginv = invert_system(assemble(p, rm, rp))
    nminus = _random_complex(rng, (k, v))
    nplus = _random_complex(rng, (v, k))
    composed = iterate(ginv, nminus, nplus)
    direct = invert_system(assemble(p, rm @ nminus, nplus @ rp))
    for blk, ref in (
        (composed.e, direct.e), (composed.e_plus, direct.e_plus),
        (composed.e_minus, direct.e_minus), (composed.e_minus_plus, direct.e_minus_plus),
    ):
        assert spectral_norm(blk - ref) <= 1e-9 * max(1.0, spectral_norm(ref))


def test_iterate_scalar_consistency():
    # scalar effective Hamiltonian 2, unit inner borders
    p = np.array([[0.0]], dtype=complex)
    ginv = invert_system(assemble(p, np.ones((1, 1)), np.ones((1, 1))))
    shifted = invert_system(assemble(np.array([[-2.0]], dtype=complex), np.ones((1, 1)), np.ones((1, 1))))
    assert shifted.e_minus_plus[0, 0] == pytest.approx(2.0)
    composed = iterate(shifted, np.eye(1), np.eye(1))
    direct = invert_system(assemble(np.array([[-2.0]], dtype=complex), np.ones((1, 1)), np.ones((1, 1))))
    assert composed.e_minus_plus[0, 0] == pytest.approx(direct.e_minus_plus[0, 0])


def test_iterate_inner_singular():
    p = np.array([[0.0]], dtype=complex)
    ginv = invert_system(assemble(p, np.ones((1, 1)), np.ones((1, 1))))
    assert ginv.e_minus_plus[0, 0] == pytest.approx(0.0)
    with pytest.raises(InnerSingular):
        iterate(ginv, np.zeros((1, 1)), np.zeros((1, 1)))


def test_feshbach_decoupled():
    g = feshbach_effective(np.diag([1.0, 3.0]), Split((0,)), 2.0)
    assert g[0, 0] == pytest.approx(1.0)


def test_feshbach_scalar_formula():
    delta = 0.1
    h = np.array([[1.0, delta], [delta, 3.0]], dtype=complex)
    z = 1.01
    g = feshbach_effective(h, Split((0,)), z)
    assert g[0, 0] == pytest.approx(z - 1.0 - delta**2 / (z - 3.0))


def test_feshbach_winding_counts_multiplicity():
    h = np.array([[1.0, 0.1], [0.1, 3.0]], dtype=complex)
    eig_low = 2.0 - np.sqrt(1.0 + 0.01)
    m = 2048
    ts = 2.0 * np.pi * np.arange(m + 1) / m
    vals = np.array(
        [np.linalg.det(feshbach_effective(h, Split((0,)), eig_low + 0.05 * np.exp(1j * t), cross_check=False))
         for t in ts]
    )
    winding = np.angle(vals[1:] / vals[:-1]).sum() / (2.0 * np.pi)
    assert winding == pytest.approx(1.0, abs=1e-8)


def test_feshbach_complement_singular():
    h = np.diag([1.0, 3.0]).astype(complex)
    with pytest.raises(ComplementSingular):
        feshbach_effective(h, Split((0,)), 3.0)


def test_split_validation():
    with pytest.raises(ValueError):
        Split(())
    with pytest.raises(ValueError):
        Split((0, 0))
    with pytest.raises(ValueError):
        Split((0, 1)).complement(2)


def test_circulant_identity_kernel():
    delta0 = np.zeros(4, complex)
    delta0[0] = 1.0
    _, ginv = circulant_effective(delta0)
    assert spectral_norm(ginv.e_minus_plus - np.eye(4)) <= 1e-10


def test_circulant_shift_kernel_matches_fft():
    delta1 = np.zeros(4, complex)
    delta1[1] = 1.0
    _, ginv = circulant_effective(delta1)
    oracle = np.fft.fft(delta1)
    assert spectral_norm(ginv.e_minus_plus - np.diag(oracle)) <= 1e-10


def test_circulant_random_kernel():
    rng = _rng(77)
    k = _random_complex(rng, 8)
    system, ginv = circulant_effective(k)
    oracle = np.fft.fft(k)
    scale = max(1.0, float(np.abs(oracle).max()))
    assert spectral_norm(ginv.e_minus_plus - np.diag(oracle)) <= 1e-10 * scale
    # invertibility of the convolution iff every transform entry is nonzero
    sigma_min = np.linalg.svd(system.p, compute_uv=False)[-1]
    assert (sigma_min > 1e-10) == bool(np.all(np.abs(oracle) > 1e-10))


def test_circulant_singular_kernel_detected():
    k = np.array([1.0, -1.0, 0.0, 0.0], dtype=complex)  # transform vanishes at mode 0
    system, ginv = circulant_effective(k)
    assert abs(np.diag(ginv.e_minus_plus)[0]) <= 1e-12
    assert np.linalg.svd(system.p, compute_uv=False)[-1] <= 1e-12


def test_dft_convention():
    f = dft_matrix(4)
    assert f[1, 1] == pytest.approx(np.exp(-2j * np.pi / 4))


def test_trace_difference_rate():
    # differentiable two-by-two block family: the central-difference residual of
    # tr B11^{-1} dB11 - tr A22^{-1} dA22 + tr dA B decays at second order
    rng = _rng(55)
    a0 = _random_complex(rng, (6, 6)) + 4.0 * np.eye(6)
    a1 = _random_complex(rng, (6, 6))
    a2 = _random_complex(rng, (6, 6))

    def family(s):
        return a0 + s * a1 + s * s * a2

    def residual(step):
        plus, minus, base = family(step), family(-step), family(0.0)
        d_a = (plus - minus) / (2.0 * step)
        b = np.linalg.inv(base)
        b_plus, b_minus = np.linalg.inv(plus), np.linalg.inv(minus)
        d_b11 = (b_plus[:3, :3] - b_minus[:3, :3]) / (2.0 * step)
        term1 = np.trace(np.linalg.inv(b[:3, :3]) @ d_b11)
        term2 = np.trace(np.linalg.solve(base[3:, 3:], d_a[3:, 3:]))
        term3 = np.trace(d_a @ b)
        return abs(term1 - term2 + term3)

    r1, r2 = residual(1e-2), residual(5e-3)
    rate = np.log2(r1 / r2)
    assert rate == pytest.approx(2.0, abs=0.3)
