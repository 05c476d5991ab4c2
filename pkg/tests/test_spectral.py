import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscillant.catalog import (kg_equal, kg_lambda_fast, kg_lambda_slow,
                               mll_asymptotic_slopes, three_wave)
from oscillant.numeric import InputError
from oscillant.spectral import (assemble_symbol, asymptotic_slopes, eigendecompose_field,
                                uniform_grid)
from oscillant.system import BilinearMap, SystemSpec

from conftest import assert_close


def test_symbol_three_wave_diagonal():
    spec = three_wave(c=(1.0, 0.5, -0.5))
    H = assemble_symbol(spec, [2.0])
    np.testing.assert_allclose(H, np.diag([2.0, 1.0, -1.0]), atol=1e-15)


def test_symbol_kg_at_zero_is_rotation_block():
    spec = kg_equal(omega0=1.0)
    H = assemble_symbol(spec, [0.0])
    # only the +-omega0 entries of the rotation term survive at xi = 0
    expect = spec.A0 / 1j
    np.testing.assert_allclose(H, expect, atol=1e-15)
    assert abs(H[1, 2] + 1j) < 1e-15 and abs(H[2, 1] - 1j) < 1e-15


def test_symbol_zero_everything():
    spec = three_wave(c=(0.0, 0.0, 0.0))
    np.testing.assert_allclose(assemble_symbol(spec, [0.0]), np.zeros((3, 3)), atol=0)


def test_symbol_hermitian_and_dimension_check(kg_analysis):
    spec = kg_analysis.spec
    H = assemble_symbol(spec, [0.7])
    assert np.abs(H - H.conj().T).max() < 1e-14
    with pytest.raises(InputError):
        assemble_symbol(spec, [0.7, 0.3])


def test_field_invariants(kg_analysis):
    field = kg_analysis.field
    spec = kg_analysis.spec
    rng = np.random.default_rng(0)
    idx = rng.choice(len(field.points), size=60, replace=False)
    for m in idx:
        H = assemble_symbol(spec, field.points[m])
        scale = 1.0 + np.abs(H).max()
        rec = np.einsum("j,jkl->kl", field.lambdas[m], field.projectors[m])
        assert np.abs(rec - H).max() <= 1e-10 * scale
        total = np.zeros((spec.N, spec.N), dtype=complex)
        for j in range(field.J):
            P = field.projectors[m, j]
            assert np.abs(P @ P - P).max() <= 1e-10
            assert np.abs(P - P.conj().T).max() <= 1e-10
            for i in range(j):
                assert np.abs(field.projectors[m, i] @ P).max() <= 1e-10
            total += P
        assert np.abs(total - np.eye(spec.N)).max() <= 1e-10


def test_branch_lipschitz(kg_analysis):
    field = kg_analysis.field
    L = field.spec.transport_norm + 1.0
    dxi = np.diff(field.axes[0])
    dlam = np.abs(np.diff(field.lambdas, axis=0))
    assert np.all(dlam <= L * dxi[:, None] + 1e-12)


def test_spectrum_negation_symmetry(kg_analysis, kg_branches):
    # lambda_4 = -lambda_1 and lambda_3 = -lambda_2 pointwise
    field = kg_analysis.field
    bm = kg_branches
    assert_close(field.lambdas[:, bm[4]], -field.lambdas[:, bm[1]], 1e-10, "fast pair")
    assert_close(field.lambdas[:, bm[3]], -field.lambdas[:, bm[2]], 1e-10, "slow pair")
    assert_close(field.lambdas[:, bm[5]], 0.0, 1e-10, "null branch")


def test_branch_tracking_through_crossing():
    # fast and slow branches cross at xi = 0; tracked values must match the
    # closed forms across a grid straddling the crossing
    spec = kg_equal(omega0=1.0, theta0=0.5)
    field = eigendecompose_field(spec, uniform_grid((-0.5, 0.5), 401))
    from oscillant.catalog import kg_branch_map
    bm = kg_branch_map(spec, field)
    xs = field.axes[0]
    assert_close(field.lambdas[:, bm[1]], kg_lambda_fast(spec, xs[:, None]), 1e-8, "fast")
    assert_close(field.lambdas[:, bm[2]], kg_lambda_slow(spec, xs[:, None]), 1e-8, "slow")


def test_kg_eigenvalues_closed_form(kg_analysis, kg_branches):
    lams, _ = kg_analysis.field.eigensystem_at([1.0])
    assert_close(lams[kg_branches[1]], np.sqrt(2.0), 1e-12, "fast at 1")
    assert_close(lams[kg_branches[2]], np.sqrt(1.25), 1e-12, "slow at 1")
    lam0, _ = kg_analysis.field.eigensystem_at([0.0])
    assert_close(sorted(lam0), [-1.0, -1.0, 0.0, 1.0, 1.0], 1e-12, "crossing values")


def test_three_wave_branches_linear(three_wave_analysis):
    an = three_wave_analysis()
    xs = an.field.axes[0]
    for mode, c in ((1, 1.0), (2, 0.5), (3, -0.5)):
        from oscillant.catalog import three_wave_branch_map
        bm = three_wave_branch_map(an.spec, an.field)
        assert_close(an.field.lambdas[:, bm[mode]], c * xs, 1e-12, f"mode {mode}")


def test_asymptotic_slopes_kg(kg_analysis):
    radii = np.array([100.0, 200.0, 400.0])
    slopes = asymptotic_slopes(kg_analysis.spec, [1.0], radii, field=kg_analysis.field)
    assert_close(sorted(slopes.c), [-1.0, -0.5, 0.0, 0.5, 1.0], 1e-8, "kg slopes")
    # residual decays like 1/r
    finite = np.isfinite(slopes.residual_decay)
    assert np.all(slopes.residual_decay[finite] < -0.8)


def test_asymptotic_slopes_three_wave(three_wave_analysis):
    an = three_wave_analysis()
    slopes = asymptotic_slopes(an.spec, [1.0], [100.0, 200.0], field=an.field)
    assert_close(sorted(slopes.c), [-0.5, 0.5, 1.0], 1e-12, "exact linear slopes")


def test_asymptotic_slopes_validation(kg_analysis):
    with pytest.raises(InputError):
        asymptotic_slopes(kg_analysis.spec, [2.0], [100.0, 200.0])
    with pytest.raises(InputError):
        asymptotic_slopes(kg_analysis.spec, [1.0], [10.0, 50.0])  # below 100 x radius(A0)


def test_mll_slopes_coincide():
    # three branches are exactly flat, and the +-1 slopes come in pairs whose
    # finite-radius split shrinks like 1/r: the asymptotic branches coincide
    slopes = np.sort(mll_asymptotic_slopes(1.0))
    assert np.min(np.diff(slopes)) < 1e-8
    assert np.sum(np.abs(slopes - 1.0) < 0.01) >= 2
    assert np.sum(np.abs(slopes + 1.0) < 0.01) >= 2
    gap = lambda radii: np.max(np.abs(np.sort(mll_asymptotic_slopes(1.0, radii)) - np.array(
        [-1, -1, 0, 0, 0, 0, 0, 1, 1])))
    assert gap((2000.0, 4000.0)) < 0.12 * gap((200.0, 400.0))


def _random_system(seed, N, d=1):
    rng = np.random.default_rng(seed)
    A0 = rng.normal(size=(N, N))
    A0 = A0 - A0.T
    Aj = []
    for _ in range(d):
        a = rng.normal(size=(N, N))
        Aj.append((a + a.T) / 2)
    return SystemSpec(f"rand{seed}", N, d, A0, tuple(Aj), BilinearMap(N, ()))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), N=st.integers(2, 5))
def test_field_invariants_random_systems(seed, N):
    spec = _random_system(seed, N)
    field = eigendecompose_field(spec, uniform_grid((-3.0, 3.0), 101))
    rng = np.random.default_rng(seed)
    for m in rng.choice(101, size=8, replace=False):
        H = assemble_symbol(spec, field.points[m])
        scale = 1.0 + np.abs(H).max()
        rec = np.einsum("j,jkl->kl", field.lambdas[m], field.projectors[m])
        assert np.abs(rec - H).max() <= 1e-10 * scale
        total = field.projectors[m].sum(axis=0)
        assert np.abs(total - np.eye(N)).max() <= 1e-10
    L = spec.transport_norm + 1.0
    dlam = np.abs(np.diff(field.lambdas, axis=0))
    assert np.all(dlam <= L * np.diff(field.axes[0])[:, None] + 1e-12)


def test_2d_field_smoke():
    spec = kg_equal(d=2)
    field = eigendecompose_field(spec, uniform_grid(((-2.0, 2.0), (-2.0, 2.0)), (41, 41)))
    assert field.J == 5
    assert field.multiplicities.sum() == spec.N
    lams, projs = field.eigensystem_at([0.3, -0.7])
    H = assemble_symbol(spec, [0.3, -0.7])
    rec = np.einsum("j,jkl->kl", lams, projs)
    assert np.abs(rec - H).max() <= 1e-10 * (1 + np.abs(H).max())
