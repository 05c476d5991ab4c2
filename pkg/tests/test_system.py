import numpy as np
import pytest

from oscillant.catalog import kg_equal, three_wave
from oscillant.numeric import InputError
from oscillant.system import BilinearMap, SystemSpec, load_spec, save_spec, spec_from_dict, spec_to_dict


def test_skew_symmetry_enforced():
    with pytest.raises(InputError):
        SystemSpec("bad", 2, 1, np.array([[0.0, 1.0], [1.0, 0.0]]),
                   (np.eye(2),), BilinearMap(2, ()))


def test_transport_symmetry_enforced():
    with pytest.raises(InputError):
        SystemSpec("bad", 2, 1, np.zeros((2, 2)),
                   (np.array([[0.0, 1.0], [-1.0, 0.0]]),), BilinearMap(2, ()))


def test_triplet_index_range():
    with pytest.raises(InputError):
        BilinearMap(2, ((0, 0, 2, 1.0),))


def test_bilinear_eval_and_symmetrized():
    B = BilinearMap(3, ((0, 1, 2, 2.0), (2, 0, 0, -1.0)))
    u = np.array([1.0, 2.0, 3.0])
    v = np.array([0.5, -1.0, 4.0])
    out = B(u, v)
    assert out[0] == 2.0 * u[1] * v[2]
    assert out[2] == -1.0 * u[0] * v[0]
    M = B.symmetrized(u)
    w = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(M @ w, B(u, w) + B(w, u), atol=1e-14)


def test_scaled_bilinear():
    B = three_wave().B
    u = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(B.scaled(2.5)(u, u), 2.5 * B(u, u))


def test_roundtrip_bit_identical(tmp_path):
    spec = kg_equal(omega0=np.pi / 3, theta0=0.123456789012345)
    path = tmp_path / "sys.json"
    save_spec(spec, str(path))
    back = load_spec(str(path))
    assert back.name == spec.name and back.N == spec.N and back.d == spec.d
    assert np.array_equal(back.A0, spec.A0)
    for a, b in zip(back.Aj, spec.Aj):
        assert np.array_equal(a, b)
    assert back.B.triplets == spec.B.triplets
    assert back.params["theta0"] == spec.params["theta0"]
    # a second emit is byte-identical
    path2 = tmp_path / "sys2.json"
    save_spec(back, str(path2))
    assert path.read_bytes() == path2.read_bytes()


def test_dict_roundtrip_preserves_awkward_floats():
    spec = three_wave(c=(1 / 3, np.nextafter(0.5, 1.0), -0.5), b=(0.1, 1e-17, 2.0))
    back = spec_from_dict(spec_to_dict(spec))
    for a, b in zip(back.Aj, spec.Aj):
        assert np.array_equal(a, b)
    assert back.B.triplets == spec.B.triplets
