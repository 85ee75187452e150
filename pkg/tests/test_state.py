"""State construction, padding, and serialization round-trips."""

import numpy as np
import pytest

from bethe_ittn.reference import random_symmetric_state
from bethe_ittn.state import ITTNState, embed_pad, init_product, load_state, save_state
from bethe_ittn.tensor_ops import symmetry_defect


class TestConstruction:
    def test_product_state_components(self):
        s = init_product(3, theta=np.pi / 3)
        assert (s.q, s.D, s.d) == (3, 1, 2)
        assert s.tensors[0].shape == (1, 1, 1)
        assert s.tensors[0][0, 0, 0] == pytest.approx(np.cos(np.pi / 6))
        assert s.tensors[1][0, 0, 0] == pytest.approx(np.sin(np.pi / 6))

    def test_wrong_tensor_count_rejected(self):
        a = np.ones((2, 2, 2))
        with pytest.raises(ValueError):
            ITTNState(q=3, D=2, tensors=(a,))

    def test_wrong_shape_rejected(self):
        a = np.ones((2, 2))
        with pytest.raises(ValueError):
            ITTNState(q=3, D=2, tensors=(a, a))

    def test_asymmetric_tensor_rejected(self):
        a = np.zeros((2, 2, 2))
        a[0, 1, 1] = 1.0
        a[1, 1, 0] = -1.0
        with pytest.raises(ValueError):
            ITTNState(q=3, D=2, tensors=(a, np.zeros((2, 2, 2))))

    def test_nonfinite_rejected(self):
        a = np.full((2, 2), np.nan)
        with pytest.raises(ValueError):
            ITTNState(q=2, D=2, tensors=(a, a))

    def test_all_zero_rejected(self):
        a = np.zeros((2, 2, 2))
        with pytest.raises(ValueError):
            ITTNState(q=3, D=2, tensors=(a, a))

    def test_tensors_immutable(self):
        s = random_symmetric_state(3, 2, seed=0)
        with pytest.raises((ValueError, RuntimeError)):
            s.tensors[0][0, 0, 0] = 5.0


class TestEmbedPad:
    def test_padding_preserves_block(self):
        s = random_symmetric_state(3, 2, seed=1)
        big = embed_pad(s, 4)
        assert big.D == 4
        for a_small, a_big in zip(s.tensors, big.tensors):
            np.testing.assert_array_equal(a_big[:2, :2, :2], a_small)
            assert np.all(a_big[2:] == 0.0)

    def test_noise_keeps_symmetry(self):
        s = random_symmetric_state(3, 2, seed=2)
        big = embed_pad(s, 3, noise=1e-3, seed=5)
        for a in big.tensors:
            assert symmetry_defect(a) < 1e-12

    def test_noise_is_seeded(self):
        s = random_symmetric_state(3, 2, seed=3)
        b1 = embed_pad(s, 3, noise=1e-3, seed=7)
        b2 = embed_pad(s, 3, noise=1e-3, seed=7)
        b3 = embed_pad(s, 3, noise=1e-3, seed=8)
        for t1, t2 in zip(b1.tensors, b2.tensors):
            np.testing.assert_array_equal(t1, t2)
        assert any(not np.array_equal(t1, t3) for t1, t3 in zip(b1.tensors, b3.tensors))

    def test_shrinking_rejected(self):
        s = random_symmetric_state(3, 3, seed=4)
        with pytest.raises(ValueError):
            embed_pad(s, 2)


class TestSerialization:
    @pytest.mark.parametrize("q,D", [(2, 1), (3, 2), (4, 3)])
    def test_round_trip_bit_exact(self, q, D, tmp_path):
        s = random_symmetric_state(q, D, seed=11)
        path = tmp_path / "state.txt"
        save_state(s, path)
        loaded = load_state(path)
        assert (loaded.q, loaded.D, loaded.d) == (s.q, s.D, s.d)
        for a, b in zip(s.tensors, loaded.tensors):
            # bit-exact: repr round-trips doubles losslessly
            assert np.array_equal(a, b)

    def test_awkward_values_round_trip(self, tmp_path):
        # denormal-adjacent and max-precision values exercise the float codec
        a = np.full((1, 1), 1.0) + np.array([[2.0 ** -52]])
        vals = [a * (1.0 / 3.0), a * 1e-300, a * np.pi]
        s = ITTNState(q=2, D=1, tensors=(vals[0] + vals[1], vals[2]))
        path = tmp_path / "state.txt"
        save_state(s, path)
        loaded = load_state(path)
        for x, y in zip(s.tensors, loaded.tensors):
            assert np.array_equal(x, y)

    def test_corrupt_header_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("some other file\n1 2 3\n")
        with pytest.raises(ValueError):
            load_state(path)

    def test_truncated_file_rejected(self, tmp_path):
        s = random_symmetric_state(3, 2, seed=12)
        path = tmp_path / "state.txt"
        save_state(s, path)
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(ValueError):
            load_state(path)
