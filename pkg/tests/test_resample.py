import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpboot import seeding
from lpboot.errors import InvalidInputError, InvalidSpecError
from lpboot.resample import ResampleScheme, default_block_length, draw_innovations, draw_weights


def gen(*keys):
    return seeding.generator(2024, *keys)


class TestSchemes:
    def test_unknown_kind(self):
        with pytest.raises(InvalidSpecError):
            ResampleScheme("sieve")

    def test_bad_block_length(self):
        with pytest.raises(InvalidSpecError):
            ResampleScheme("bwb", 0)

    @pytest.mark.parametrize("H,rule,expected", [(10, "H", 10), (10, "1.5H", 15), (1, "H", 1), (1, "1.5H", 1), (5, "1.5H", 7)])
    def test_default_block_length(self, H, rule, expected):
        assert default_block_length(H, rule) == expected


class TestBlockWild:
    def test_single_block_flips_sign(self, rng):
        e = rng.standard_normal(12)
        out = draw_innovations(e, 12, ResampleScheme("bwb", 12), gen(1))
        assert np.array_equal(out, e) or np.array_equal(out, -e)

    def test_blocks_of_four(self, rng):
        e = rng.standard_normal(10) + 3.0
        out = draw_innovations(e, 10, ResampleScheme("bwb", 4), gen(2))
        w = out / e
        for block in (slice(0, 4), slice(4, 8), slice(8, 10)):
            assert np.unique(w[block]).size == 1

    def test_length_one_is_wild(self, rng):
        e = rng.standard_normal(50)
        a = draw_innovations(e, 80, ResampleScheme("bwb", 1), gen(3))
        b = draw_innovations(e, 80, ResampleScheme("wild"), gen(3))
        np.testing.assert_array_equal(a, b)

    def test_cyclic_magnitudes(self, rng):
        e = rng.standard_normal(7)
        out = draw_innovations(e, 30, ResampleScheme("bwb", 3), gen(4))
        np.testing.assert_array_equal(np.abs(out), np.abs(e[np.arange(30) % 7]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 200), st.integers(1, 50), st.sampled_from(["rademacher", "normal"]))
    def test_constancy_property(self, l, L, n, law):
        w = draw_innovations(np.ones(n), L, ResampleScheme("bwb", l, law), gen(l, L, n))
        for start in range(0, L, l):
            assert np.all(w[start : start + l] == w[start])

    def test_prefix_stable(self, rng):
        e = rng.standard_normal(40)
        short = draw_innovations(e, 60, ResampleScheme("bwb", 5), gen(5))
        long = draw_innovations(e, 90, ResampleScheme("bwb", 5), gen(5))
        np.testing.assert_array_equal(short, long[:60])


class TestOtherSchemes:
    def test_iid_members(self, rng):
        e = rng.standard_normal(30)
        out = draw_innovations(e, 100, ResampleScheme("iid"), gen(6))
        assert np.isin(out, e).all()

    def test_moving_blocks_are_contiguous(self):
        e = np.arange(50.0)
        out = draw_innovations(e, 23, ResampleScheme("bb", 5), gen(7))
        for start in range(0, 20, 5):
            np.testing.assert_array_equal(np.diff(out[start : start + 5]), 1.0)

    def test_multivariate_rows_move_together(self, rng):
        e = rng.standard_normal((20, 2))
        out = draw_innovations(e, 35, ResampleScheme("bwb", 4), gen(8))
        ratio = out / e[np.arange(35) % 20]
        np.testing.assert_array_equal(ratio[:, 0], ratio[:, 1])

    def test_empty_residuals(self):
        with pytest.raises(InvalidInputError):
            draw_innovations(np.zeros(0), 10, ResampleScheme("iid"), gen(9))

    def test_deterministic(self, rng):
        e = rng.standard_normal(30)
        a = draw_innovations(e, 40, ResampleScheme("iid"), gen(10))
        b = draw_innovations(e, 40, ResampleScheme("iid"), gen(10))
        np.testing.assert_array_equal(a, b)
        c = draw_innovations(e, 40, ResampleScheme("iid"), gen(11))
        assert not np.array_equal(a, c)


@pytest.mark.parametrize("law", ["rademacher", "normal"])
def test_weight_moments(law):
    w = draw_weights(1_000_000, law, gen(12))
    assert abs(w.mean()) < 0.005
    assert abs(w.var() - 1) < 0.01
