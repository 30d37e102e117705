import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectraladapt.core import (H1, HMINUS1, SpectralVector, ball_indices,
                                ball_offsets, mode_key, scaling, zero_vector)


def vec(entries, d=1, tag=HMINUS1):
    return SpectralVector(entries, d, tag)


class TestNorm:
    def test_single_entry_modulus_three(self):
        assert vec({(0,): 3.0}).norm() == 3.0

    def test_empty(self):
        assert zero_vector(1).norm() == 0.0

    def test_three_four_five(self):
        v = vec({(0,): 3.0, (1,): 4.0j})
        assert v.norm() == pytest.approx(5.0, rel=1e-15)


class TestProject:
    def test_keeps_selected(self):
        v = vec({(-1,): 1.0, (0,): 2.0, (1,): 3.0})
        p = v.project({(0,)})
        assert p.entries == {(0,): 2.0}

    def test_superset_is_identity(self):
        v = vec({(-1,): 1.0, (2,): 1.0j})
        assert v.project({(-1,), (2,), (5,)}) == v

    def test_empty_set_gives_zero(self):
        v = vec({(3,): 1.0})
        assert len(v.project(frozenset())) == 0

    def test_pythagoras(self):
        v = vec({(k,): (k + 1) * 1.0 for k in range(6)})
        lam = {(0,), (3,), (5,)}
        p = v.project(lam)
        assert (v - p).norm() ** 2 + p.norm() ** 2 == pytest.approx(
            v.norm() ** 2, rel=1e-14)

    def test_idempotent_exact(self):
        v = vec({(k,): 1.0 / (k + 1) for k in range(9)})
        lam = frozenset({(1,), (4,)})
        assert v.project(lam).project(lam) == v.project(lam)


class TestRearrange:
    def test_simple_order(self):
        v = vec({(0,): 0.1, (1,): 0.5, (2,): 0.3})
        assert [k for k, _ in v.rearrange()] == [(1,), (2,), (0,)]

    def test_ties_broken_by_mode_order(self):
        v = vec({(2,): 1.0, (-1,): 1.0, (0,): 1.0, (1,): 1.0})
        assert [k for k, _ in v.rearrange()] == [(0,), (-1,), (1,), (2,)]

    def test_gap_vector_rearranges_to_plain_law(self):
        # spikes with gaps of size 2p keep their order by magnitude
        p, eta, n_max = 4, 0.7, 40
        v = vec({(2 * p * (n - 1),): math.exp(-eta * n)
                 for n in range(1, n_max + 1)})
        expected = [math.exp(-eta * n) for n in range(1, n_max + 1)]
        assert [m for _, m in v.rearrange()] == expected

    def test_moduli_multiset_preserved(self):
        rng = np.random.default_rng(7)
        vals = rng.normal(size=30) + 1j * rng.normal(size=30)
        v = vec({(k,): z for k, z in enumerate(vals)})
        assert sorted(m for _, m in v.rearrange()) == sorted(
            abs(z) for z in vals)


small_vectors = st.dictionaries(
    st.integers(-40, 40).map(lambda k: (k,)),
    st.complex_numbers(min_magnitude=1e-6, max_magnitude=1e6,
                       allow_nan=False, allow_infinity=False),
    max_size=25)


@settings(max_examples=60, deadline=None)
@given(small_vectors, st.sets(st.integers(-40, 40).map(lambda k: (k,))),
       st.sets(st.integers(-40, 40).map(lambda k: (k,))))
def test_parseval_additivity(entries, lam1, lam2):
    v = vec(entries)
    lam2 = lam2 - lam1
    p1 = v.project(lam1).norm() ** 2
    p2 = v.project(lam2).norm() ** 2
    both = v.project(lam1 | lam2).norm() ** 2
    assert p1 + p2 == pytest.approx(both, rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(small_vectors)
def test_rearrange_is_sorted_permutation(entries):
    v = vec(entries)
    mods = [m for _, m in v.rearrange()]
    assert mods == sorted(mods, reverse=True)
    assert sorted(mods) == sorted(abs(z) for z in v.entries.values())


class TestConstruction:
    def test_zero_entries_dropped(self):
        assert len(vec({(0,): 0.0, (1,): 1.0})) == 1

    def test_drop_tolerance_configurable(self):
        v = SpectralVector({(0,): 1e-12, (1,): 1.0}, 1, H1, drop_tol=1e-10)
        assert (0,) not in v.entries

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            SpectralVector({(0, 0): 1.0}, 1, H1)

    def test_bad_tag(self):
        with pytest.raises(ValueError):
            SpectralVector({}, 1, "L2")

    def test_arithmetic_requires_matching_tags(self):
        with pytest.raises(ValueError):
            vec({(0,): 1.0}, tag=H1) + vec({(0,): 1.0}, tag=HMINUS1)


class TestSerialization:
    def test_round_trip(self):
        v = SpectralVector({(3, -2): 1.5 - 0.25j, (0, 0): 2.0}, 2, H1)
        assert SpectralVector.from_text(v.to_text()) == v

    def test_header_format(self):
        v = vec({(1,): 1.0})
        assert v.to_text().splitlines()[0] == "d=1 normalization=Hminus1"

    def test_file_round_trip(self, tmp_path):
        v = vec({(k,): complex(k, -k) for k in range(1, 5)})
        path = tmp_path / "v.vec"
        v.save(path)
        assert SpectralVector.load(path) == v

    def test_malformed_header(self):
        with pytest.raises(ValueError):
            SpectralVector.from_text("dim=1\n0 1.0 0.0\n")


class TestModeHelpers:
    def test_scaling(self):
        assert scaling((0,)) == 1.0
        assert scaling((2, 2)) == pytest.approx(3.0)

    def test_mode_key_orders_by_norm_then_lex(self):
        modes = [(1, 1), (0, 1), (-1, 0), (0, 0)]
        assert sorted(modes, key=mode_key) == [(0, 0), (-1, 0), (0, 1), (1, 1)]

    def test_ball_2d_radius_one_has_five_points(self):
        assert len(ball_indices(2, 1)) == 5

    def test_ball_1d(self):
        assert ball_offsets(1, 2) == ((0,), (-1,), (1,), (-2,), (2,))
