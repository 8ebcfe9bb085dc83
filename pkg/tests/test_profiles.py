import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mumprof import profiles
from mumprof.errors import DataError, NoTweets, NormalizationError


def test_mum_examples():
    p = profiles.mum([[1, 0, 0], [0, 1, 0], [0.5, 0.5, 0]], "u")
    np.testing.assert_allclose(p.values, [50, 50, 0], rtol=1e-15)
    assert p.tweet_count == 3 and p.kind == profiles.MUM

    single = profiles.mum([[0.2, 0.3, 0.5]])
    np.testing.assert_allclose(single.values, [20, 30, 50], rtol=1e-14)


def test_mum_hard_assignments_are_exact_counts():
    labels = np.array([0, 2, 2, 1, 2, 0, 2])
    p = profiles.mum(np.eye(3)[labels])
    counts = np.bincount(labels, minlength=3)
    assert p.values.tolist() == (counts / len(labels) * 100).tolist()


def test_mum_errors():
    with pytest.raises(NoTweets):
        profiles.mum(np.zeros((0, 3)))
    with pytest.raises(NormalizationError):
        profiles.mum([[0.5, 0.4], [0.5, 0.5]])


def test_baseline_m_is_column_mean():
    p = profiles.baseline_m([[0.9, 0.1], [0.3, 0.7]], "v")
    np.testing.assert_allclose(p.values, [0.6, 0.4])
    assert p.kind == profiles.BASELINE_M


_rows = st.integers(1, 30).flatmap(lambda n: arrays(np.float64, (n, 4), elements=st.floats(0.01, 1.0)))


@settings(max_examples=60)
@given(_rows)
def test_mum_sums_to_hundred(raw):
    rows = raw / raw.sum(axis=1, keepdims=True)
    p = profiles.mum(rows)
    assert p.values.sum() == pytest.approx(100.0, abs=1e-6)
    assert np.all(p.values >= 0)
    # duplicating every tweet leaves the percentages unchanged
    np.testing.assert_allclose(profiles.mum(np.vstack([rows, rows])).values, p.values, rtol=1e-12)


def test_build_profiles_groups_and_skips():
    values = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    got, skipped = profiles.build_profiles(values, ["b", "a", "b"], all_users=["a", "b", "c", "c"])
    assert [p.user_id for p in got] == ["b", "a"]
    np.testing.assert_array_equal(got[0].values, [100, 0])
    assert got[0].tweet_count == 2
    assert skipped == ["c"]
    with pytest.raises(DataError):
        profiles.build_profiles(values, ["a"])


def test_jsonl_round_trip(tmp_path):
    ps = [profiles.UserProfile("u1", profiles.MUM, np.array([100 / 3, 200 / 3]), 3)]
    profiles.write_jsonl(ps, tmp_path / "p.jsonl")
    back = profiles.read_jsonl(tmp_path / "p.jsonl")
    assert back[0].user_id == "u1" and back[0].tweet_count == 3
    assert back[0].values.tobytes() == ps[0].values.tobytes()
    assert profiles.profile_matrix(back).shape == (1, 2)
