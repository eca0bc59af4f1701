import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coventropy import (
    DepthExhaustedError,
    StructuralError,
    TransferMatrix,
    cylinder_count,
    cylinder_cover,
    enumerate_words,
    full_shift,
    golden_mean_shift,
    power_system,
    sft_entropy,
)
from coventropy.symbolic import matrix_from_csv, matrix_from_json, matrix_to_json
from oracles import brute_word_count

GOLDEN_RATE = math.log((1 + math.sqrt(5)) / 2)


def test_matrix_rejects_non_binary():
    with pytest.raises(StructuralError):
        TransferMatrix(np.array([[2, 0], [1, 1]]))


def test_matrix_rejects_zero_row():
    with pytest.raises(StructuralError) as exc:
        TransferMatrix(np.array([[0, 0], [1, 1]]))
    assert "row 0" in str(exc.value)


def test_full_shift_counts():
    assert cylinder_count(full_shift(2), 5) == 32
    assert cylinder_count(full_shift(3), 4) == 81


def test_golden_mean_counts_are_fibonacci():
    m = golden_mean_shift()
    assert [cylinder_count(m, n) for n in range(1, 9)] == [2, 3, 5, 8, 13, 21, 34, 55]


def test_depth_one_count_is_alphabet():
    assert cylinder_count(full_shift(7), 1) == 7


@given(st.integers(2, 4), st.integers(1, 6))
def test_counts_match_bruteforce(k, depth):
    m = full_shift(k)
    assert cylinder_count(m, depth) == brute_word_count(m.entries.tolist(), depth)


@given(st.integers(1, 7))
def test_golden_counts_match_bruteforce(depth):
    m = golden_mean_shift()
    assert cylinder_count(m, depth) == brute_word_count(m.entries.tolist(), depth)


def test_entropy_full_shift():
    for k in (2, 3, 4, 5):
        assert abs(sft_entropy(full_shift(k)) - math.log(k)) < 1e-12


def test_entropy_golden_mean():
    assert abs(sft_entropy(golden_mean_shift()) - GOLDEN_RATE) < 1e-12


def test_entropy_permutation_is_exactly_zero():
    cycle = TransferMatrix(np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]]))
    assert sft_entropy(cycle) == 0.0


def test_reducible_matrix_warns():
    reducible = TransferMatrix(np.array([[1, 1], [0, 1]]))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        value = sft_entropy(reducible)
    assert any("reducible" in str(w.message) for w in caught)
    assert value == pytest.approx(0.0, abs=1e-9)


def test_entropy_matches_count_growth():
    # spectral radius against the count ratio at large depth
    m = golden_mean_shift()
    ratio = cylinder_count(m, 40) / cylinder_count(m, 39)
    assert abs(math.log(ratio) - sft_entropy(m)) < 1e-6


def test_power_system_block_counts():
    m = golden_mean_shift()
    p3 = power_system(m, 3)
    assert p3.alphabet == cylinder_count(m, 3)
    # paths of length j in the block system biject with words of length 3j
    assert cylinder_count(p3, 2) == cylinder_count(m, 6)
    assert cylinder_count(p3, 4) == cylinder_count(m, 12)


def test_power_system_entropy_scales():
    m = full_shift(2)
    for k in (2, 3, 4):
        assert abs(sft_entropy(power_system(m, k)) - k * math.log(2)) < 1e-9


def test_word_space_structure():
    ws = cylinder_cover(golden_mean_shift(), 4)
    assert ws.space.n_cells == 8
    assert len(ws.cover.elements) == 2
    assert all(len(img) >= 1 for img in ws.shift.images)
    with pytest.raises(DepthExhaustedError):
        ws.require_depth(5)


def test_word_space_shift_follows_suffix():
    ws = cylinder_cover(golden_mean_shift(), 3)
    idx = {w: i for i, w in enumerate(ws.words)}
    for w in ws.words:
        for img in ws.shift.images[idx[w]]:
            assert ws.words[img][:2] == w[1:]


def test_enumerate_words_lexicographic():
    words = enumerate_words(golden_mean_shift(), 3)
    assert list(words) == sorted(words)
    assert (1, 1) not in {w[:2] for w in words}


def test_matrix_json_roundtrip():
    m = golden_mean_shift()
    assert matrix_from_json(matrix_to_json(m)).entries.tolist() == m.entries.tolist()


def test_matrix_json_alphabet_mismatch():
    doc = matrix_to_json(full_shift(2))
    doc["alphabet"] = 3
    with pytest.raises(StructuralError):
        matrix_from_json(doc)


def test_matrix_csv_parsing():
    m = matrix_from_csv("1,1\n1,0\n")
    assert m.entries.tolist() == [[1, 1], [1, 0]]


def test_matrix_csv_bad_entry_names_line():
    with pytest.raises(StructuralError) as exc:
        matrix_from_csv("1,1\n1,x\n")
    assert "line 2" in str(exc.value)
