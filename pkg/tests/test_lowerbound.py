import numpy as np
import pytest
from hypothesis import given, strategies as st

from coventropy import (
    DepthExhaustedError,
    FamilySizeError,
    StructuralError,
    VectorFamily,
    block_shift_map,
    coordinate_family,
    kerr_witness,
    l1_equivalence_constant,
    shifted_family,
)
from coventropy.lowerbound import report_to_json
from oracles import grid_l1_minimum, realized_sign_patterns


def test_family_rejects_non_unit_vectors():
    with pytest.raises(StructuralError):
        VectorFamily("sup", (np.array([0.5, 0.2]),))


def test_family_rejects_unknown_norm():
    with pytest.raises(StructuralError):
        VectorFamily("spectral", (np.array([1.0]),))


def test_single_vector_has_constant_one():
    v = np.array([1.0, -0.3, 0.2])
    report = l1_equivalence_constant(VectorFamily("sup", (v,)))
    assert report.K == pytest.approx(1.0, abs=1e-12)
    assert report.exact


def test_rademacher_pair_is_one_equivalent():
    fam = coordinate_family(2, 1)
    report = l1_equivalence_constant(fam)
    assert report.K == pytest.approx(1.0, abs=1e-12)
    assert report.kerr_bound_factor == pytest.approx(2.0, abs=1e-9)


def test_all_sign_patterns_realized_forces_k_one():
    fam = kerr_witness(3, 2)
    patterns = realized_sign_patterns([v.tolist() for v in fam.vectors])
    assert len(patterns) == 2 ** len(fam)
    report = l1_equivalence_constant(fam)
    assert report.K == pytest.approx(1.0, abs=1e-9)
    assert report.exact


def test_duplicate_vector_flags_infinite():
    v = np.array([1.0, -1.0, 1.0])
    report = l1_equivalence_constant(VectorFamily("sup", (v, v.copy())))
    assert report.infinite
    assert report.kerr_bound_factor == 0.0
    # the witness coefficients annihilate the family
    combo = report.coefficients[0] * v + report.coefficients[1] * v
    assert np.max(np.abs(combo)) < 1e-9


def test_lp_agrees_with_grid_oracle():
    a = np.array([1.0, 0.5])
    b = np.array([-0.5, 1.0])
    report = l1_equivalence_constant(VectorFamily("sup", (a, b)))
    grid = grid_l1_minimum([a.tolist(), b.tolist()], resolution=0.01)
    true_min = 1.0 / report.K
    assert true_min <= grid + 1e-12
    assert true_min >= grid - 2 * 0.01


def test_lp_exact_value_two_vectors():
    # min over the (+,+) orthant of max(|1.5t-0.5|, |1-0.5t|) is 5/8 at t=3/4
    a = np.array([1.0, 0.5])
    b = np.array([-0.5, 1.0])
    report = l1_equivalence_constant(VectorFamily("sup", (a, b)))
    assert report.K == pytest.approx(1.6, abs=1e-9)


def test_sign_flip_invariance():
    rng = np.random.default_rng(5)
    vs = []
    for _ in range(3):
        v = rng.standard_normal(6)
        vs.append(v / np.max(np.abs(v)))
    k1 = l1_equivalence_constant(VectorFamily("sup", tuple(vs))).K
    flipped = (vs[0], -vs[1], vs[2])
    k2 = l1_equivalence_constant(VectorFamily("sup", flipped)).K
    assert k1 == pytest.approx(k2, abs=1e-9)


@given(st.integers(0, 10_000))
def test_random_families_keep_k_at_least_one(seed):
    rng = np.random.default_rng(seed)
    vs = []
    for _ in range(rng.integers(1, 4)):
        v = rng.standard_normal(5)
        vs.append(v / np.max(np.abs(v)))
    report = l1_equivalence_constant(VectorFamily("sup", tuple(vs)))
    # a unit vector on the sphere bounds the minimum by 1
    assert report.K >= 1.0 - 1e-9


def test_family_size_cap():
    rng = np.random.default_rng(0)
    vs = []
    for _ in range(17):
        v = rng.standard_normal(4)
        vs.append(v / np.max(np.abs(v)))
    with pytest.raises(FamilySizeError):
        l1_equivalence_constant(VectorFamily("sup", tuple(vs)))


def test_operator_family_is_heuristic():
    eye = np.eye(2, dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    fam = VectorFamily(
        "operator",
        (eye, x),
        tensor_factors=((eye,), (x,)),
        alphabet=2,
        truncation=1,
    )
    report = l1_equivalence_constant(fam)
    assert not report.exact
    # identity and a reflection: ||c0 I + c1 X|| = |c0| + |c1| = 1 on the sphere
    assert report.K == pytest.approx(1.0, rel=1e-3)


def test_shifted_coordinates_stay_independent():
    base = coordinate_family(2, 3)
    shifted = shifted_family(base, block_shift_map(2, 3), 3)
    assert len(shifted) == 6
    patterns = realized_sign_patterns([v.tolist() for v in shifted.vectors])
    assert len(patterns) == 2 ** 6


def test_shift_beyond_truncation_raises():
    base = coordinate_family(2, 2)
    with pytest.raises(DepthExhaustedError):
        shifted_family(base, block_shift_map(2, 2), 3)


def test_witness_guarantee_is_at_most_two():
    # the construction promises 2-equivalence; the computed constant is 1
    for m, depth in [(2, 2), (3, 2), (2, 3)]:
        report = l1_equivalence_constant(kerr_witness(m, depth))
        assert report.K <= 2.0 + 1e-9
        assert report.complex_upper <= 4.0 + 1e-9


def test_witness_bit_cap():
    with pytest.raises(FamilySizeError):
        kerr_witness(5, 5)


def test_report_json_shape():
    report = l1_equivalence_constant(coordinate_family(2, 1))
    doc = report_to_json(report)
    assert doc["K"] == pytest.approx(1.0)
    assert doc["exact"] is True
    assert len(doc["coefficients"]) == 2
    assert doc["kerr_bound_factor"] == pytest.approx(2.0)
