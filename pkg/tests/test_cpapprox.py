import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coventropy import (
    CellSpace,
    Cover,
    StructuralError,
    ToleranceExceededError,
    approx_error,
    build_pou_system,
    constant_one,
    indicator,
    matrix_shift_qd,
    matrix_shift_series,
    minimal_coloured_refinement,
    path_space,
    qd_from_decomposable,
    uniform_trace,
)
from coventropy.cpapprox import (
    FunctionSample,
    TraceVector,
    direct_sum_systems,
    operator_norm,
)
from coventropy.errors import DepthExhaustedError, FamilySizeError
from oracles import brute_reconstruction_error


def pou_for(space, elements):
    ref = minimal_coloured_refinement(Cover(space, elements)).refinement
    return build_pou_system(ref)


def path4_system():
    space = path_space(4)
    return space, pou_for(
        space, (frozenset({0, 1}), frozenset({1, 2}), frozenset({2, 3}))
    )


# ----------------------------------------------------------------- weights


def test_weights_columns_sum_to_one():
    space, system = path4_system()
    sums = np.asarray(system.weights.sum(axis=0)).ravel()
    assert np.allclose(sums, 1.0, atol=1e-12)


def test_weight_supports_match_pieces():
    space, system = path4_system()
    dense = system.weights.toarray()
    for j, piece in enumerate(system.pieces):
        support = {c for c in range(space.n_cells) if dense[j, c] > 0}
        assert support == set(piece)


def test_sample_points_live_in_pieces():
    space, system = path4_system()
    for x, piece in zip(system.sample_points, system.pieces):
        assert x in piece


def test_rank_counts_pieces_and_blocks():
    space, system = path4_system()
    assert system.rank == len(system.pieces)
    assert sum(system.blocks) == system.rank


def test_trace_vector_must_normalise():
    with pytest.raises(StructuralError):
        TraceVector(np.array([0.5, 0.2]))
    with pytest.raises(StructuralError):
        TraceVector(np.array([1.5, -0.5]))


# ------------------------------------------------------------ approx error


def test_reconstruction_error_against_oracle():
    space, system = path4_system()
    values = np.array([0.3, -1.2, 0.8, 2.0])
    f = FunctionSample(values, name="probe")
    expected = brute_reconstruction_error(
        system.pieces, system.sample_points, values.tolist()
    )
    assert approx_error(system, [f]) == pytest.approx(expected, abs=1e-12)


def test_piece_indicators_reconstruct_exactly():
    space, system = path4_system()
    fs = [indicator(space, p, f"p{i}") for i, p in enumerate(system.pieces)]
    assert approx_error(system, fs) == pytest.approx(0.0, abs=1e-15)


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_error_bounded_by_oscillation(vals):
    space, system = path4_system()
    values = np.asarray(vals)
    worst_osc = max(
        float(values[list(p)].max() - values[list(p)].min()) for p in system.pieces
    )
    f = FunctionSample(values, name="h")
    assert approx_error(system, [f]) <= worst_osc + 1e-12


# ------------------------------------------------------------ qd conversion


def test_qd_rank_preserved_and_defects_bounded():
    space, system = path4_system()
    fs = [indicator(space, p, f"p{i}") for i, p in enumerate(system.pieces)]
    eps = 0.3
    qd = qd_from_decomposable(system, uniform_trace(space), fs, eps)
    assert qd.rank == system.rank
    assert qd.mult_defect <= eps
    assert qd.trace_defect <= 2 * eps / (3 - eps)


def test_qd_trace_is_probability():
    space, system = path4_system()
    qd = qd_from_decomposable(system, uniform_trace(space), [], 0.4)
    assert qd.trace_on_pieces.sum() == pytest.approx(1.0, abs=1e-12)
    assert (qd.trace_on_pieces >= 0).all()


def test_qd_refuses_oscillating_function():
    space, system = path4_system()
    wiggle = FunctionSample(np.array([0.0, 1.0, 0.0, 1.0]), name="osc")
    with pytest.raises(ToleranceExceededError) as exc:
        qd_from_decomposable(system, uniform_trace(space), [wiggle], 0.3)
    assert exc.value.measured > 0.1


def test_qd_rejects_nonpositive_epsilon():
    space, system = path4_system()
    with pytest.raises(StructuralError):
        qd_from_decomposable(system, uniform_trace(space), [], 0.0)


# ------------------------------------------------------------- direct sums


def test_direct_sum_ranks_add():
    sa, a = path4_system()
    sb = path_space(3)
    b = pou_for(sb, (frozenset({0, 1}), frozenset({2})))
    summed = direct_sum_systems(a, b)
    assert summed.rank == a.rank + b.rank
    assert len(summed.blocks) == max(len(a.blocks), len(b.blocks))
    sums = np.asarray(summed.weights.sum(axis=0)).ravel()
    assert np.allclose(sums, 1.0, atol=1e-12)


def test_direct_sum_requires_distinct_spaces():
    space, system = path4_system()
    with pytest.raises(StructuralError):
        direct_sum_systems(system, system)


# ---------------------------------------------------------- operator norms


@given(st.integers(1, 5), st.integers(0, 1000))
def test_operator_norm_matches_numpy(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert operator_norm(m) == pytest.approx(np.linalg.norm(m, 2), abs=1e-8)


def test_operator_norm_zero_matrix():
    assert operator_norm(np.zeros((3, 3))) == 0.0


# ------------------------------------------------------------ matrix shift


def test_matrix_shift_rank_is_power():
    for n in range(1, 5):
        report = matrix_shift_qd(2, n, n)
        assert report.rank == 2 ** n


def test_matrix_shift_defects_vanish():
    reports = matrix_shift_series(2, 5)
    for r in reports:
        assert r.approx_error <= 1e-12
        assert r.mult_defect <= 1e-12
        assert r.trace_defect <= 1e-12


def test_matrix_shift_rank_slope_is_log2():
    reports = matrix_shift_series(2, 6)
    slopes = [math.log(r.rank) / r.truncation for r in reports]
    assert abs(slopes[-1] - math.log(2)) < 1e-9


def test_matrix_shift_degree_exceeding_truncation():
    with pytest.raises(DepthExhaustedError):
        matrix_shift_qd(2, 3, 4)


def test_matrix_shift_dimension_cap():
    with pytest.raises(FamilySizeError):
        matrix_shift_qd(2, 12, 2)
