"""Finite-rank approximation systems built from coloured refinements.

A coloured refinement yields a partition of unity: piece j gets the weight
function h_j(c) = [c in piece j] / (number of pieces containing c).  The
downward map evaluates functions at one sample point per piece and the
upward map rebuilds them as weighted sums, so the reconstruction error is
bounded by the worst oscillation of a function across a piece.  Colour
classes have disjoint, non-adjacent supports, which is the order-zero
condition in this model; the rank of a system is its number of pieces, the
dimension of a maximal abelian subalgebra of the coordinate algebra.

The same interface covers the matrix-shift model: dense matrices on a
truncated tensor power, where the truncation map is exactly multiplicative
and trace preserving on operands supported inside the truncation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .cellspace import CellSpace, ColouredRefinement, disjoint_union_spaces
from .errors import DepthExhaustedError, FamilySizeError, StructuralError, ToleranceExceededError

_COLUMN_TOL = 1e-12
_NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FunctionSample:
    """A real or complex function on cells, given by its value vector."""

    values: np.ndarray
    name: str = "f"

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1:
            raise StructuralError(f"function {self.name!r} must be a flat value vector")
        if not np.isfinite(v).all():
            raise StructuralError(f"function {self.name!r} has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def constant_one(space: CellSpace) -> FunctionSample:
    return FunctionSample(np.ones(space.n_cells), "1")


def indicator(space: CellSpace, cells, name: str | None = None) -> FunctionSample:
    v = np.zeros(space.n_cells)
    for c in cells:
        v[c] = 1.0
    return FunctionSample(v, name or f"ind{sorted(cells)}")


@dataclass(frozen=True, eq=False)
class TraceVector:
    """A probability mass on cells: nonnegative, total 1 within 1e-12."""

    mass: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.ndim != 1:
            raise StructuralError("trace mass must be a flat vector")
        if (m < 0).any():
            raise StructuralError("trace mass must be nonnegative")
        if abs(float(m.sum()) - 1.0) > _COLUMN_TOL:
            raise StructuralError(f"trace mass sums to {float(m.sum())!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)


def uniform_trace(space: CellSpace) -> TraceVector:
    return TraceVector(np.full(space.n_cells, 1.0 / space.n_cells))


@dataclass(frozen=True, eq=False)
class CpcSystem:
    """A contractive finite-rank approximation system over a cell space.

    weights is the pieces x cells matrix of the partition of unity; blocks
    lists the number of pieces per colour, the direct-sum shape of the
    finite-dimensional target.
    """

    space: CellSpace
    pieces: tuple
    colour_of: tuple
    sample_points: tuple
    weights: sparse.csr_matrix
    blocks: tuple

    def __post_init__(self):
        w = sparse.csr_matrix(self.weights)
        r, n = w.shape
        if r != len(self.pieces) or n != self.space.n_cells:
            raise StructuralError("weight matrix shape must be pieces x cells")
        if (w.data < 0).any():
            raise StructuralError("weights must be nonnegative")
        colsums = np.asarray(w.sum(axis=0)).ravel()
        worst = float(np.max(np.abs(colsums - 1.0))) if n else 0.0
        if worst > _COLUMN_TOL:
            raise StructuralError(f"weight columns must sum to 1 (off by {worst:.3e})")
        coo = w.tocoo()
        for j, c in zip(coo.row, coo.col):
            if int(c) not in self.pieces[j]:
                raise StructuralError("weights must vanish outside their piece (subordination)")
        for j, (p, x) in enumerate(zip(self.pieces, self.sample_points)):
            if x not in p:
                raise StructuralError(f"sample point {x} of piece {j} lies outside the piece")
        # Order-zero rendering: same-colour supports disjoint and non-adjacent.
        by_colour: dict = {}
        for j, col in enumerate(self.colour_of):
            by_colour.setdefault(col, []).append(self.pieces[j])
        neigh = self.space.neighbour_masks
        for col, group in by_colour.items():
            seen = 0
            total = 0
            for p in group:
                pm = 0
                for c in p:
                    pm |= 1 << c
                seen |= pm
                total += len(p)
            if seen.bit_count() != total:
                raise StructuralError(f"colour {col} supports overlap")
            for p in group:
                own = 0
                spread = 0
                for c in p:
                    own |= 1 << c
                    spread |= neigh[c]
                if spread & seen & ~own:
                    raise StructuralError(f"colour {col} supports are adjacent")
        if sum(self.blocks) != r:
            raise StructuralError("blocks must total the number of pieces")
        object.__setattr__(self, "weights", w)

    @property
    def rank(self) -> int:
        return len(self.pieces)


def build_pou_system(refinement: ColouredRefinement) -> CpcSystem:
    """Partition of unity subordinate to the refinement; the sample point of
    a piece is its least cell."""
    space = refinement.cover.space
    n = space.n_cells
    count = np.zeros(n)
    for p in refinement.pieces:
        for c in p:
            count[c] += 1.0
    rows, cols, vals = [], [], []
    for j, p in enumerate(refinement.pieces):
        for c in sorted(p):
            rows.append(j)
            cols.append(c)
            vals.append(1.0 / count[c])
    weights = sparse.csr_matrix((vals, (rows, cols)), shape=(len(refinement.pieces), n))
    max_colour = max(refinement.colour_of) if refinement.colour_of else 0
    blocks = tuple(sum(1 for c in refinement.colour_of if c == col) for col in range(max_colour + 1))
    samples = tuple(min(p) for p in refinement.pieces)
    return CpcSystem(space, refinement.pieces, refinement.colour_of, samples, weights, blocks)


def approx_error(system: CpcSystem, functions: Sequence[FunctionSample]) -> float:
    """Worst reconstruction error max_f max_c |f(c) - sum_j f(x_j) h_j(c)|."""
    samples = np.asarray(system.sample_points, dtype=int)
    worst = 0.0
    for f in functions:
        v = f.values
        if v.shape[0] != system.space.n_cells:
            raise StructuralError(f"function {f.name!r} is not defined on the system's cells")
        recon = system.weights.T @ v[samples]
        worst = max(worst, float(np.max(np.abs(v - recon))))
    return worst


@dataclass(frozen=True, eq=False)
class QdSystem:
    """A quasidiagonal rendering: the system plus an induced trace on the
    finite-dimensional side, with audited multiplicativity and trace
    defects."""

    system: CpcSystem
    trace_on_pieces: np.ndarray
    mult_defect: float
    trace_defect: float
    epsilon: float

    @property
    def rank(self) -> int:
        return self.system.rank


def qd_from_decomposable(
    system: CpcSystem,
    trace: TraceVector,
    functions: Sequence[FunctionSample],
    epsilon: float,
) -> QdSystem:
    """Convert a contractive system into a trace-compatible one.

    Requires the system to reproduce the audited functions (and the constant
    1) within epsilon/3; refuses otherwise, reporting the measured error.
    The induced trace is the weight-averaged mass, normalised; the downward
    map is evaluation at sample points, so the audited multiplicativity
    defect is exactly zero and the trace defect stays below 2*eps/(3-eps),
    which is below eps.
    """
    if not 0 < epsilon:
        raise StructuralError("epsilon must be positive")
    if trace.mass.shape[0] != system.space.n_cells:
        raise StructuralError("trace mass is not defined on the system's cells")
    audited = list(functions) + [constant_one(system.space)]
    measured = approx_error(system, audited)
    if measured > epsilon / 3.0:
        raise ToleranceExceededError(
            f"approximation error {measured:.6e} exceeds epsilon/3 = {epsilon / 3.0:.6e}; "
            "refine the cover before converting",
            measured=measured,
        )
    sigma = system.weights @ trace.mass
    total = float(sigma.sum())
    if not 1.0 - epsilon / 3.0 - _COLUMN_TOL <= total <= 1.0 + _COLUMN_TOL:
        raise StructuralError(f"induced trace mass {total!r} escapes [1 - eps/3, 1]")
    trace_on_pieces = sigma / total
    samples = np.asarray(system.sample_points, dtype=int)

    mult_defect = 0.0
    trace_defect = 0.0
    for f in audited:
        fx = f.values[samples]
        trace_defect = max(trace_defect, abs(float(f.values @ trace.mass) - float(trace_on_pieces @ fx)))
        for g in audited:
            gx = g.values[samples]
            prod = (f.values * g.values)[samples]
            mult_defect = max(mult_defect, float(np.max(np.abs(prod - fx * gx))))
    bound = 2.0 * epsilon / (3.0 - epsilon)
    if trace_defect > bound + 1e-12:
        raise StructuralError(f"trace defect {trace_defect:.6e} exceeds the guaranteed {bound:.6e}")
    return QdSystem(system, trace_on_pieces, mult_defect, trace_defect, epsilon)


def direct_sum_systems(a: CpcSystem, b: CpcSystem) -> CpcSystem:
    """Block-diagonal sum over the disjoint union of the two spaces; ranks
    add colour by colour and the reconstruction error is the worse of the
    two halves."""
    if a.space is b.space:
        raise StructuralError("direct summands must live on disjoint cell spaces")
    space = disjoint_union_spaces(a.space, b.space)
    off = a.space.n_cells
    pieces = tuple(a.pieces) + tuple(frozenset(c + off for c in p) for p in b.pieces)
    colour_of = tuple(a.colour_of) + tuple(b.colour_of)
    samples = tuple(a.sample_points) + tuple(x + off for x in b.sample_points)
    weights = sparse.block_diag((a.weights, b.weights), format="csr")
    n_colours = max(len(a.blocks), len(b.blocks))
    blocks = tuple(
        (a.blocks[i] if i < len(a.blocks) else 0) + (b.blocks[i] if i < len(b.blocks) else 0)
        for i in range(n_colours)
    )
    return CpcSystem(space, pieces, colour_of, samples, weights, blocks)


def operator_norm(m: np.ndarray, tol: float = _NORM_TOL, max_iter: int = 10000) -> float:
    """Largest singular value via power iteration on M*M with a
    deterministic start; falls back to the dense solver if the iteration
    stalls."""
    a = np.asarray(m)
    if a.size == 0:
        return 0.0
    x = np.ones(a.shape[1], dtype=complex)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = a.conj().T @ (a @ x)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        y /= norm
        lam_new = float(np.real(np.vdot(y, a.conj().T @ (a @ y))))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return float(np.sqrt(max(lam_new, 0.0)))
        lam = lam_new
        x = y
    return float(np.linalg.norm(a, 2))


@dataclass(frozen=True, eq=False)
class MatrixShiftReport:
    """Audit of the truncation map on a tensor power of matrices."""

    alphabet: int
    truncation: int
    degree: int
    rank: int
    approx_error: float
    mult_defect: float
    trace_defect: float
    n_audited: int


def _embed_word(factors: Sequence[np.ndarray], alphabet: int, truncation: int, offset: int) -> np.ndarray:
    """Dense matrix of 1^offset (x) factors (x) 1^(rest) on alphabet^truncation."""
    if offset + len(factors) > truncation:
        raise DepthExhaustedError(
            f"a degree-{len(factors)} word shifted by {offset} leaves the {truncation}-fold truncation"
        )
    out = np.eye(alphabet**offset, dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    rest = truncation - offset - len(factors)
    if rest:
        out = np.kron(out, np.eye(alphabet**rest, dtype=complex))
    return out


def random_tensor_word(alphabet: int, degree: int, rng: np.random.Generator) -> tuple:
    """A degree-long tuple of independent contractions."""
    factors = []
    for _ in range(degree):
        f = rng.standard_normal((alphabet, alphabet)) + 1j * rng.standard_normal((alphabet, alphabet))
        factors.append(f / max(operator_norm(f), 1e-30))
    return tuple(factors)


def conditional_expectation(x: np.ndarray, alphabet: int, ambient: int, keep: int) -> np.ndarray:
    """Normalised partial trace onto the first `keep` of `ambient` tensor
    factors, re-embedded with identities: the truncation map of the
    tensor-shift model."""
    if not 0 <= keep <= ambient:
        raise StructuralError(f"cannot keep {keep} of {ambient} tensor factors")
    dk = alphabet**keep
    dr = alphabet ** (ambient - keep)
    a = np.asarray(x, dtype=complex).reshape(dk, dr, dk, dr)
    reduced = np.trace(a, axis1=1, axis2=3) / dr
    return np.kron(reduced, np.eye(dr, dtype=complex))


def matrix_shift_qd(
    alphabet: int,
    truncation: int,
    degree: int,
    n_operands: int = 2,
    seed: int = 0,
) -> MatrixShiftReport:
    """Audit the truncation of the tensor-shift model.

    Operands are the identity word plus seeded random degree-long tensor
    words, shifted to every offset that keeps them inside the truncation;
    they live in an ambient space one tensor factor deeper, and the system
    map is the normalised partial trace onto the truncation.  Operands
    inside the truncation are fixed by that compression, so the audited
    multiplicativity and trace defects vanish; the rank of the compressed
    algebra is alphabet**truncation.
    """
    if alphabet < 2:
        raise StructuralError("the tensor-shift model needs an alphabet of at least 2")
    if truncation < 1:
        raise StructuralError("truncation depth must be at least 1")
    if not 1 <= degree <= truncation:
        raise DepthExhaustedError(
            f"operand degree {degree} does not fit a truncation of depth {truncation}"
        )
    ambient = truncation + 1
    if alphabet**ambient > 512:
        raise FamilySizeError(
            f"dense ambient space of dimension {alphabet**ambient} exceeds the cap 512; "
            "the pairwise audit is quadratic in dense matrix products"
        )
    rng = np.random.default_rng(seed)
    words = [tuple(np.eye(alphabet, dtype=complex) for _ in range(degree))]
    words += [random_tensor_word(alphabet, degree, rng) for _ in range(n_operands)]
    audited = []
    for w in words:
        for offset in range(truncation - degree + 1):
            audited.append(_embed_word(w, alphabet, ambient, offset))
    dim = alphabet**ambient

    def expect(x: np.ndarray) -> np.ndarray:
        return conditional_expectation(x, alphabet, ambient, truncation)

    mult_defect = 0.0
    trace_defect = 0.0
    approx = 0.0
    projected = [expect(x) for x in audited]
    for x, px in zip(audited, projected):
        trace_defect = max(trace_defect, abs(np.trace(x).real - np.trace(px).real) / dim)
        approx = max(approx, operator_norm(px - x))
    for x, px in zip(audited, projected):
        for y, py in zip(audited, projected):
            mult_defect = max(mult_defect, operator_norm(expect(x @ y) - px @ py))
    return MatrixShiftReport(
        alphabet, truncation, degree, alphabet**truncation, approx, mult_defect, trace_defect,
        len(audited),
    )


def matrix_shift_series(
    alphabet: int, n_max: int, degree: int = 1, n_operands: int = 2, seed: int = 0
) -> list:
    """Audit reports for truncation depths 1..n_max."""
    return [matrix_shift_qd(alphabet, n, degree, n_operands, seed) for n in range(1, n_max + 1)]


def system_to_json(system: CpcSystem) -> dict:
    """Dense row-major export of a system."""
    return {
        "cells": system.space.n_cells,
        "pieces": [sorted(p) for p in system.pieces],
        "colours": list(system.colour_of),
        "sample_points": list(system.sample_points),
        "blocks": list(system.blocks),
        "weights": np.asarray(system.weights.todense()).tolist(),
    }


def audit_csv_rows(reports: Sequence[MatrixShiftReport]) -> list:
    """Rows (n, rank, approx_error, mult_defect, trace_defect) for CSV."""
    return [(r.truncation, r.rank, r.approx_error, r.mult_defect, r.trace_defect) for r in reports]
