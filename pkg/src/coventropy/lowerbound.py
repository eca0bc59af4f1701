"""Entropy lower bounds from l1-geometry.

A family of unit vectors is K-equivalent to the l1-basis when every signed
combination keeps at least 1/K of its l1-mass in norm:
K = 1 / min { ||sum c_i v_i|| : sum |c_i| = 1 }.  Dynamical translates of a
good family grow linearly in the time horizon, and the equivalence constant
feeds the lower-bound factor K^-2 * m; the universal constant in front is
unknown, so the factor is reported raw and never converted into a numeric
entropy bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .cellspace import CellMap, CellSpace
from .cpapprox import operator_norm
from .errors import DepthExhaustedError, FamilySizeError, StructuralError

_UNIT_TOL = 1e-9
_DEGENERATE_TOL = 1e-9
_EXACT_CAP = 16


@dataclass(frozen=True, eq=False)
class VectorFamily:
    """Unit vectors under a common norm.

    norm_kind "sup": vectors are real value vectors over cells.
    norm_kind "operator": vectors are dense matrices; tensor words carry
    their factor lists so they can be shifted within the truncation.
    """

    norm_kind: str
    vectors: tuple
    labels: tuple = ()
    tensor_factors: tuple | None = None
    alphabet: int | None = None
    truncation: int | None = None

    def __post_init__(self):
        if self.norm_kind not in ("sup", "operator"):
            raise StructuralError(f"unknown norm kind {self.norm_kind!r}")
        if not self.vectors:
            raise StructuralError("a vector family must be nonempty")
        vecs = tuple(np.asarray(v) for v in self.vectors)
        for i, v in enumerate(vecs):
            if self.norm_kind == "sup":
                if v.ndim != 1 or np.iscomplexobj(v):
                    raise StructuralError("sup-norm family vectors must be real value vectors")
                norm = float(np.max(np.abs(v)))
            else:
                if v.ndim != 2:
                    raise StructuralError("operator-norm family vectors must be matrices")
                norm = operator_norm(v)
            if abs(norm - 1.0) > _UNIT_TOL:
                raise StructuralError(f"vector {i} has norm {norm!r}, expected 1")
        labels = self.labels or tuple(f"v{i}" for i in range(len(vecs)))
        if len(labels) != len(vecs):
            raise StructuralError("labels must align with vectors")
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "labels", tuple(labels))

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    """K, its witness coefficients on the l1-sphere, and the derived
    lower-bound factor K^-2 * m (universal prefactor left symbolic)."""

    K: float
    coefficients: np.ndarray
    exact: bool
    kerr_bound_factor: float
    complex_upper: float
    norm_kind: str
    size: int

    @property
    def infinite(self) -> bool:
        return math.isinf(self.K)


def _sup_orthant_minimum(value_matrix: np.ndarray, signs: np.ndarray) -> tuple:
    """Exact minimum of max_c |sum_i t_i s_i v_i(c)| over the probability
    simplex, by linear programming.  Returns (minimum, t)."""
    w = value_matrix * signs  # cells x m
    cells, m = w.shape
    # Cheap certificate: some cell realises every sign, so every combination
    # keeps full mass there and single vectors already achieve 1.
    aligned = float(np.max(np.min(w, axis=1)))
    if aligned >= 1.0 - 1e-12:
        t = np.zeros(m)
        t[0] = 1.0
        return 1.0, t
    c = np.zeros(m + 1)
    c[-1] = 1.0
    a_ub = np.vstack([np.hstack([w, -np.ones((cells, 1))]), np.hstack([-w, -np.ones((cells, 1))])])
    b_ub = np.zeros(2 * cells)
    a_eq = np.zeros((1, m + 1))
    a_eq[0, :m] = 1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=[(0, None)] * (m + 1), method="highs")
    if not res.success:
        raise StructuralError(f"orthant linear programme failed: {res.message}")
    return float(res.fun), np.asarray(res.x[:m])


def _project_l1_sphere(c: np.ndarray) -> np.ndarray:
    s = float(np.sum(np.abs(c)))
    if s < 1e-15:
        out = np.zeros_like(c)
        out[0] = 1.0
        return out
    return c / s


def _operator_minimum(vectors: Sequence[np.ndarray], restarts: int, seed: int) -> tuple:
    """Projected subgradient descent for min ||sum c_i M_i|| on the
    l1-sphere; heuristic, seeded, deterministic."""
    m = len(vectors)
    rng = np.random.default_rng(seed)
    stacked = [np.asarray(v, dtype=complex) for v in vectors]

    def value_and_grad(c: np.ndarray) -> tuple:
        combo = sum(ci * vi for ci, vi in zip(c, stacked))
        u, s, vh = np.linalg.svd(combo)
        grad = np.array([float(np.real(u[:, 0].conj() @ (vi @ vh[0, :].conj()))) for vi in stacked])
        return float(s[0]), grad

    best_val = math.inf
    best_c = None
    starts = [np.full(m, 1.0 / m)]
    for _ in range(restarts - 1):
        raw = rng.standard_normal(m)
        starts.append(_project_l1_sphere(raw))
    for c0 in starts:
        c = c0.copy()
        for it in range(150):
            val, grad = value_and_grad(c)
            if val < best_val - 1e-15:
                best_val = val
                best_c = c.copy()
            step = 0.5 / math.sqrt(it + 1.0)
            c = _project_l1_sphere(c - step * grad)
        val, _ = value_and_grad(c)
        if val < best_val - 1e-15:
            best_val = val
            best_c = c.copy()
    return best_val, best_c


def l1_equivalence_constant(
    family: VectorFamily,
    exact_cap: int = _EXACT_CAP,
    restarts: int = 64,
    seed: int = 0,
) -> EquivalenceReport:
    """Equivalence constant of the family against the l1-basis.

    Sup-norm families are solved exactly: one linear programme per sign
    orthant (2^(m-1) after symmetry).  Operator-norm families use projected
    subgradient descent and are flagged inexact.  Families larger than
    exact_cap are refused; a minimum below 1e-9 is reported as an infinite
    constant rather than raised.
    """
    m = len(family)
    if m > exact_cap:
        raise FamilySizeError(f"family of size {m} exceeds the exact enumeration cap {exact_cap}")
    if family.norm_kind == "sup":
        value_matrix = np.column_stack([v.astype(float) for v in family.vectors])
        best = math.inf
        best_c = None
        for code in range(1 << (m - 1)):
            signs = np.ones(m)
            for i in range(m - 1):
                if code >> i & 1:
                    signs[i + 1] = -1.0
            val, t = _sup_orthant_minimum(value_matrix, signs)
            if val < best - 1e-15:
                best = val
                best_c = signs * t
        exact = True
    else:
        best, best_c = _operator_minimum(family.vectors, restarts, seed)
        exact = False

    best_c = _project_l1_sphere(np.asarray(best_c, dtype=float))
    if best < _DEGENERATE_TOL:
        k = math.inf
        factor = 0.0
    else:
        k = 1.0 / best
        factor = m / (k * k)
    return EquivalenceReport(
        K=k,
        coefficients=best_c,
        exact=exact,
        kerr_bound_factor=factor,
        complex_upper=(math.inf if math.isinf(k) else 2.0 * k),
        norm_kind=family.norm_kind,
        size=m,
    )


def _translate_once(values: np.ndarray, dynamics: CellMap) -> np.ndarray:
    """Precompose a function with the (possibly multivalued) dynamics; only
    defined when the function is constant across every image set."""
    out = np.empty_like(values)
    for c, img in enumerate(dynamics.images):
        vals = values[sorted(img)]
        if float(np.max(vals) - np.min(vals)) > 1e-12:
            raise DepthExhaustedError(
                f"translate leaves the truncation: function is not constant on the images of cell {c}"
            )
        out[c] = vals[0]
    return out


def shifted_family(family: VectorFamily, dynamics: CellMap | None, n: int) -> VectorFamily:
    """The union of the family with its first n-1 dynamical translates,
    ordered by time step.

    Sup-norm families translate by precomposition with the cell dynamics;
    tensor-word families shift by one tensor position per step.  Translates
    that would need information beyond the truncation raise."""
    if n < 1:
        raise StructuralError("shifted_family needs n >= 1")
    if family.norm_kind == "sup":
        if dynamics is None:
            raise StructuralError("sup-norm families need the cell dynamics to shift")
        if dynamics.space.n_cells != family.vectors[0].shape[0]:
            raise StructuralError("dynamics and family live on different cell counts")
        vectors = list(family.vectors)
        labels = [f"{lab}@t0" for lab in family.labels]
        current = list(family.vectors)
        for j in range(1, n):
            current = [_translate_once(v, dynamics) for v in current]
            vectors.extend(current)
            labels.extend(f"{lab}@t{j}" for lab in family.labels)
        return VectorFamily("sup", tuple(vectors), tuple(labels))
    if family.tensor_factors is None or family.alphabet is None or family.truncation is None:
        raise StructuralError("operator-norm families need tensor word structure to shift")
    from .cpapprox import _embed_word

    vectors = []
    labels = []
    factors = []
    for j in range(n):
        for lab, word in zip(family.labels, family.tensor_factors):
            vectors.append(_embed_word(word, family.alphabet, family.truncation, j))
            labels.append(f"{lab}@t{j}")
            factors.append(word)
    return VectorFamily(
        "operator",
        tuple(vectors),
        tuple(labels),
        tensor_factors=tuple(factors),
        alphabet=family.alphabet,
        truncation=family.truncation,
    )


def coordinate_family(m: int, depth: int, max_bits: int = 20) -> VectorFamily:
    """The m coordinate functions x -> 2 x_i - 1 of the first symbol block on
    the product space {0,1}^(m*depth).

    Every sign pattern is realised by some cell, so the family (and each of
    its shifted unions) is 1-equivalent to the l1-basis; the guaranteed bound
    for this construction is 2."""
    if m < 1 or depth < 1:
        raise StructuralError("coordinate_family needs m >= 1 and depth >= 1")
    bits = m * depth
    if bits > max_bits:
        raise FamilySizeError(f"{bits}-bit product space exceeds the cap of {max_bits} bits")
    cells = 1 << bits
    vectors = []
    for i in range(m):
        v = np.array([2.0 * (x >> i & 1) - 1.0 for x in range(cells)])
        vectors.append(v)
    return VectorFamily("sup", tuple(vectors), tuple(f"x{i}" for i in range(m)))


def block_shift_map(m: int, depth: int, max_bits: int = 20) -> CellMap:
    """One-block shift relation on {0,1}^(m*depth): drop the first m bits,
    append any of the 2^m completions."""
    bits = m * depth
    if bits > max_bits:
        raise FamilySizeError(f"{bits}-bit product space exceeds the cap of {max_bits} bits")
    cells = 1 << bits
    space = CellSpace(cells, frozenset(), dimension_d=0)
    top = bits - m
    images = tuple(
        frozenset((x >> m) | (b << top) for b in range(1 << m)) for x in range(cells)
    )
    return CellMap(space, images)


def kerr_witness(m: int, depth: int, max_bits: int = 20) -> VectorFamily:
    """The shifted coordinate family across the whole depth: m*depth
    independent +-1 coordinates, 1-equivalent to the l1-basis."""
    base = coordinate_family(m, depth, max_bits)
    if depth == 1:
        return base
    return shifted_family(base, block_shift_map(m, depth, max_bits), depth)


def report_to_json(report: EquivalenceReport) -> dict:
    return {
        "K": report.K if not math.isinf(report.K) else "infinite",
        "exact": report.exact,
        "coefficients": [float(x) for x in report.coefficients],
        "kerr_bound_factor": report.kerr_bound_factor,
        "complex_upper": report.complex_upper if not math.isinf(report.complex_upper) else "infinite",
        "norm_kind": report.norm_kind,
        "size": report.size,
    }
