"""Subshifts of finite type: transfer matrices, exact cylinder counts, and
truncated word-space models that feed the cover machinery.

The admissible words of length `depth` form a zero-dimensional cell space;
the cover by first-symbol cylinders generates, under dynamical joins, the
n-cylinder partitions whose cardinalities the transfer matrix counts
exactly.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .cellspace import CellMap, CellSpace, Cover
from .errors import DepthExhaustedError, StructuralError

_ENTROPY_TOL = 1e-12
_MAX_POWER_ITER = 200000


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """A square 0/1 matrix with no zero row and no zero column, so every
    symbol extends forwards and backwards."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise StructuralError("transfer matrix must be square and nonempty")
        if not np.isin(a, (0, 1)).all():
            raise StructuralError("transfer matrix entries must be 0 or 1")
        if (a.sum(axis=1) == 0).any():
            row = int(np.argmax(a.sum(axis=1) == 0))
            raise StructuralError(f"row {row} of the transfer matrix is zero")
        if (a.sum(axis=0) == 0).any():
            col = int(np.argmax(a.sum(axis=0) == 0))
            raise StructuralError(f"column {col} of the transfer matrix is zero")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def alphabet(self) -> int:
        return self.entries.shape[0]

    def is_permutation(self) -> bool:
        return bool((self.entries.sum(axis=0) == 1).all() and (self.entries.sum(axis=1) == 1).all())

    def is_irreducible(self) -> bool:
        graph = csr_matrix(self.entries)
        n_comp, _ = connected_components(graph, directed=True, connection="strong")
        return n_comp == 1


def full_shift(alphabet: int) -> TransferMatrix:
    return TransferMatrix(np.ones((alphabet, alphabet), dtype=np.int64))


def golden_mean_shift() -> TransferMatrix:
    """Two symbols, the word 11 forbidden."""
    return TransferMatrix(np.array([[1, 1], [1, 0]], dtype=np.int64))


def sft_entropy(matrix: TransferMatrix, tol: float = _ENTROPY_TOL) -> float:
    """log of the Perron root.

    Permutation matrices return exactly 0.  Otherwise power iteration runs on
    entries + identity (primitive whenever the matrix is irreducible) from a
    deterministic all-ones start, with a Rayleigh-quotient convergence test at
    relative tolerance `tol`.  A reducible matrix only has a well-defined
    maximal root, not a unique Perron vector; it is flagged with a warning and
    the value is still returned.
    """
    if matrix.is_permutation():
        return 0.0
    if not matrix.is_irreducible():
        warnings.warn("transfer matrix is reducible; the growth rate is the maximal block root", stacklevel=2)
    a = matrix.entries.astype(float)
    shifted = a + np.eye(matrix.alphabet)
    x = np.ones(matrix.alphabet)
    lam = 0.0
    for _ in range(_MAX_POWER_ITER):
        y = shifted @ x
        norm = np.linalg.norm(y)
        y /= norm
        lam_new = float(y @ (shifted @ y))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            residual = float(np.max(np.abs(shifted @ y - lam_new * y)))
            if residual <= 1e-9 * max(1.0, abs(lam_new)):
                lam = lam_new
                break
        lam = lam_new
        x = y
    else:
        # Defective reducible cases converge too slowly; use the dense solver.
        lam = float(np.max(np.abs(np.linalg.eigvals(shifted))))
    rho = lam - 1.0
    if rho < 1.0:
        rho = 1.0  # every row has a 1, so the true root is at least 1
    return float(np.log(rho))


def cylinder_count(matrix: TransferMatrix, n: int) -> int:
    """Number of admissible words of length n, exactly: the total of the
    entries of the (n-1)-th matrix power in integer arithmetic."""
    if n < 1:
        raise StructuralError("cylinder_count needs n >= 1")
    a = matrix.entries.astype(object)
    power = np.eye(matrix.alphabet, dtype=object)
    e = n - 1
    base = a
    while e:
        if e & 1:
            power = power @ base
        e >>= 1
        if e:
            base = base @ base
    return int(power.sum())


def power_system(matrix: TransferMatrix, k: int) -> TransferMatrix:
    """Transfer matrix of the k-step system, presented on k-blocks.

    States are admissible k-words; a transition u -> v is allowed when the
    concatenation uv is admissible, which only constrains the junction pair.
    The spectral radius of this presentation is the k-th power of the base
    radius, so entropy scales linearly in k.
    """
    if k < 1:
        raise StructuralError("power_system needs k >= 1")
    if k == 1:
        return matrix
    words = enumerate_words(matrix, k)
    a = matrix.entries
    out = np.zeros((len(words), len(words)), dtype=np.int64)
    for i, u in enumerate(words):
        for j, v in enumerate(words):
            out[i, j] = int(a[u[-1], v[0]])
    return TransferMatrix(out)


@dataclass(frozen=True, eq=False)
class WordSpace:
    """Admissible words of a fixed length as a zero-dimensional cell space,
    covered by first-symbol cylinders and shifted by the one-step relation
    w -> w[1:] + a over admissible continuations a."""

    matrix: TransferMatrix
    depth: int
    words: tuple
    space: CellSpace
    cover: Cover
    shift: CellMap

    def require_depth(self, n: int) -> None:
        if n > self.depth:
            raise DepthExhaustedError(
                f"join depth {n} exceeds the word-space depth {self.depth}; rebuild the model deeper"
            )

    @property
    def dynamics(self) -> CellMap:
        return self.shift


def enumerate_words(matrix: TransferMatrix, depth: int) -> tuple:
    """All admissible words of length `depth`, in lexicographic order."""
    if depth < 1:
        raise StructuralError("word enumeration needs depth >= 1")
    k = matrix.alphabet
    a = matrix.entries
    words = [(s,) for s in range(k)]
    for _ in range(depth - 1):
        words = [w + (t,) for w in words for t in range(k) if a[w[-1], t]]
    return tuple(sorted(words))


def cylinder_cover(matrix: TransferMatrix, depth: int) -> WordSpace:
    """Build the depth-truncated word-space model of the subshift."""
    words = enumerate_words(matrix, depth)
    index = {w: i for i, w in enumerate(words)}
    space = CellSpace(len(words), frozenset(), dimension_d=0)
    k = matrix.alphabet
    elements = []
    for s in range(k):
        cyl = frozenset(i for i, w in enumerate(words) if w[0] == s)
        if cyl:
            elements.append(cyl)
    cover = Cover(space, tuple(elements))
    a = matrix.entries
    images = []
    for w in words:
        succ = frozenset(index[w[1:] + (t,)] for t in range(k) if a[w[-1], t]) if depth > 1 else frozenset(
            index[(t,)] for t in range(k) if a[w[-1], t]
        )
        images.append(succ)
    shift = CellMap(space, tuple(images))
    return WordSpace(matrix, depth, words, space, cover, shift)


def matrix_to_json(matrix: TransferMatrix) -> dict:
    return {"alphabet": matrix.alphabet, "matrix": matrix.entries.tolist()}


def matrix_from_json(doc) -> TransferMatrix:
    if not isinstance(doc, dict):
        raise StructuralError("matrix document must be a JSON object")
    if "matrix" not in doc:
        raise StructuralError("matrix document is missing the 'matrix' field")
    rows = doc["matrix"]
    tm = TransferMatrix(np.asarray(rows, dtype=np.int64))
    declared = doc.get("alphabet")
    if declared is not None and declared != tm.alphabet:
        raise StructuralError(f"declared alphabet {declared} does not match a {tm.alphabet}x{tm.alphabet} matrix")
    return tm


def matrix_from_csv(text: str) -> TransferMatrix:
    """Parse a plain CSV of 0/1 rows (commas or whitespace)."""
    rows = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        try:
            rows.append([int(p) for p in parts])
        except ValueError:
            raise StructuralError(f"line {ln}: non-integer entry in transfer matrix CSV") from None
    if not rows:
        raise StructuralError("transfer matrix CSV is empty")
    if len({len(r) for r in rows}) != 1:
        raise StructuralError("transfer matrix CSV rows have unequal lengths")
    return TransferMatrix(np.asarray(rows, dtype=np.int64))


def load_matrix(path) -> TransferMatrix:
    """Load a transfer matrix from a .json or .csv file."""
    import json

    try:
        text = open(path, "r", encoding="utf-8").read()
    except OSError as exc:
        raise StructuralError(f"cannot read matrix: {exc}") from None
    if str(path).endswith(".json"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StructuralError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        return matrix_from_json(doc)
    return matrix_from_csv(text)
