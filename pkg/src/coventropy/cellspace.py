"""Finite combinatorial spaces, open covers, dynamical joins, and the two
optimisation kernels the rest of the laboratory is built on: minimal
subcovers and minimal coloured refinements.

A space is the index set 0..n-1 together with a symmetric irreflexive
adjacency relation standing in for "these two cells touch", and a declared
dimension d.  A coloured refinement may use at most d+1 colours; pieces of
the same colour must be pairwise disjoint and non-adjacent, which is the
combinatorial rendering of a decomposable family of order-zero maps.

All structures are immutable and all operations are pure functions of their
inputs, so results can be cached or recomputed freely; repeated calls return
identical values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from math import ceil
from typing import Callable, Iterable, Mapping, Sequence

from .errors import CoveringError, InfeasibleColouringError, StructuralError

# Type alias: open sets are plain frozensets of cell indices.
OpenSet = frozenset

SCHEMA_VERSION = 1

# Exact search is attempted when the instance size (cover elements for
# subcovers, atoms for refinements) is at most this; beyond it the greedy
# fallbacks run and results are flagged inexact.
DEFAULT_EXACT_THRESHOLD = 24


def _as_cell(value, n_cells: int, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise StructuralError(f"{what} must be an integer cell index, got {value!r}")
    if not 0 <= value < n_cells:
        raise StructuralError(f"{what} {value} outside 0..{n_cells - 1}")
    return value


@dataclass(frozen=True)
class CellSpace:
    """Cells 0..n_cells-1 with symmetric irreflexive adjacency.

    dimension_d = 0 forces an empty adjacency relation: zero-dimensional
    spaces are totally disconnected.
    """

    n_cells: int
    adjacency: frozenset = frozenset()
    dimension_d: int = 0

    def __post_init__(self):
        if self.n_cells < 1:
            raise StructuralError("a cell space needs at least one cell")
        if self.dimension_d < 0:
            raise StructuralError("dimension_d must be nonnegative")
        pairs = set()
        for pair in self.adjacency:
            try:
                i, j = pair
            except (TypeError, ValueError):
                raise StructuralError(f"adjacency entry {pair!r} is not a pair") from None
            _as_cell(i, self.n_cells, "adjacency endpoint")
            _as_cell(j, self.n_cells, "adjacency endpoint")
            if i == j:
                raise StructuralError(f"adjacency is irreflexive, got self-pair ({i},{i})")
            pairs.add((min(i, j), max(i, j)))
        if self.dimension_d == 0 and pairs:
            raise StructuralError("dimension_d = 0 requires an empty adjacency relation")
        object.__setattr__(self, "adjacency", frozenset(pairs))

    @property
    def cells(self) -> range:
        return range(self.n_cells)

    @cached_property
    def neighbour_masks(self) -> tuple:
        """Bitmask of neighbours per cell."""
        masks = [0] * self.n_cells
        for i, j in self.adjacency:
            masks[i] |= 1 << j
            masks[j] |= 1 << i
        return tuple(masks)

    def adjacent(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.adjacency

    def sets_adjacent(self, a: frozenset, b: frozenset) -> bool:
        """True when some cell of a touches some cell of b."""
        masks = self.neighbour_masks
        bmask = _mask(b)
        return any(masks[c] & bmask for c in a)


def path_space(n_cells: int) -> CellSpace:
    """A path 0-1-...-(n-1); one-dimensional."""
    adj = frozenset((i, i + 1) for i in range(n_cells - 1))
    return CellSpace(n_cells, adj, dimension_d=1 if n_cells > 1 else 0)


def cycle_space(n_cells: int) -> CellSpace:
    """A cycle 0-1-...-(n-1)-0; one-dimensional."""
    if n_cells < 3:
        raise StructuralError("a cycle needs at least three cells")
    adj = frozenset((i, (i + 1) % n_cells) for i in range(n_cells))
    return CellSpace(n_cells, adj, dimension_d=1)


def grid_space(rows: int, cols: int) -> CellSpace:
    """A rows x cols grid with 4-neighbour adjacency; two-dimensional."""
    if rows < 1 or cols < 1:
        raise StructuralError("grid dimensions must be positive")
    adj = set()
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                adj.add((i, i + 1))
            if r + 1 < rows:
                adj.add((i, i + cols))
    return CellSpace(rows * cols, frozenset(adj), dimension_d=2 if adj else 0)


def _mask(cells: Iterable[int]) -> int:
    m = 0
    for c in cells:
        m |= 1 << c
    return m


def _unmask(mask: int) -> frozenset:
    out = []
    c = 0
    while mask:
        if mask & 1:
            out.append(c)
        mask >>= 1
        c += 1
    return frozenset(out)


@dataclass(frozen=True)
class Cover:
    """A finite family of nonempty cell sets whose union is the whole space.

    Elements are deduplicated and kept in a canonical sorted order, so two
    covers with the same elements compare equal and every derived index is
    reproducible.
    """

    space: CellSpace
    elements: tuple

    def __post_init__(self):
        n = self.space.n_cells
        seen = set()
        canon = []
        for el in self.elements:
            fs = frozenset(el)
            if not fs:
                raise StructuralError("cover elements must be nonempty")
            for c in fs:
                _as_cell(c, n, "cover element cell")
            if fs not in seen:
                seen.add(fs)
                canon.append(fs)
        canon.sort(key=lambda s: tuple(sorted(s)))
        union = frozenset().union(*canon) if canon else frozenset()
        if len(union) != n:
            missing = min(set(range(n)) - union)
            raise CoveringError(f"cell {missing} is not covered", missing_cell=missing)
        object.__setattr__(self, "elements", tuple(canon))

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class CellMap:
    """A multivalued forward relation on cells: images[c] is the nonempty set
    of cells c may move to.  invertible means single-valued and bijective."""

    space: CellSpace
    images: tuple
    invertible: bool = False

    def __post_init__(self):
        n = self.space.n_cells
        if len(self.images) != n:
            raise StructuralError(f"need one image set per cell, got {len(self.images)} for {n}")
        canon = []
        for c, img in enumerate(self.images):
            fs = frozenset(img)
            if not fs:
                raise StructuralError(f"cell {c} has an empty image set")
            for t in fs:
                _as_cell(t, n, "image cell")
            canon.append(fs)
        if self.invertible:
            if any(len(fs) != 1 for fs in canon):
                raise StructuralError("an invertible map must be single-valued")
            targets = [next(iter(fs)) for fs in canon]
            if len(set(targets)) != n:
                raise StructuralError("an invertible map must be a bijection on cells")
        object.__setattr__(self, "images", tuple(canon))

    @classmethod
    def from_function(cls, space: CellSpace, fn: Callable[[int], int], invertible: bool = False) -> "CellMap":
        return cls(space, tuple(frozenset([fn(c)]) for c in space.cells), invertible)

    @classmethod
    def identity(cls, space: CellSpace) -> "CellMap":
        return cls.from_function(space, lambda c: c, invertible=True)


@dataclass(frozen=True)
class DynamicalModel:
    """A space with a distinguished cover and a cell dynamics."""

    space: CellSpace
    cover: Cover
    dynamics: CellMap

    def __post_init__(self):
        if self.cover.space != self.space or self.dynamics.space != self.space:
            raise StructuralError("cover and dynamics must live on the model's space")


def _require_same_space(a: CellSpace, b: CellSpace, what: str) -> None:
    if a != b:
        raise StructuralError(f"{what}: operands live on different cell spaces")


def pullback(cover: Cover, cmap: CellMap) -> Cover:
    """Preimage cover: a cell lands in the preimage of U when some forward
    image of it meets U.  Empty preimages are dropped."""
    _require_same_space(cover.space, cmap.space, "pullback")
    pre = []
    for u in cover.elements:
        p = frozenset(c for c in cover.space.cells if cmap.images[c] & u)
        if p:
            pre.append(p)
    return Cover(cover.space, tuple(pre))


def join(a: Cover, b: Cover) -> Cover:
    """Common refinement: all nonempty pairwise intersections."""
    _require_same_space(a.space, b.space, "join")
    out = []
    for u in a.elements:
        for v in b.elements:
            w = u & v
            if w:
                out.append(w)
    return Cover(a.space, tuple(out))


def dynamical_join(cover: Cover, cmap: CellMap, n: int) -> Cover:
    """Join of the first n preimage covers: cover v T^-1(cover) v ... over
    n time steps.  n = 1 returns the cover itself."""
    if n < 1:
        raise StructuralError("dynamical_join needs n >= 1")
    result = cover
    level = cover
    for _ in range(1, n):
        level = pullback(level, cmap)
        result = join(result, level)
    return result


@dataclass(frozen=True)
class SubcoverResult:
    count: int
    indices: tuple
    witness: Cover
    exact: bool


def minimal_subcover(cover: Cover, exact_threshold: int = DEFAULT_EXACT_THRESHOLD) -> SubcoverResult:
    """Smallest subfamily that still covers.

    Mandatory elements (sole owners of some cell) are chosen first; the
    residual instance is solved exactly by branch and bound when it has at
    most exact_threshold candidate elements, greedily otherwise.  Exact
    results break ties lexicographically on element indices.
    """
    n = cover.space.n_cells
    m = len(cover.elements)

    chosen: set = set()
    remaining: set = set(range(n))
    # Forced-choice reduction: a cell covered by exactly one remaining
    # element forces that element into every subcover.  Plain sets here;
    # bitmask arithmetic over thousands of cells costs a large allocation
    # per extracted bit.
    while remaining:
        owner_count = [0] * n
        owner = [-1] * n
        for i, el in enumerate(cover.elements):
            if i in chosen:
                continue
            for c in el:
                if c in remaining:
                    owner_count[c] += 1
                    owner[c] = i
        forced = {owner[c] for c in remaining if owner_count[c] == 1}
        if not forced:
            break
        for i in sorted(forced):
            chosen.add(i)
            remaining -= cover.elements[i]

    exact = True
    if remaining:
        uncovered = _mask(remaining)
        masks = [_mask(el) for el in cover.elements]
        rest_idx = [i for i in range(m) if i not in chosen and masks[i] & uncovered]
        if len(rest_idx) <= exact_threshold:
            chosen.update(_subcover_branch_and_bound(masks, rest_idx, uncovered))
        else:
            exact = False
            while uncovered:
                best = max(rest_idx, key=lambda i: ((masks[i] & uncovered).bit_count(), -i))
                chosen.add(best)
                uncovered &= ~masks[best]

    indices = tuple(sorted(chosen))
    witness = Cover(cover.space, tuple(cover.elements[i] for i in indices))
    return SubcoverResult(len(indices), indices, witness, exact)


def _subcover_branch_and_bound(masks: Sequence[int], idx: Sequence[int], need: int) -> tuple:
    """Exact minimum cover of `need` using elements idx, include-first DFS in
    index order so the first optimum found is the lexicographic one."""
    k = len(idx)
    suffix_union = [0] * (k + 1)
    suffix_max = [1] * (k + 1)
    for p in range(k - 1, -1, -1):
        suffix_union[p] = suffix_union[p + 1] | masks[idx[p]]
        suffix_max[p] = max(suffix_max[p + 1], masks[idx[p]].bit_count())

    best: list = [None]

    def dfs(pos: int, covered: int, picked: tuple) -> None:
        remaining = need & ~covered
        if not remaining:
            if best[0] is None or len(picked) < best[0][0]:
                best[0] = (len(picked), picked)
            return
        if pos == k:
            return
        if remaining & ~suffix_union[pos]:
            return
        bound = len(picked) + ceil(remaining.bit_count() / suffix_max[pos])
        if best[0] is not None and bound >= best[0][0]:
            return
        gain = masks[idx[pos]] & remaining
        if gain:
            dfs(pos + 1, covered | masks[idx[pos]], picked + (idx[pos],))
        dfs(pos + 1, covered, picked)

    dfs(0, 0, ())
    if best[0] is None:  # cannot happen for a valid Cover
        missing = min(_unmask(need))
        raise CoveringError(f"cell {missing} cannot be covered", missing_cell=missing)
    return best[0][1]


@dataclass(frozen=True)
class ColouredRefinement:
    """A cover refinement whose pieces carry colours.

    Every piece sits inside the parent cover element recorded in parent_of,
    the pieces cover the space, and two distinct pieces of the same colour
    are disjoint and non-adjacent.  Empty colour classes are permitted.
    """

    cover: Cover
    pieces: tuple
    colour_of: tuple
    parent_of: tuple

    def __post_init__(self):
        space = self.cover.space
        pieces = tuple(frozenset(p) for p in self.pieces)
        if not (len(pieces) == len(self.colour_of) == len(self.parent_of)):
            raise StructuralError("pieces, colour_of and parent_of must align")
        union: set = set()
        for p, parent in zip(pieces, self.parent_of):
            if not p:
                raise StructuralError("refinement pieces must be nonempty")
            if not 0 <= parent < len(self.cover.elements):
                raise StructuralError(f"parent index {parent} out of range")
            if not p <= self.cover.elements[parent]:
                raise StructuralError("piece is not contained in its parent element")
            union.update(p)
        if len(union) != space.n_cells:
            missing = min(set(space.cells) - union)
            raise CoveringError(f"cell {missing} is not covered by the refinement", missing_cell=missing)
        if any(c < 0 for c in self.colour_of):
            raise StructuralError("colours must be nonnegative")
        # Same-colour constraints, checked per colour class with bitmasks:
        # disjointness by cardinality of the class union, non-adjacency by
        # intersecting each piece's neighbourhood with the other pieces.
        by_colour: dict = {}
        for p, col in zip(pieces, self.colour_of):
            by_colour.setdefault(col, []).append(p)
        neigh = space.neighbour_masks
        for col, group in by_colour.items():
            class_mask = 0
            total = 0
            for p in group:
                class_mask |= _mask(p)
                total += len(p)
            if class_mask.bit_count() != total:
                raise StructuralError(f"same-colour pieces must be disjoint (colour {col})")
            for p in group:
                own = _mask(p)
                spread = 0
                for c in p:
                    spread |= neigh[c]
                if spread & class_mask & ~own:
                    raise StructuralError(f"same-colour pieces must be non-adjacent (colour {col})")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "colour_of", tuple(self.colour_of))
        object.__setattr__(self, "parent_of", tuple(self.parent_of))

    def __len__(self) -> int:
        return len(self.pieces)

    @property
    def colours_used(self) -> int:
        return len(set(self.colour_of))


@dataclass(frozen=True)
class RefinementResult:
    count: int
    refinement: ColouredRefinement
    exact: bool


def cover_atoms(cover: Cover) -> tuple:
    """Cells grouped by their cover-membership pattern, ordered by least cell.

    Candidate refinement pieces are unions of atoms inside one parent, which
    keeps the search finite without changing the optimum for the cell model.
    """
    patterns: dict = {}
    for c in cover.space.cells:
        pat = 0
        for e, el in enumerate(cover.elements):
            if c in el:
                pat |= 1 << e
        patterns.setdefault(pat, []).append(c)
    atoms = [(frozenset(cells), pat) for pat, cells in patterns.items()]
    atoms.sort(key=lambda a: min(a[0]))
    return tuple(atoms)


def minimal_coloured_refinement(
    cover: Cover,
    colours: int | None = None,
    exact_threshold: int = DEFAULT_EXACT_THRESHOLD,
) -> RefinementResult:
    """Smallest coloured refinement of the cover within the colour budget
    (default dimension + 1).

    Adjacency-free spaces reduce to a disjointified minimal subcover.  With
    adjacency, the instance is solved exactly by branch and bound over
    cover-atoms when there are at most exact_threshold of them, else by the
    constructive fallback: split the space into `colours` independent classes
    and disjointify a minimal subcover inside each class.  The reported count
    always satisfies N <= count <= colours * N against the subcover count
    computed alongside it.
    """
    space = cover.space
    if colours is None:
        colours = space.dimension_d + 1
    if colours < 1:
        raise StructuralError("need at least one colour")

    sub = minimal_subcover(cover, exact_threshold)

    if not space.adjacency:
        refinement = _disjointify(cover, sub, {c: 0 for c in space.cells})
        return RefinementResult(len(refinement), refinement, sub.exact)

    atoms = cover_atoms(cover)
    if len(atoms) <= exact_threshold:
        lo = sub.count if sub.exact else 1
        refinement = _refinement_branch_and_bound(cover, atoms, colours, lo, colours * sub.count)
        result = RefinementResult(len(refinement), refinement, True)
    else:
        classes = colour_cells(space, colours)
        refinement = _disjointify(cover, sub, classes)
        result = RefinementResult(len(refinement), refinement, False)

    if sub.exact and not sub.count <= result.count <= colours * sub.count:
        raise StructuralError(
            f"refinement count {result.count} escapes [{sub.count}, {colours * sub.count}]"
        )
    return result


def colour_cells(space: CellSpace, colours: int) -> dict:
    """Proper colouring of the cell adjacency graph with at most `colours`
    colours, by backtracking on cells in most-constrained order.  Raises when
    the budget cannot be met, naming a witness cell."""
    n = space.n_cells
    masks = space.neighbour_masks
    order = sorted(range(n), key=lambda c: (-masks[c].bit_count(), c))
    assigned: dict = {}
    deepest = [order[0] if order else 0]

    def backtrack(pos: int) -> bool:
        if pos == n:
            return True
        cell = order[pos]
        deepest[0] = cell
        used = {assigned[t] for t in assigned if masks[cell] >> t & 1}
        for col in range(colours):
            if col in used:
                continue
            assigned[cell] = col
            if backtrack(pos + 1):
                return True
            del assigned[cell]
        return False

    if not backtrack(0):
        raise InfeasibleColouringError(
            f"cells cannot be split into {colours} independent classes (stuck at cell {deepest[0]})",
            witness_cell=deepest[0],
        )
    return assigned


def _disjointify(cover: Cover, sub: SubcoverResult, cell_class: Mapping[int, int]) -> ColouredRefinement:
    """Constructive refinement: within each colour class, peel the minimal
    subcover into disjoint pieces.  Same-class pieces are subsets of one
    independent class, so disjointness already implies non-adjacency."""
    pieces = []
    colour_of = []
    parent_of = []
    ncls = max(cell_class.values()) + 1 if cell_class else 1
    for cls in range(ncls):
        class_cells = frozenset(c for c, k in cell_class.items() if k == cls)
        seen: set = set()
        for i in sub.indices:
            piece = frozenset((cover.elements[i] & class_cells) - seen)
            seen.update(cover.elements[i])
            if piece:
                pieces.append(piece)
                colour_of.append(cls)
                parent_of.append(i)
    order = sorted(range(len(pieces)), key=lambda j: tuple(sorted(pieces[j])))
    return ColouredRefinement(
        cover,
        tuple(pieces[j] for j in order),
        tuple(colour_of[j] for j in order),
        tuple(parent_of[j] for j in order),
    )


def _refinement_branch_and_bound(
    cover: Cover, atoms: tuple, colours: int, count_lo: int, count_hi: int
) -> ColouredRefinement:
    """Exact minimum coloured refinement via iterative deepening on the piece
    count.  Atoms are assigned one at a time either to an existing piece
    (keeping a common parent and avoiding same-colour adjacency) or to a new
    piece; colours of fresh pieces are canonicalised to break symmetry.

    Any refinement shrinks to a partition of atoms into pieces without
    raising the count, so searching partitions is enough.
    """
    space = cover.space
    atom_cells = [a[0] for a in atoms]
    atom_parents = [a[1] for a in atoms]
    n_atoms = len(atoms)

    # Atom-level adjacency: a touches b when some cell pair crosses.
    neigh = space.neighbour_masks
    cellmask = [_mask(cells) for cells in atom_cells]
    reach = [0] * n_atoms
    for i, cells in enumerate(atom_cells):
        r = 0
        for c in cells:
            r |= neigh[c]
        reach[i] = r
    atom_adj = [0] * n_atoms
    for i in range(n_atoms):
        for j in range(n_atoms):
            if i != j and reach[i] & cellmask[j]:
                atom_adj[i] |= 1 << j

    # Most-constrained-first assignment order, deterministic.
    order = sorted(range(n_atoms), key=lambda i: (atom_parents[i].bit_count(), min(atom_cells[i])))

    # Deepest assignment position reached across the whole search; its atom
    # supplies the witness cell when every colour budget fails.
    deepest_pos = [0]

    def search(limit: int):
        piece_atoms: list = []
        piece_parents: list = []
        piece_colour: list = []
        colour_atoms = [0] * colours

        def dfs(pos: int) -> bool:
            if pos == n_atoms:
                return True
            deepest_pos[0] = max(deepest_pos[0], pos)
            a = order[pos]
            abit = 1 << a
            for g in range(len(piece_atoms)):
                shared = piece_parents[g] & atom_parents[a]
                if not shared:
                    continue
                col = piece_colour[g]
                if atom_adj[a] & (colour_atoms[col] & ~piece_atoms[g]):
                    continue
                piece_atoms[g] |= abit
                piece_parents_saved = piece_parents[g]
                piece_parents[g] = shared
                colour_atoms[col] |= abit
                if dfs(pos + 1):
                    return True
                colour_atoms[col] &= ~abit
                piece_parents[g] = piece_parents_saved
                piece_atoms[g] &= ~abit
            if len(piece_atoms) < limit:
                fresh = len(set(piece_colour))
                for col in range(min(fresh + 1, colours)):
                    if atom_adj[a] & colour_atoms[col]:
                        continue
                    piece_atoms.append(abit)
                    piece_parents.append(atom_parents[a])
                    piece_colour.append(col)
                    colour_atoms[col] |= abit
                    if dfs(pos + 1):
                        return True
                    colour_atoms[col] &= ~abit
                    piece_atoms.pop()
                    piece_parents.pop()
                    piece_colour.pop()
            return False

        if dfs(0):
            return piece_atoms, piece_parents, piece_colour
        return None

    for limit in range(max(count_lo, 1), max(count_hi, count_lo) + 1):
        found = search(limit)
        if found is not None:
            piece_atoms, piece_parents, piece_colour = found
            pieces = []
            parents = []
            for atoms_mask, parent_mask in zip(piece_atoms, piece_parents):
                cells = frozenset().union(*(atom_cells[i] for i in _bits(atoms_mask)))
                pieces.append(cells)
                parents.append(_lowest_bit(parent_mask))
            order2 = sorted(range(len(pieces)), key=lambda j: tuple(sorted(pieces[j])))
            return ColouredRefinement(
                cover,
                tuple(pieces[j] for j in order2),
                tuple(piece_colour[j] for j in order2),
                tuple(parents[j] for j in order2),
            )
    witness = min(atom_cells[order[deepest_pos[0]]])
    raise InfeasibleColouringError(
        f"no refinement with at most {colours} colours covers the space "
        f"(witness cell {witness})",
        witness_cell=witness,
    )


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def _lowest_bit(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _check_permutation(perm: Sequence[int], n: int) -> tuple:
    p = tuple(perm)
    if len(p) != n or sorted(p) != list(range(n)):
        raise StructuralError("relabeling must be a bijection on cells")
    return p


def relabel(obj, perm: Sequence[int]):
    """Apply a cell permutation to a space, cover, map, or model; perm[i] is
    the new label of cell i."""
    if isinstance(obj, CellSpace):
        p = _check_permutation(perm, obj.n_cells)
        adj = frozenset((p[i], p[j]) for i, j in obj.adjacency)
        return CellSpace(obj.n_cells, adj, obj.dimension_d)
    if isinstance(obj, Cover):
        space = relabel(obj.space, perm)
        p = tuple(perm)
        return Cover(space, tuple(frozenset(p[c] for c in el) for el in obj.elements))
    if isinstance(obj, CellMap):
        space = relabel(obj.space, perm)
        p = tuple(perm)
        images = [None] * space.n_cells
        for c, img in enumerate(obj.images):
            images[p[c]] = frozenset(p[t] for t in img)
        return CellMap(space, tuple(images), obj.invertible)
    if isinstance(obj, DynamicalModel):
        return DynamicalModel(
            relabel(obj.space, perm), relabel(obj.cover, perm), relabel(obj.dynamics, perm)
        )
    raise StructuralError(f"cannot relabel object of type {type(obj).__name__}")


def disjoint_union_spaces(a: CellSpace, b: CellSpace) -> CellSpace:
    """Side-by-side union; b's cells are shifted up by a.n_cells and no
    adjacency crosses the two halves."""
    off = a.n_cells
    adj = set(a.adjacency)
    adj.update((i + off, j + off) for i, j in b.adjacency)
    return CellSpace(a.n_cells + b.n_cells, frozenset(adj), max(a.dimension_d, b.dimension_d))


def disjoint_union(a: DynamicalModel, b: DynamicalModel) -> DynamicalModel:
    """Disjoint union of two models: covers concatenate, dynamics act
    blockwise, and join counts add block by block."""
    space = disjoint_union_spaces(a.space, b.space)
    off = a.space.n_cells
    elements = list(a.cover.elements)
    elements.extend(frozenset(c + off for c in el) for el in b.cover.elements)
    images = list(a.dynamics.images)
    images.extend(frozenset(c + off for c in img) for img in b.dynamics.images)
    return DynamicalModel(
        space,
        Cover(space, tuple(elements)),
        CellMap(space, tuple(images), a.dynamics.invertible and b.dynamics.invertible),
    )


def model_to_json(model: DynamicalModel) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "cells": model.space.n_cells,
        "adjacency": [list(p) for p in sorted(model.space.adjacency)],
        "dimension": model.space.dimension_d,
        "cover": [sorted(el) for el in model.cover.elements],
        "map": {str(c): sorted(img) for c, img in enumerate(model.dynamics.images)},
        "invertible": model.dynamics.invertible,
    }


def model_from_json(doc: Mapping) -> DynamicalModel:
    if not isinstance(doc, Mapping):
        raise StructuralError("model document must be a JSON object")
    version = doc.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise StructuralError(f"unsupported model schema version {version!r}")
    for field in ("cells", "cover", "map"):
        if field not in doc:
            raise StructuralError(f"model document is missing the '{field}' field")
    n = doc["cells"]
    if not isinstance(n, int) or n < 1:
        raise StructuralError(f"'cells' must be a positive integer, got {n!r}")
    space = CellSpace(
        n,
        frozenset(tuple(p) for p in doc.get("adjacency", [])),
        doc.get("dimension", 0),
    )
    cover = Cover(space, tuple(frozenset(el) for el in doc["cover"]))
    raw_map = doc["map"]
    images = []
    for c in range(n):
        key = str(c)
        if key not in raw_map:
            raise StructuralError(f"'map' is missing an image set for cell {c}")
        images.append(frozenset(raw_map[key]))
    dynamics = CellMap(space, tuple(images), bool(doc.get("invertible", False)))
    return DynamicalModel(space, cover, dynamics)


def load_model(path) -> DynamicalModel:
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise StructuralError(f"cannot read model: {exc}") from None
    with fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StructuralError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return model_from_json(doc)


def save_model(model: DynamicalModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh, indent=2, sort_keys=True)
        fh.write("\n")
