"""Persistence modules over finite grids in Q^n, with exact arithmetic.

A module assigns a finite-dimensional F_p vector space to each vertex of a
finite grid (a product of finite sets of rational coordinates) and a matrix
to each edge between consecutive vertices, with all squares commuting.

Semantics: a module always stands for its extension to all of R^n, where the
value at a point x is the value at the largest grid vertex <= x (and 0 when
no vertex lies below x).  All operations in this package respect that
convention, so refining a grid never changes the meaning of a module.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from itertools import product

import numpy as np

from . import field
from .field import DEFAULT_PRIME, rref


def as_frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


def pt(*coords):
    """A point in Q^n as a tuple of Fractions."""
    return tuple(as_frac(c) for c in coords)


def pt_shift(point, r):
    """Translate every coordinate by the scalar r (diagonal shift)."""
    r = as_frac(r)
    return tuple(c + r for c in point)


def pt_leq(x, y):
    return all(a <= b for a, b in zip(x, y))


class Grid:
    """A finite grid: the product of strictly increasing coordinate lists."""

    def __init__(self, axes):
        self.axes = tuple(tuple(as_frac(c) for c in ax) for ax in axes)
        for ax in self.axes:
            if len(ax) == 0:
                raise ValueError("empty axis")
            if any(ax[i] >= ax[i + 1] for i in range(len(ax) - 1)):
                raise ValueError("axis coordinates must be strictly increasing")
        self.n = len(self.axes)
        self.shape = tuple(len(ax) for ax in self.axes)
        # float shadows guide the bisection; exact comparisons fix up the
        # result, so rounding can never change an answer
        self._fax = tuple(tuple(float(c) for c in ax) for ax in self.axes)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.axes == other.axes

    def __hash__(self):
        return hash(self.axes)

    def __repr__(self):
        return f"Grid({[len(ax) for ax in self.axes]} coords/axis, n={self.n})"

    def vertices(self):
        return np.ndindex(self.shape)

    def coord(self, vidx):
        return tuple(self.axes[k][i] for k, i in enumerate(vidx))

    def _axis_floor(self, k, x):
        """Largest i with axes[k][i] <= x, or -1.

        Bisects on floats, which is exact except on float ties: conversion is
        correctly rounded, so a < b whenever float(a) < float(b).  Only
        tied neighbours are re-compared exactly.
        """
        fax = self._fax[k]
        fx = float(x)
        i = bisect_right(fax, fx)
        ax = self.axes[k]
        while i > 0 and fax[i - 1] == fx and ax[i - 1] > x:
            i -= 1
        return i - 1

    def floor_index(self, point):
        """Index of the largest vertex <= point, or None if there is none."""
        idx = []
        for k, x in enumerate(point):
            i = self._axis_floor(k, x)
            if i < 0:
                return None
            idx.append(i)
        return tuple(idx)

    def strict_floor_index(self, point):
        """Index of the largest vertex strictly below point in every axis."""
        idx = []
        for k, x in enumerate(point):
            i = self._axis_floor(k, x)
            if i >= 0 and self.axes[k][i] == x:
                i -= 1
            if i < 0:
                return None
            idx.append(i)
        return tuple(idx)

    def contains_point(self, point):
        return all(x in ax for ax, x in zip(self.axes, point))

    def index_of(self, point):
        idx = self.floor_index(point)
        if idx is None or self.coord(idx) != tuple(as_frac(x) for x in point):
            raise ValueError(f"{point} is not a grid vertex")
        return idx


class GridModule:
    """dims: array over grid.shape; steps[(vidx, k)]: matrix for the edge
    from vidx to its successor along axis k.

    A step entry must be present for every edge whose endpoints both have
    positive dimension; zero maps are stored explicitly.  Modules are treated
    as immutable once built (structure maps are memoized).
    """

    def __init__(self, grid: Grid, dims, steps, p: int = DEFAULT_PRIME):
        self.grid = grid
        self.p = p
        self.dims = np.asarray(dims, dtype=np.int64).reshape(grid.shape)
        self.steps = steps
        self._smap_cache = {}

    # -- basic accessors ---------------------------------------------------

    def dim(self, vidx) -> int:
        return int(self.dims[tuple(vidx)])

    def succ(self, vidx, k):
        w = list(vidx)
        w[k] += 1
        return tuple(w)

    def has_succ(self, vidx, k) -> bool:
        return vidx[k] + 1 < self.grid.shape[k]

    def step(self, vidx, k) -> np.ndarray:
        """Matrix of the edge vidx -> vidx + e_k."""
        key = (tuple(vidx), k)
        if key in self.steps:
            return self.steps[key]
        return field.zeros(self.dim(self.succ(vidx, k)), self.dim(vidx))

    def dim_at(self, point) -> int:
        """Dimension of the extension at an arbitrary point of R^n."""
        idx = self.grid.floor_index(point)
        return 0 if idx is None else self.dim(idx)

    def total_dim(self) -> int:
        return int(self.dims.sum())

    def max_pointwise_dim(self) -> int:
        return int(self.dims.max()) if self.dims.size else 0

    def support_vertices(self):
        return [tuple(v) for v in np.argwhere(self.dims > 0)]

    def copy(self):
        return GridModule(self.grid, self.dims.copy(),
                          {k: m.copy() for k, m in self.steps.items()}, self.p)

    # -- structure maps ----------------------------------------------------

    def structure_map(self, vidx, widx) -> np.ndarray:
        """Composite matrix along any monotone path from vidx to widx."""
        vidx, widx = tuple(vidx), tuple(widx)
        if any(a > b for a, b in zip(vidx, widx)):
            raise ValueError(f"{vidx} !<= {widx}")
        key = (vidx, widx)
        cached = self._smap_cache.get(key)
        if cached is not None:
            return cached
        if vidx == widx:
            m = field.eye(self.dim(vidx))
            self._smap_cache[key] = m
            return m
        ds, dt = self.dim(vidx), self.dim(widx)
        if ds == 0 or dt == 0:
            m = field.zeros(dt, ds)
            self._smap_cache[key] = m
            return m
        k = max(a for a in range(self.grid.n) if vidx[a] < widx[a])
        prev = list(widx)
        prev[k] -= 1
        prev = tuple(prev)
        m = field.mmul(self.step(prev, k), self.structure_map(vidx, prev), self.p)
        self._smap_cache[key] = m
        return m

    def structure_map_points(self, x, y) -> np.ndarray:
        """Structure map of the extension between arbitrary points x <= y."""
        if not pt_leq(x, y):
            raise ValueError(f"{x} !<= {y}")
        vi = self.grid.floor_index(x)
        wi = self.grid.floor_index(y)
        if vi is None:
            return field.zeros(0 if wi is None else self.dim(wi), 0)
        return self.structure_map(vi, wi)

    # -- validation ---------------------------------------------------------

    def validate(self):
        """Check shapes, entry ranges, presence of steps, and commutativity.

        Raises ValueError on the first violation.
        """
        if not field.is_probable_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if (self.dims < 0).any():
            raise ValueError("negative dimension")
        for (vidx, k), m in self.steps.items():
            if not self.has_succ(vidx, k):
                raise ValueError(f"step at {vidx} axis {k}: no successor")
            want = (self.dim(self.succ(vidx, k)), self.dim(vidx))
            if m.shape != want:
                raise ValueError(f"step at {vidx} axis {k}: shape {m.shape}, want {want}")
            if m.size and ((m < 0).any() or (m >= self.p).any()):
                raise ValueError(f"step at {vidx} axis {k}: entries out of [0,p)")
        for vidx in self.grid.vertices():
            vidx = tuple(vidx)
            for k in range(self.grid.n):
                if not self.has_succ(vidx, k):
                    continue
                w = self.succ(vidx, k)
                if self.dim(vidx) > 0 and self.dim(w) > 0 and (vidx, k) not in self.steps:
                    raise ValueError(f"missing step at {vidx} axis {k}")
                for l in range(k + 1, self.grid.n):
                    if not self.has_succ(vidx, l):
                        continue
                    u = self.succ(vidx, l)
                    a = field.mmul(self.step(w, l), self.step(vidx, k), self.p)
                    b = field.mmul(self.step(u, k), self.step(vidx, l), self.p)
                    if not np.array_equal(a, b):
                        raise ValueError(f"square at {vidx} axes ({k},{l}) does not commute")
        return True

    def is_valid(self) -> bool:
        try:
            self.validate()
            return True
        except ValueError:
            return False

    def __repr__(self):
        return (f"GridModule(n={self.grid.n}, shape={self.grid.shape}, "
                f"total_dim={self.total_dim()}, p={self.p})")


class ModuleMorphism:
    """A natural transformation between two modules on the same grid.

    mats[vidx] is the component at vidx, of shape (target.dim, source.dim);
    missing entries stand for the zero (or empty) matrix.
    """

    def __init__(self, source: GridModule, target: GridModule, mats):
        if source.grid != target.grid:
            raise ValueError("morphism endpoints live on different grids")
        if source.p != target.p:
            raise ValueError("mixed primes")
        self.source = source
        self.target = target
        self.p = source.p
        self.mats = mats

    def at(self, vidx) -> np.ndarray:
        vidx = tuple(vidx)
        m = self.mats.get(vidx)
        if m is None:
            return field.zeros(self.target.dim(vidx), self.source.dim(vidx))
        return m

    def validate(self):
        M, N = self.source, self.target
        for vidx, m in self.mats.items():
            want = (N.dim(vidx), M.dim(vidx))
            if m.shape != want:
                raise ValueError(f"component at {vidx}: shape {m.shape}, want {want}")
        for vidx in M.grid.vertices():
            vidx = tuple(vidx)
            for k in range(M.grid.n):
                if not M.has_succ(vidx, k):
                    continue
                w = M.succ(vidx, k)
                a = field.mmul(self.at(w), M.step(vidx, k), self.p)
                b = field.mmul(N.step(vidx, k), self.at(vidx), self.p)
                if not np.array_equal(a, b):
                    raise ValueError(f"naturality fails at {vidx} axis {k}")
        return True

    def is_valid(self) -> bool:
        try:
            self.validate()
            return True
        except ValueError:
            return False

    def compose(self, other: "ModuleMorphism") -> "ModuleMorphism":
        """self o other."""
        if other.target is not self.source and other.target.dims.shape != self.source.dims.shape:
            raise ValueError("composition mismatch")
        mats = {}
        for vidx in self.source.grid.vertices():
            vidx = tuple(vidx)
            m = field.mmul(self.at(vidx), other.at(vidx), self.p)
            if m.size and m.any():
                mats[vidx] = m
        return ModuleMorphism(other.source, self.target, mats)

    def is_isomorphism(self) -> bool:
        if not np.array_equal(self.source.dims, self.target.dims):
            return False
        return all(field.is_invertible(self.at(tuple(v)), self.p)
                   for v in self.source.grid.vertices()
                   if self.source.dim(tuple(v)) > 0)

    def inverse(self) -> "ModuleMorphism":
        mats = {}
        for vidx in self.source.grid.vertices():
            vidx = tuple(vidx)
            if self.target.dim(vidx) > 0:
                mats[vidx] = field.minv(self.at(vidx), self.p)
        return ModuleMorphism(self.target, self.source, mats)

    @staticmethod
    def identity(M: GridModule) -> "ModuleMorphism":
        mats = {tuple(v): field.eye(M.dim(tuple(v)))
                for v in M.grid.vertices() if M.dim(tuple(v)) > 0}
        return ModuleMorphism(M, M, mats)

    @staticmethod
    def linear_combination(basis, coeffs, p):
        """sum_i coeffs[i] * basis[i] for morphisms with common endpoints."""
        if not basis:
            raise ValueError("empty basis")
        src, tgt = basis[0].source, basis[0].target
        mats = {}
        for f, c in zip(basis, coeffs):
            c = int(c) % p
            if c == 0:
                continue
            for vidx, m in f.mats.items():
                acc = mats.get(vidx)
                cm = (m * c) % p
                mats[vidx] = cm if acc is None else (acc + cm) % p
        return ModuleMorphism(src, tgt, mats)


# -- constructions ----------------------------------------------------------

def zero_module(n: int, p: int = DEFAULT_PRIME) -> GridModule:
    grid = Grid([[Fraction(0)]] * n)
    return GridModule(grid, np.zeros((1,) * n, dtype=np.int64), {}, p)


def max_pointwise_dim(M: GridModule) -> int:
    """Largest dimension the extension of M attains at any point of Q^n.

    The extension takes its values at grid vertices (and 0 off-support),
    so the maximum over the dims array decides it.
    """
    return int(M.dims.max())


def free_module(grid: Grid, gen_point, p: int = DEFAULT_PRIME) -> GridModule:
    """The module that is k at every vertex >= gen_point and 0 elsewhere."""
    gen_point = tuple(as_frac(x) for x in gen_point)
    dims = np.zeros(grid.shape, dtype=np.int64)
    steps = {}
    for vidx in grid.vertices():
        vidx = tuple(vidx)
        if pt_leq(gen_point, grid.coord(vidx)):
            dims[vidx] = 1
    M = GridModule(grid, dims, steps, p)
    for vidx in grid.vertices():
        vidx = tuple(vidx)
        for k in range(grid.n):
            if M.has_succ(vidx, k):
                w = M.succ(vidx, k)
                if dims[vidx] and dims[w]:
                    steps[(vidx, k)] = field.eye(1)
    return M


def interval_module(a, b, p: int = DEFAULT_PRIME) -> GridModule:
    """The module k on the half-open hyper-rectangle [a, b)."""
    a = tuple(as_frac(x) for x in a)
    b = tuple(as_frac(x) for x in b)
    if not all(x < y for x, y in zip(a, b)):
        raise ValueError("need a < b coordinatewise")
    grid = Grid([[x, y] for x, y in zip(a, b)])
    # only the all-a corner lies inside [a, b): any vertex with some
    # coordinate at b is already outside the box
    dims = np.zeros(grid.shape, dtype=np.int64)
    dims[(0,) * grid.n] = 1
    return GridModule(grid, dims, {}, p)


def direct_sum(*modules):
    """Direct sum of modules on one common grid.

    Returns (S, inclusions, projections) with witness morphisms.
    """
    if not modules:
        raise ValueError("empty direct sum")
    grid = modules[0].grid
    p = modules[0].p
    for M in modules:
        if M.grid != grid or M.p != p:
            raise ValueError("direct_sum requires a common grid and prime; "
                             "refine with common_refinement first")
    dims = sum(M.dims for M in modules)
    steps = {}
    S = GridModule(grid, dims, steps, p)
    for vidx in grid.vertices():
        vidx = tuple(vidx)
        for k in range(grid.n):
            if not S.has_succ(vidx, k):
                continue
            w = S.succ(vidx, k)
            if dims[vidx] and dims[tuple(w)]:
                blocks = [M.step(vidx, k) for M in modules]
                m = field.zeros(int(dims[tuple(w)]), int(dims[vidx]))
                r = c = 0
                for bl in blocks:
                    m[r:r + bl.shape[0], c:c + bl.shape[1]] = bl
                    r += bl.shape[0]
                    c += bl.shape[1]
                steps[(vidx, k)] = m
    inclusions, projections = [], []
    for i, M in enumerate(modules):
        inc, prj = {}, {}
        for vidx in grid.vertices():
            vidx = tuple(vidx)
            d = M.dim(vidx)
            if d == 0:
                continue
            off = sum(modules[j].dim(vidx) for j in range(i))
            m = field.zeros(S.dim(vidx), d)
            m[off:off + d] = field.eye(d)
            inc[vidx] = m
            prj[vidx] = m.T.copy()
        inclusions.append(ModuleMorphism(M, S, inc))
        projections.append(ModuleMorphism(S, M, prj))
    return S, inclusions, projections


def random_basis_change(M: GridModule, seed: int) -> GridModule:
    """Conjugate M by random invertible matrices at every vertex."""
    rng = np.random.RandomState(seed)
    g = {}
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        d = M.dim(vidx)
        if d == 0:
            continue
        while True:
            a = rng.randint(0, M.p, size=(d, d)).astype(np.int64)
            if field.is_invertible(a, M.p):
                g[vidx] = a
                break
    steps = {}
    for (vidx, k), m in M.steps.items():
        w = M.succ(vidx, k)
        a = g.get(tuple(w))
        b = g.get(tuple(vidx))
        if a is None or b is None:
            continue
        steps[(vidx, k)] = field.mmul(field.mmul(a, m, M.p), field.minv(b, M.p), M.p)
    return GridModule(M.grid, M.dims.copy(), steps, M.p)


# -- hom spaces --------------------------------------------------------------

def hom_space(M: GridModule, N: GridModule):
    """A basis of the space of natural transformations M -> N.

    Requires M and N on the same grid (use common_refinement otherwise).
    Sweeps the grid in lexicographic order keeping a parametric description
    of all partial solutions, so the cost stays local even on large grids.
    """
    if M.grid != N.grid:
        raise ValueError("hom_space requires a common grid")
    if M.p != N.p:
        raise ValueError("mixed primes")
    p = M.p
    shape = M.grid.shape
    n = M.grid.n

    D = 0                 # current number of free parameters
    B = {}                # vidx -> matrix (dN*dM x D) in current parameters
    remaining = {}        # how many successors still need B[vidx]
    keep = {}             # vidx -> matrix kept for final reconstruction
    events = []           # (transform old_params x new_params) applied so far
    epoch_of = {}         # vidx -> epoch index at which keep[vidx] was stored

    def apply_event(T):
        nonlocal D
        for u in B:
            B[u] = field.mmul(B[u], T, p) if B[u].size else field.zeros(B[u].shape[0], T.shape[1])
        events.append(T)
        D = T.shape[1]

    for vidx in np.ndindex(shape):
        vidx = tuple(vidx)
        dm, dn = M.dim(vidx), N.dim(vidx)
        m = dm * dn
        # assemble equations  E x = C t  from all incoming edges
        E_rows, C_rows = [], []
        for k in range(n):
            if vidx[k] == 0:
                continue
            u = list(vidx)
            u[k] -= 1
            u = tuple(u)
            du_m, du_n = M.dim(u), N.dim(u)
            rows = dn * du_m
            if rows == 0:
                continue
            stepM = M.step(u, k)      # dm x du_m
            stepN = N.step(u, k)      # dn x du_n
            E = np.kron(field.eye(dn), stepM.T) % p if m else field.zeros(rows, 0)
            Bu = B.get(u)
            if Bu is None or du_n == 0:
                C = field.zeros(rows, D)
            else:
                C = field.mmul(np.kron(stepN, field.eye(du_m)) % p, Bu, p)
            E_rows.append(E)
            C_rows.append(C)
        if E_rows:
            E = np.concatenate(E_rows, axis=0)
            C = np.concatenate(C_rows, axis=0)
            aug = np.concatenate([E, C], axis=1)
            R, piv = rref(aug, p)
            x_piv = [c for c in piv if c < m]
            # consistency constraints: reduced rows whose x-part vanished
            cons = R[len(x_piv):, m:]
            if cons.size and cons.any():
                K = field.nullspace(cons, p)
            else:
                K = field.eye(D)
            free_cols = [j for j in range(m) if j not in x_piv]
            nf = len(free_cols)
            Dnew = K.shape[1] + nf
            if K.shape != (D, D) or not np.array_equal(K, field.eye(D)) or nf:
                T = field.zeros(D, Dnew)
                T[:, :K.shape[1]] = K
                apply_event(T)
                newD = Dnew
            else:
                newD = D
            # express x in the new parameters (restricted t', then fresh s)
            X = field.zeros(m, newD)
            for j, col in enumerate(free_cols):
                X[col, K.shape[1] + j] = 1
            for i, pc in enumerate(x_piv):
                # x_pc = R[i, m:] t  -  sum_free R[i, j] x_j,  with t = K t'
                X[pc, :K.shape[1]] = field.mmul(R[i:i + 1, m:], K, p)[0]
                for j, col in enumerate(free_cols):
                    X[pc, K.shape[1] + j] = (-R[i, col]) % p
        else:
            # no incoming constraints: every entry is a fresh parameter
            if m:
                T = field.zeros(D, D + m)
                T[:, :D] = field.eye(D)
                apply_event(T)
                X = field.zeros(m, D)
                X[:, D - m:] = field.eye(m)
            else:
                X = field.zeros(0, D)
        B[vidx] = X
        keep[vidx] = X
        epoch_of[vidx] = len(events)
        # drop predecessor rows no longer needed
        for k in range(n):
            if vidx[k] > 0:
                u = list(vidx)
                u[k] -= 1
                u = tuple(u)
                remaining[u] = remaining.get(u, sum(1 for a in range(n)
                                                    if u[a] + 1 < shape[a])) - 1
                if remaining[u] == 0 and u in B:
                    del B[u]
        live = sum(1 for a in range(n) if vidx[a] + 1 < shape[a])
        if live == 0 and vidx in B:
            del B[vidx]

    # pull every kept matrix into the final parameter space
    suffix = [None] * (len(events) + 1)
    suffix[len(events)] = field.eye(D)
    for e in range(len(events) - 1, -1, -1):
        suffix[e] = field.mmul(events[e], suffix[e + 1], p)

    basis = []
    final = {}
    for vidx, X in keep.items():
        S = suffix[epoch_of[vidx]]
        final[vidx] = field.mmul(X, S, p) if X.size else field.zeros(X.shape[0], D)
    for j in range(D):
        mats = {}
        for vidx, Xf in final.items():
            dm, dn = M.dim(vidx), N.dim(vidx)
            if dm * dn == 0:
                continue
            comp = Xf[:, j].reshape(dn, dm)
            if comp.any():
                mats[vidx] = comp.copy()
        basis.append(ModuleMorphism(M, N, mats))
    return basis


class IsoResult:
    def __init__(self, isomorphic: bool, witness, definitive: bool):
        self.isomorphic = isomorphic
        self.witness = witness
        self.definitive = definitive

    def __bool__(self):
        return self.isomorphic


def is_isomorphic(M: GridModule, N: GridModule, trials: int = 64,
                  seed: int = 0) -> IsoResult:
    """Decide isomorphism of two modules on a common grid.

    Positive answers come with a verified witness.  Negative answers are
    definitive when dimensions differ or Hom is too small; otherwise they are
    certified by exhaustion for small search spaces and reported as
    non-definitive after `trials` random attempts for large ones.
    """
    if M.grid != N.grid:
        raise ValueError("is_isomorphic requires a common grid")
    if not np.array_equal(M.dims, N.dims):
        return IsoResult(False, None, True)
    if M.total_dim() == 0:
        return IsoResult(True, ModuleMorphism(M, N, {}), True)
    basis = hom_space(M, N)
    d = len(basis)
    if d == 0:
        return IsoResult(False, None, True)
    rng = np.random.RandomState(seed)
    for _ in range(trials):
        coeffs = rng.randint(0, M.p, size=d)
        f = ModuleMorphism.linear_combination(basis, coeffs, M.p)
        if f.is_isomorphism():
            return IsoResult(True, f, True)
    if M.p ** d <= 4096:
        for coeffs in product(range(M.p), repeat=d):
            f = ModuleMorphism.linear_combination(basis, coeffs, M.p)
            if f.is_isomorphism():
                return IsoResult(True, f, True)
        return IsoResult(False, None, True)
    return IsoResult(False, None, False)
