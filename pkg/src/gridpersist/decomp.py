"""Decomposing modules into indecomposables via their endomorphism algebras.

A module is indecomposable iff its endomorphism algebra is local.  Locality
is decided exactly: the radical is the kernel of the trace bilinear form of
the regular representation (valid for p > dim End, asserted per call), and
the semisimple quotient is a division algebra iff it is commutative with a
one-dimensional Frobenius-fixed subspace.  Splittings come from lifting a
nontrivial idempotent of the quotient and taking pointwise image and kernel.
"""

from __future__ import annotations

import numpy as np

from . import field
from .core import GridModule, ModuleMorphism, direct_sum, hom_space
from .kan import compress


# -- tiny dense polynomial helpers over F_p (ascending coefficients) ----------

def _ptrim(a):
    while a and a[-1] == 0:
        a.pop()
    return a

def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _ptrim(out)

def _pmod(a, b, p):
    a = list(a)
    db, lead = len(b) - 1, b[-1]
    inv = field.minv_scalar(lead, p)
    while len(a) - 1 >= db and a:
        c = a[-1] * inv % p
        if c:
            for i in range(db + 1):
                a[len(a) - 1 - db + i] = (a[len(a) - 1 - db + i] - c * b[i]) % p
        a.pop()
        _ptrim(a)
    return a

def _pdivmod(a, b, p):
    a = list(a)
    db, lead = len(b) - 1, b[-1]
    inv = field.minv_scalar(lead, p)
    q = [0] * max(len(a) - db, 0)
    while len(a) - 1 >= db and a:
        c = a[-1] * inv % p
        q[len(a) - 1 - db] = c
        if c:
            for i in range(db + 1):
                a[len(a) - 1 - db + i] = (a[len(a) - 1 - db + i] - c * b[i]) % p
        a.pop()
        _ptrim(a)
    return _ptrim(q), a

def _pgcd(a, b, p):
    a, b = list(a), list(b)
    while b:
        a, b = b, _pmod(a, b, p)
    if a:
        inv = field.minv_scalar(a[-1], p)
        a = [x * inv % p for x in a]
    return a

def _pxgcd(a, b, p):
    """(g, u, v) with u a + v b = g, g monic."""
    r0, r1 = list(a), list(b)
    s0, s1 = [1], []
    t0, t1 = [], [1]
    while r1:
        q, r = _pdivmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, _ptrim([(x - y) % p for x, y in
                             _zippad(s0, _pmul(q, s1, p))])
        t0, t1 = t1, _ptrim([(x - y) % p for x, y in
                             _zippad(t0, _pmul(q, t1, p))])
    if r0:
        inv = field.minv_scalar(r0[-1], p)
        r0 = [x * inv % p for x in r0]
        s0 = [x * inv % p for x in s0]
        t0 = [x * inv % p for x in t0]
    return r0, s0, t0

def _zippad(a, b):
    k = max(len(a), len(b))
    return zip(a + [0] * (k - len(a)), b + [0] * (k - len(b)))

def _ppowmod(base, e, mod, p):
    result = [1]
    base = _pmod(base, mod, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, base, p), mod, p)
        base = _pmod(_pmul(base, base, p), mod, p)
        e >>= 1
    return result

def _poly_roots(g, p, rng):
    """All roots in F_p of a squarefree product of linear factors."""
    g = [x % p for x in g]
    if len(g) - 1 <= 0:
        return []
    if len(g) == 2:
        return [(-g[0]) * field.minv_scalar(g[1], p) % p]
    if p <= 64:
        return [x for x in range(p) if _peval(g, x, p) == 0]
    for _ in range(200):
        a = int(rng.randint(0, p))
        h = _ppowmod([a, 1], (p - 1) // 2, g, p)
        h = _ptrim([(h[0] - 1) % p] + h[1:]) if h else [p - 1]
        d = _pgcd(h, g, p)
        if 0 < len(d) - 1 < len(g) - 1:
            q, _ = _pdivmod(g, d, p)
            return _poly_roots(d, p, rng) + _poly_roots(q, p, rng)
    raise RuntimeError("root splitting failed")

def _peval(g, x, p):
    acc = 0
    for c in reversed(g):
        acc = (acc * x + c) % p
    return acc


# -- endomorphism algebras -----------------------------------------------------

class EndAlgebra:
    """End(M) in a fixed basis, with structure constants and a solver for
    expressing arbitrary endomorphisms in that basis."""

    def __init__(self, M: GridModule):
        self.module = M
        self.p = M.p
        self.basis = hom_space(M, M)
        self.dim = len(self.basis)
        self._verts = [tuple(v) for v in M.grid.vertices() if M.dim(tuple(v)) > 0]
        cols = []
        for f in self.basis:
            cols.append(np.concatenate([f.at(v).ravel() for v in self._verts])
                        if self._verts else np.zeros(0, dtype=np.int64))
        self._vecmat = (np.stack(cols, axis=1) if cols
                        else field.zeros(sum(M.dim(v) ** 2 for v in self._verts), 0))
        if self.dim:
            self.table = self._structure_constants()
            self.one = self.coords_of(ModuleMorphism.identity(M))
        else:
            self.table = np.zeros((0, 0, 0), dtype=np.int64)
            self.one = np.zeros(0, dtype=np.int64)

    def _vec(self, f: ModuleMorphism):
        return (np.concatenate([f.at(v).ravel() for v in self._verts])
                if self._verts else np.zeros(0, dtype=np.int64))

    def coords_of(self, f: ModuleMorphism) -> np.ndarray:
        c = field.solve(self._vecmat, self._vec(f), self.p)
        if c is None:
            raise ValueError("endomorphism not in the computed basis span")
        return c

    def morphism_of(self, coords) -> ModuleMorphism:
        return ModuleMorphism.linear_combination(self.basis, coords, self.p)

    def _structure_constants(self):
        D, p = self.dim, self.p
        # vec(f_i o f_j) for all pairs, assembled vertexwise in one batch
        prod_vecs = None
        for v in self._verts:
            mats = np.stack([f.at(v) for f in self.basis])  # D x d x d
            pr = np.einsum("iab,jbc->ijac", mats, mats) % p
            flat = pr.reshape(D * D, -1)
            prod_vecs = flat if prod_vecs is None else np.concatenate(
                [prod_vecs, flat], axis=1)
        if prod_vecs is None:
            prod_vecs = field.zeros(D * D, 0)
        coeffs = field.solve(self._vecmat, prod_vecs.T % p, p)
        if coeffs is None:
            raise ValueError("composition left the basis span")
        # table[i, j, k]: coefficient of basis k in f_i o f_j
        return coeffs.T.reshape(D, D, self.dim) % p

    # element arithmetic in coordinates
    def mul(self, x, y):
        return np.einsum("i,j,ijk->k", x % self.p, y % self.p, self.table) % self.p

    def power(self, x, e: int):
        acc = self.one.copy()
        base = x % self.p
        while e:
            if e & 1:
                acc = self.mul(acc, base)
            base = self.mul(base, base)
            e >>= 1
        return acc

    def min_poly(self, x):
        """Monic minimal polynomial of x, ascending coefficients."""
        rows = [self.one % self.p]
        cur = self.one
        while True:
            cur = self.mul(cur, x)
            A = np.stack(rows, axis=1)
            sol = field.solve(A, cur, self.p)
            if sol is not None:
                return [(-int(c)) % self.p for c in sol] + [1]
            rows.append(cur)

    def eval_poly(self, g, x):
        acc = np.zeros(self.dim, dtype=np.int64)
        for c in reversed(g):
            acc = (self.mul(acc, x) + c * self.one) % self.p
        return acc


def end_algebra(M: GridModule) -> EndAlgebra:
    return EndAlgebra(M)


def radical(A: EndAlgebra) -> np.ndarray:
    """Basis (columns) of the Jacobson radical, via the trace form of the
    regular representation.  Requires p > dim A."""
    if A.p <= A.dim:
        raise ValueError(f"radical via trace form needs p > dim End = {A.dim}")
    if A.dim == 0:
        return field.zeros(0, 0)
    # L_i: left multiplication by basis i;  G_ij = tr(L_i L_j)
    L = A.table.transpose(0, 2, 1) % A.p          # L[i][k, j] = c_{ij}^k
    G = np.einsum("ikm,jmk->ij", L, L) % A.p
    return field.nullspace(G, A.p)


class _Quotient:
    """The semisimple quotient B = A / rad in a complement basis."""

    def __init__(self, A: EndAlgebra, rad: np.ndarray):
        self.p = A.p
        self.A = A
        D, r = A.dim, rad.shape[1]
        piv = set(field.rref(rad.T, A.p)[1]) if r else set()
        comp_idx = [j for j in range(D) if j not in piv]
        C = field.zeros(D, len(comp_idx))
        for k, j in enumerate(comp_idx):
            C[j, k] = 1
        self.embed_mat = C                      # B coords -> A coords
        full = np.concatenate([C, rad], axis=1) if r else C
        inv = field.minv(full, A.p)
        self.project_mat = inv[: len(comp_idx)]  # A coords -> B coords
        self.dim = len(comp_idx)
        self.one = self.project(A.one)

    def project(self, x):
        return field.mmul(self.project_mat, np.asarray(x).reshape(-1, 1), self.p)[:, 0]

    def embed(self, b):
        return field.mmul(self.embed_mat, np.asarray(b).reshape(-1, 1), self.p)[:, 0]

    def mul(self, b1, b2):
        return self.project(self.A.mul(self.embed(b1), self.embed(b2)))

    def power(self, b, e):
        acc = self.one.copy()
        base = b % self.p
        while e:
            if e & 1:
                acc = self.mul(acc, base)
            base = self.mul(base, base)
            e >>= 1
        return acc

    def is_commutative(self) -> bool:
        for i in range(self.dim):
            ei = np.eye(self.dim, dtype=np.int64)[i]
            for j in range(i + 1, self.dim):
                ej = np.eye(self.dim, dtype=np.int64)[j]
                if not np.array_equal(self.mul(ei, ej), self.mul(ej, ei)):
                    return False
        return True

    def frobenius_fixed_dim(self) -> int:
        """dim of {x : x^p = x}; the number of simple factors when
        commutative."""
        F = np.stack([self.power(np.eye(self.dim, dtype=np.int64)[i], self.p)
                      for i in range(self.dim)], axis=1)
        return field.nullspace((F - field.eye(self.dim)) % self.p, self.p).shape[1]

    def frobenius_fixed_basis(self) -> np.ndarray:
        F = np.stack([self.power(np.eye(self.dim, dtype=np.int64)[i], self.p)
                      for i in range(self.dim)], axis=1)
        return field.nullspace((F - field.eye(self.dim)) % self.p, self.p)

    def min_poly(self, b):
        rows = [self.one % self.p]
        cur = self.one.copy()
        while True:
            cur = self.mul(cur, b)
            A = np.stack(rows, axis=1)
            sol = field.solve(A, cur, self.p)
            if sol is not None:
                return [(-int(c)) % self.p for c in sol] + [1]
            rows.append(cur)

    def eval_poly(self, g, b):
        acc = np.zeros(self.dim, dtype=np.int64)
        for c in reversed(g):
            acc = (self.mul(acc, b) + c * self.one) % self.p
        return acc


def is_indecomposable(M: GridModule) -> bool:
    """True iff M is nonzero with local endomorphism algebra."""
    if M.total_dim() == 0:
        return False
    A = end_algebra(compress(M))
    return _is_local(A)


def _is_local(A: EndAlgebra) -> bool:
    if A.p <= A.dim:
        # trace form unavailable; locality <=> only trivial idempotents,
        # decidable by exhaustion for small fields
        return _enumerate_idempotent(A) is None
    rad = radical(A)
    B = _Quotient(A, rad)
    if B.dim == 1:
        return True
    if not B.is_commutative():
        return False  # a noncommutative division algebra over F_p cannot exist
    return B.frobenius_fixed_dim() == 1


def _enumerate_idempotent(A: EndAlgebra):
    """Exhaustive search for a nontrivial idempotent (small p**dim only)."""
    from itertools import product as iproduct
    if A.p ** A.dim > 1 << 22:
        raise ValueError(f"p={A.p} too small for the trace-form radical and "
                         f"p^dim={A.p}^{A.dim} too large for exhaustion")
    for coeffs in iproduct(range(A.p), repeat=A.dim):
        x = np.array(coeffs, dtype=np.int64)
        if not x.any() or np.array_equal(x, A.one):
            continue
        if np.array_equal(A.mul(x, x), x):
            return x
    return None


def find_idempotent(M: GridModule, seed: int = 0) -> ModuleMorphism:
    """A nontrivial idempotent endomorphism of a decomposable module."""
    A = end_algebra(M)
    if A.dim == 0:
        raise ValueError("zero module has no nontrivial idempotent")
    if A.p <= A.dim:
        e = _enumerate_idempotent(A)
        if e is None:
            raise ValueError("module is indecomposable")
        return A.morphism_of(e)
    rad = radical(A)
    B = _Quotient(A, rad)
    rng = np.random.RandomState(seed)
    e_b = _quotient_idempotent(B, rng)
    # lift through the radical: a -> 3a^2 - 2a^3 converges to an idempotent
    a = B.embed(e_b)
    for _ in range(200):
        sq = A.mul(a, a)
        if np.array_equal(sq, a):
            break
        a = (3 * sq - 2 * A.mul(sq, a)) % A.p
    else:
        raise RuntimeError("idempotent lifting did not converge")
    if not a.any() or np.array_equal(a, A.one):
        raise RuntimeError("lifted idempotent is trivial")
    return A.morphism_of(a)


def _quotient_idempotent(B: _Quotient, rng) -> np.ndarray:
    if B.dim <= 1:
        raise ValueError("quotient algebra is a field; module is indecomposable")
    if B.is_commutative():
        V = B.frobenius_fixed_basis()
        # pick a fixed vector independent from 1
        for j in range(V.shape[1]):
            v = V[:, j]
            if field.rank(np.stack([B.one, v]), B.p) == 2:
                break
        else:
            raise RuntimeError("no splitting element in Frobenius-fixed space")
        g = B.min_poly(v)  # squarefree, splits into distinct linear factors
        roots = _poly_roots(g, B.p, rng)
        if len(roots) < 2:
            raise RuntimeError("fixed element has too few eigenvalues")
        lam = roots[0]
        h, _ = _pdivmod(g, [(-lam) % B.p, 1], B.p)
        scale = field.minv_scalar(_peval(h, lam, B.p), B.p)
        e = (B.eval_poly(h, v) * scale) % B.p
        return e
    # matrix-algebra case: split the minimal polynomial of a random element
    for _ in range(256):
        b = rng.randint(0, B.p, size=B.dim).astype(np.int64)
        g = B.min_poly(b)
        split = _coprime_split(g, B.p, rng)
        if split is None:
            continue
        g1, g2 = split
        _, u, _ = _pxgcd(g1, g2, B.p)
        e = B.eval_poly(_pmod(_pmul(u, g1, B.p), g, B.p), b)
        if e.any() and not np.array_equal(e, B.one) \
                and np.array_equal(B.mul(e, e), e):
            return e
    raise RuntimeError("no idempotent found in matrix algebra quotient")


def _coprime_split(g, p, rng):
    """g = g1 * g2 with gcd(g1, g2) = 1, both nontrivial; None if not found."""
    deg = len(g) - 1
    if deg < 2:
        return None
    # product of distinct linear factors
    u = _pgcd(_ptrim([(a - b) % p for a, b in
                      _zippad(_ppowmod([0, 1], p, g, p), [0, 1])]), g, p)
    if 0 < len(u) - 1 < deg:
        q, r = _pdivmod(g, u, p)
        if not r and len(_pgcd(u, q, p)) == 1:
            return u, q
    if len(u) - 1 == deg:  # splits completely: peel one root off
        roots = _poly_roots(g, p, rng)
        if len(roots) >= 2:
            g1 = [(-roots[0]) % p, 1]
            q, _ = _pdivmod(g, g1, p)
            return g1, q
    return None


# -- splitting a module -------------------------------------------------------

def split_by_idempotent(M: GridModule, e: ModuleMorphism):
    """Split M as image(e) + kernel(e).  Returns (M_im, M_ker, witness) with
    witness a verified isomorphism direct_sum(M_im, M_ker) -> M."""
    bases_im, bases_ker = {}, {}
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        if M.dim(vidx) == 0:
            continue
        ev = e.at(vidx)
        if not np.array_equal(field.mmul(ev, ev, M.p), ev):
            raise ValueError(f"not idempotent at {vidx}")
        bases_im[vidx] = field.column_space(ev, M.p)
        bases_ker[vidx] = field.nullspace(ev, M.p)
        if bases_im[vidx].shape[1] + bases_ker[vidx].shape[1] != M.dim(vidx):
            raise ValueError(f"image and kernel do not complement at {vidx}")
    return _split_by_bases(M, bases_im, bases_ker)


def _split_by_bases(M: GridModule, bases1, bases0):
    p = M.p
    dims1 = np.zeros(M.grid.shape, dtype=np.int64)
    dims0 = np.zeros(M.grid.shape, dtype=np.int64)
    for v, b in bases1.items():
        dims1[v] = b.shape[1]
    for v, b in bases0.items():
        dims0[v] = b.shape[1]
    steps1, steps0 = {}, {}
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        for k in range(M.grid.n):
            if vidx[k] + 1 >= M.grid.shape[k]:
                continue
            w = M.succ(vidx, k)
            st = M.step(vidx, k)
            for dims, bases, steps in ((dims1, bases1, steps1),
                                       (dims0, bases0, steps0)):
                dv, dw = int(dims[vidx]), int(dims[w])
                if dv == 0 or dw == 0:
                    continue
                rhs = field.mmul(st, bases[vidx], p)
                sol = field.solve(bases[w], rhs, p)
                if sol is None:
                    raise ValueError("subspaces are not preserved by the steps")
                steps[(vidx, k)] = sol
    M1 = GridModule(M.grid, dims1, steps1, p)
    M0 = GridModule(M.grid, dims0, steps0, p)
    S, _, _ = direct_sum(M1, M0)
    mats = {}
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        if M.dim(vidx) == 0:
            continue
        b1 = bases1.get(vidx, field.zeros(M.dim(vidx), 0))
        b0 = bases0.get(vidx, field.zeros(M.dim(vidx), 0))
        mats[vidx] = np.concatenate([b1, b0], axis=1)
    W = ModuleMorphism(S, M, mats)
    W.validate()
    if not W.is_isomorphism():
        raise ValueError("split witness is not an isomorphism")
    return M1, M0, W


def fitting_split(M: GridModule, phi: ModuleMorphism):
    """Fitting decomposition along an endomorphism: M = im(phi^N) + ker(phi^N)
    for N large enough to stabilize.  Returns (M_im, M_ker, witness)."""
    N = max(1, M.max_pointwise_dim())
    bases1, bases0 = {}, {}
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        if M.dim(vidx) == 0:
            continue
        a = phi.at(vidx)
        power = field.eye(M.dim(vidx))
        for _ in range(N):
            power = field.mmul(power, a, M.p)
        bases1[vidx] = field.column_space(power, M.p)
        bases0[vidx] = field.nullspace(power, M.p)
        if bases1[vidx].shape[1] + bases0[vidx].shape[1] != M.dim(vidx):
            raise ValueError("power did not stabilize")
    return _split_by_bases(M, bases1, bases0)


# -- full decomposition --------------------------------------------------------

def decompose(M: GridModule, seed: int = 0):
    """Decompose M into indecomposable summands.

    Returns (summands, witness) where witness is a verified isomorphism
    direct_sum(*summands) -> M, all on M's grid.  Summands are ordered by
    (total dimension, dimension vector).  The zero module yields ([], id).
    """
    if M.total_dim() == 0:
        return [], ModuleMorphism(M, M, {})
    summands, witness = _decompose_rec(M, seed)
    order = sorted(range(len(summands)),
                   key=lambda i: (summands[i].total_dim(),
                                  summands[i].dims.ravel().tolist()))
    summands_sorted = [summands[i] for i in order]
    S_sorted, _, _ = direct_sum(*summands_sorted)
    S_orig, _, _ = direct_sum(*summands)
    perm = {}
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        d = S_orig.dim(vidx)
        if d == 0:
            continue
        offs_orig = np.cumsum([0] + [s.dim(vidx) for s in summands])
        offs_sorted = np.cumsum([0] + [s.dim(vidx) for s in summands_sorted])
        mat = field.zeros(d, d)
        for newpos, i in enumerate(order):
            di = summands[i].dim(vidx)
            if di:
                mat[offs_orig[i]:offs_orig[i] + di,
                    offs_sorted[newpos]:offs_sorted[newpos] + di] = field.eye(di)
        perm[vidx] = mat
    P = ModuleMorphism(S_sorted, S_orig, perm)
    W = witness.compose(P)
    W = ModuleMorphism(S_sorted, M, W.mats)
    W.validate()
    if not W.is_isomorphism():
        raise RuntimeError("decomposition witness failed verification")
    return summands_sorted, W


def _decompose_rec(M: GridModule, seed: int):
    if is_indecomposable(M):
        return [M], ModuleMorphism.identity(M)
    e = find_idempotent(M, seed)
    M1, M0, W = split_by_idempotent(M, e)
    s1, w1 = _decompose_rec(M1, seed + 1)
    s0, w0 = _decompose_rec(M0, seed + 1)
    summands = s1 + s0
    S, _, _ = direct_sum(*summands)
    mats = {}
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        if S.dim(vidx) == 0:
            continue
        a, b = w1.at(vidx), w0.at(vidx)
        mat = field.zeros(M1.dim(vidx) + M0.dim(vidx), S.dim(vidx))
        mat[:a.shape[0], :a.shape[1]] = a
        mat[a.shape[0]:, a.shape[1]:] = b
        mats[vidx] = mat
    Wsum = W.compose(ModuleMorphism(S, W.source, mats))
    return summands, ModuleMorphism(S, M, Wsum.mats)
