"""Interleaving certificates and epsilon-triviality, with exact verification.

A certificate for d(M, N) <= eps stores both interleaving morphisms on a
common evaluation grid and re-verifies every naturality square and both
triangle identities from scratch; nothing about how a certificate was built
is trusted downstream.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction

import numpy as np

from . import field
from .core import (Grid, GridModule, ModuleMorphism, as_frac, direct_sum,
                   pt_leq, pt_shift, zero_module)
from .kan import restriction_extension, snap_to_lattice, union_axes


class CertificateError(ValueError):
    pass


# -- epsilon-trivial regions --------------------------------------------------

class TrivialRegion:
    """A finite union of half-open boxes prod [lo_i, hi_i) in R^n."""

    def __init__(self, boxes):
        self.boxes = [tuple((as_frac(lo), as_frac(hi)) for lo, hi in box)
                      for box in boxes]
        for box in self.boxes:
            for lo, hi in box:
                if lo >= hi:
                    raise ValueError("degenerate box")
        self.n = len(self.boxes[0]) if self.boxes else 0

    def contains(self, point) -> bool:
        return any(all(lo <= x < hi for (lo, hi), x in zip(box, point))
                   for box in self.boxes)

    def is_eps_trivial(self, eps) -> bool:
        """True when the region does not meet its own diagonal eps-translate."""
        eps = as_frac(eps)
        if eps <= 0:
            return not self.boxes
        for b1 in self.boxes:
            for b2 in self.boxes:
                # does b1 intersect (b2 + eps)?
                if all(max(lo1, lo2 + eps) < min(hi1, hi2 + eps)
                       for (lo1, hi1), (lo2, hi2) in zip(b1, b2)):
                    return False
        return True

    def corner_coords(self, axis: int):
        out = set()
        for box in self.boxes:
            out.add(box[axis][0])
            out.add(box[axis][1])
        return out


# -- module triviality --------------------------------------------------------

def is_eps_trivial(M: GridModule, eps) -> bool:
    """Does every structure map x -> x + eps of the extension vanish?

    It suffices to test grid vertices: the map at any interior point factors
    through the map at the minimum of its cell.
    """
    eps = as_frac(eps)
    if eps < 0:
        raise ValueError("eps must be >= 0")
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        if M.dim(vidx) == 0:
            continue
        x = M.grid.coord(vidx)
        w = M.grid.floor_index(pt_shift(x, eps))
        m = M.structure_map(vidx, w)
        if m.size and m.any():
            return False
    return True


def triviality_radius(M: GridModule):
    """The infimum of the eps for which M is eps-trivial.

    Returns a Fraction (the set of trivial eps is the closed ray up from it),
    or None when M is not eps-trivial for any eps (unbounded support).
    """
    worst = Fraction(0)
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        if M.dim(vidx) == 0:
            continue
        x = M.grid.coord(vidx)
        thresholds = sorted({c - x[k] for k in range(M.grid.n)
                             for c in M.grid.axes[k] if c > x[k]})
        rho = None
        for eps in thresholds:
            w = M.grid.floor_index(pt_shift(x, eps))
            m = M.structure_map(vidx, w)
            if not (m.size and m.any()):
                rho = eps
                break
        if rho is None:
            top = tuple(s - 1 for s in M.grid.shape)
            m = M.structure_map(vidx, top)
            if m.size and m.any():
                return None  # never becomes zero: support escapes the grid
            rho = thresholds[-1] if thresholds else Fraction(0)
        worst = max(worst, rho)
    return worst


def is_strictly_eps_trivial(M: GridModule, eps) -> bool:
    r = triviality_radius(M)
    return r is not None and r < as_frac(eps)


# -- certificates -------------------------------------------------------------

def certificate_grid(M: GridModule, N: GridModule, eps, extra_axes=None) -> Grid:
    """The evaluation grid for an eps-certificate between M and N: the union
    of both grids, closed downward under -eps and -2eps.  On this grid,
    checking naturality and the triangle identities at vertices decides them
    at every point of R^n."""
    eps = as_frac(eps)
    axes = union_axes(M.grid, N.grid, *( [extra_axes] if extra_axes else [] ))
    out = []
    for ax in axes:
        s = set(ax)
        s |= {c - eps for c in ax} | {c - 2 * eps for c in ax}
        out.append(sorted(s))
    return Grid(out)


class InterleavingCertificate:
    """A claimed eps-interleaving between the extensions of M and N.

    f[v]: M^(v) -> N^(v+eps) and g[v]: N^(v) -> M^(v+eps) for every vertex v
    of the evaluation grid.  verify() re-checks everything exactly.
    """

    def __init__(self, M: GridModule, N: GridModule, eps, grid: Grid, f, g):
        self.m_module = M
        self.n_module = N
        self.eps = as_frac(eps)
        self.grid = grid
        self.f = f
        self.g = g

    def f_at(self, x) -> np.ndarray:
        """Component of the extended f at an arbitrary point x."""
        vidx = self.grid.floor_index(x)
        if vidx is None:
            return field.zeros(self.n_module.dim_at(pt_shift(x, self.eps)), 0)
        m = self.f.get(vidx)
        if m is None:
            v = self.grid.coord(vidx)
            return field.zeros(self.n_module.dim_at(pt_shift(v, self.eps)),
                               self.m_module.dim_at(v))
        return m

    def g_at(self, x) -> np.ndarray:
        vidx = self.grid.floor_index(x)
        if vidx is None:
            return field.zeros(self.m_module.dim_at(pt_shift(x, self.eps)), 0)
        m = self.g.get(vidx)
        if m is None:
            v = self.grid.coord(vidx)
            return field.zeros(self.m_module.dim_at(pt_shift(v, self.eps)),
                               self.n_module.dim_at(v))
        return m

    def verify(self):
        """Exact re-verification; raises CertificateError on any failure."""
        M, N, eps, P = self.m_module, self.n_module, self.eps, self.grid
        if eps < 0:
            raise CertificateError("negative eps")
        need = certificate_grid(M, N, eps)
        for ax_need, ax_have in zip(need.axes, P.axes):
            if not set(ax_need) <= set(ax_have):
                raise CertificateError("evaluation grid too coarse")
        p = M.p
        # per-axis floor tables: for every evaluation-grid coordinate c,
        # the floors of c, c+eps, c+2eps in M's and N's grids and the floor
        # of c+eps in the evaluation grid itself.  All per-vertex lookups
        # below are table reads; no exact arithmetic in the inner loops.
        tables = []
        for k, ax in enumerate(P.axes):
            row = {}
            for tag, shiftv in (("0", 0), ("e", eps), ("2e", 2 * eps)):
                row["m" + tag] = [M.grid._axis_floor(k, c + shiftv) for c in ax]
                row["n" + tag] = [N.grid._axis_floor(k, c + shiftv) for c in ax]
            row["pe"] = [P._axis_floor(k, c + eps) for c in ax]
            tables.append(row)

        def floor_of(vidx, key):
            out = []
            for k, i in enumerate(vidx):
                j = tables[k][key][i]
                if j < 0:
                    return None
                out.append(j)
            return tuple(out)

        def dim_of(mod, fl):
            return 0 if fl is None else mod.dim(fl)

        # refined grids repeat the same data across many vertices; canonical
        # objects per distinct matrix / floor pair let each distinct check
        # run once and be skipped on every repetition
        smap_memo = {}

        def smap(mod, fl_src, fl_tgt):
            key = (mod is N, fl_src, fl_tgt)
            got = smap_memo.get(key)
            if got is None:
                if fl_src is None:
                    got = field.zeros(dim_of(mod, fl_tgt), 0)
                else:
                    got = mod.structure_map(fl_src, fl_tgt)
                smap_memo[key] = got
            return got

        canon = {}

        def cid(mat):
            key = (mat.shape, mat.tobytes())
            got = canon.get(key)
            if got is None:
                canon[key] = mat
                return mat
            return got

        flo = {}
        fmat, gmat = {}, {}
        for vidx in P.vertices():
            vidx = tuple(vidx)
            fl = {key: floor_of(vidx, key)
                  for key in ("m0", "n0", "me", "ne", "m2e", "n2e", "pe")}
            flo[vidx] = fl
            fv = self.f.get(vidx)
            want = (dim_of(N, fl["ne"]), dim_of(M, fl["m0"]))
            if fv is None:
                fv = field.zeros(*want)
            if fv.shape != want:
                raise CertificateError(f"f shape at {vidx}: {fv.shape}")
            fmat[vidx] = cid(fv)
            gv = self.g.get(vidx)
            want = (dim_of(M, fl["me"]), dim_of(N, fl["n0"]))
            if gv is None:
                gv = field.zeros(*want)
            if gv.shape != want:
                raise CertificateError(f"g shape at {vidx}: {gv.shape}")
            gmat[vidx] = cid(gv)
        checked = set()
        for vidx, fl in flo.items():
            # naturality of f and g along each outgoing edge
            for k in range(P.n):
                if vidx[k] + 1 >= P.shape[k]:
                    continue
                widx = vidx[:k] + (vidx[k] + 1,) + vidx[k + 1:]
                fw = flo[widx]
                sm = smap(M, fl["m0"], fw["m0"])
                sn = smap(N, fl["ne"], fw["ne"])
                key = (0, id(fmat[vidx]), id(fmat[widx]), id(sm), id(sn))
                if key not in checked:
                    lhs = field.mmul(fmat[widx], sm, p)
                    rhs = field.mmul(sn, fmat[vidx], p)
                    if not np.array_equal(lhs, rhs):
                        raise CertificateError(
                            f"f naturality fails at {vidx} axis {k}")
                    checked.add(key)
                sn = smap(N, fl["n0"], fw["n0"])
                sm = smap(M, fl["me"], fw["me"])
                key = (1, id(gmat[vidx]), id(gmat[widx]), id(sn), id(sm))
                if key not in checked:
                    lhs = field.mmul(gmat[widx], sn, p)
                    rhs = field.mmul(sm, gmat[vidx], p)
                    if not np.array_equal(lhs, rhs):
                        raise CertificateError(
                            f"g naturality fails at {vidx} axis {k}")
                    checked.add(key)
            # triangle identities g[eps] o f = eta_2eps and f[eps] o g = eta_2eps
            pe = fl["pe"]
            f_up = fmat.get(pe)
            g_up = gmat.get(pe)
            if f_up is None or g_up is None:
                # x + eps fell below the grid: only possible when eps < 0
                raise CertificateError("evaluation grid not closed under -eps")
            sm = smap(M, fl["m0"], fl["m2e"])
            key = (2, id(g_up), id(fmat[vidx]), id(sm))
            if key not in checked:
                if not np.array_equal(field.mmul(g_up, fmat[vidx], p), sm):
                    raise CertificateError(f"triangle g.f fails at {vidx}")
                checked.add(key)
            sn = smap(N, fl["n0"], fl["n2e"])
            key = (3, id(f_up), id(gmat[vidx]), id(sn))
            if key not in checked:
                if not np.array_equal(field.mmul(f_up, gmat[vidx], p), sn):
                    raise CertificateError(f"triangle f.g fails at {vidx}")
                checked.add(key)
        return True

    def is_valid(self) -> bool:
        try:
            return self.verify()
        except CertificateError:
            return False

    def flip(self) -> "InterleavingCertificate":
        return InterleavingCertificate(self.n_module, self.m_module, self.eps,
                                       self.grid, self.g, self.f)

    def __repr__(self):
        return (f"InterleavingCertificate(eps={self.eps}, "
                f"grid_shape={self.grid.shape})")


_MISS = object()


def _fill(M, N, eps, grid, component, tables=None):
    """Populate a certificate component dict from a per-point rule.

    tables, when given, is a list of per-axis signature rows (row[k][i] for
    axis k, coordinate index i) such that the rule's value depends on the
    vertex only through its signature; vertices with equal signatures then
    share a single evaluation.
    """
    out = {}
    if tables is None:
        for vidx in grid.vertices():
            vidx = tuple(vidx)
            m = component(grid.coord(vidx))
            if m.size and m.any():
                out[vidx] = m
        return out
    memo = {}
    for vidx in grid.vertices():
        vidx = tuple(vidx)
        key = tuple(row[k][i] for row in tables for k, i in enumerate(vidx))
        got = memo.get(key, _MISS)
        if got is _MISS:
            m = component(grid.coord(vidx))
            got = m if m.size and m.any() else None
            memo[key] = got
        if got is not None:
            out[vidx] = got
    return out


def _floor_tables(mod_grid, grid, shift=0):
    """Per-axis floor indices of grid's coordinates (shifted) in mod_grid."""
    return [[mod_grid._axis_floor(k, c + shift) for c in ax]
            for k, ax in enumerate(grid.axes)]


def identity_certificate(M: GridModule, eps,
                         verify: bool = True) -> InterleavingCertificate:
    """The certificate d(M, M) <= eps via shift units."""
    eps = as_frac(eps)
    grid = certificate_grid(M, M, eps)
    rule = lambda x: M.structure_map_points(x, pt_shift(x, eps))
    tables = [_floor_tables(M.grid, grid), _floor_tables(M.grid, grid, eps)]
    fdict = _fill(M, M, eps, grid, rule, tables)
    cert = InterleavingCertificate(M, M, eps, grid, fdict, dict(fdict))
    if verify:
        cert.verify()
    return cert


def trivial_certificate(M: GridModule, eps) -> InterleavingCertificate:
    """Certificate d(M, 0) <= eps; valid exactly when M is 2eps-trivial."""
    eps = as_frac(eps)
    Z = zero_module(M.grid.n, M.p)
    grid = certificate_grid(M, Z, eps)
    cert = InterleavingCertificate(M, Z, eps, grid, {}, {})
    cert.verify()
    return cert


def compose_chain(certs, verify: bool = True) -> InterleavingCertificate:
    """Compose a chain of certificates d(M_0,M_1) <= e_1, ...,
    d(M_{t-1},M_t) <= e_t into one for d(M_0, M_t) <= sum e_i.

    Adjacent middle modules must have equal extensions.  The composite is
    assembled in a single pass (no intermediate certificates) and verified
    unless verify=False; skipping only makes sense when the result feeds a
    later composition that is itself verified.
    """
    certs = list(certs)
    if not certs:
        raise CertificateError("empty chain")
    if verify:
        # without verification the composite is checked by whoever verifies
        # the returned certificate; with it, catch mismatched middles early
        for c1, c2 in zip(certs, certs[1:]):
            _require_same_module(c1.n_module, c2.m_module)
    M, L = certs[0].m_module, certs[-1].n_module
    eps = sum(c.eps for c in certs)
    # the composite is natural, hence constant on cells of the refinement of
    # the two endpoint grids; middle grids need not appear here
    grid = certificate_grid(M, L, eps)
    p = M.p

    # per chain element, per axis: floor indices (in that certificate's own
    # grid) of the evaluation coordinates shifted by the cumulative
    # interleaving shift.  A missing or zero component anywhere in the chain
    # makes the composite component zero, so those vertices are skipped.
    def stages(ordered, comps):
        out, s = [], 0
        for c, comp in zip(ordered, comps):
            tabs = [[c.grid._axis_floor(k, coord + s) for coord in ax]
                    for k, ax in enumerate(grid.axes)]
            out.append((comp, tabs))
            s += c.eps
        return out

    def fill(stage_list):
        out = {}
        for vidx in grid.vertices():
            vidx = tuple(vidx)
            m = None
            for comp, tabs in stage_list:
                fl = tuple(tabs[k][i] for k, i in enumerate(vidx))
                mat = None if -1 in fl else comp.get(fl)
                if mat is None or not mat.size:
                    m = None
                    break
                m = mat if m is None else field.mmul(mat, m, p)
            if m is not None and m.any():
                out[vidx] = m
        return out

    fdict = fill(stages(certs, [c.f for c in certs]))
    gdict = fill(stages(list(reversed(certs)),
                        [c.g for c in reversed(certs)]))
    cert = InterleavingCertificate(M, L, eps, grid, fdict, gdict)
    if verify:
        cert.verify()
    return cert


def compose_certificates(c1: InterleavingCertificate,
                         c2: InterleavingCertificate,
                         verify: bool = True) -> InterleavingCertificate:
    """From d(M,N) <= e1 and d(N,L) <= e2, certify d(M,L) <= e1+e2."""
    return compose_chain([c1, c2], verify=verify)


def _require_same_module(A: GridModule, B: GridModule):
    """The middle modules of a composition must have equal extensions (the
    certificates' components then refer to the same value spaces); comparing
    data on the union grid decides this."""
    if A is B:
        return
    if A.p != B.p or A.grid.n != B.grid.n:
        raise CertificateError("middle modules do not match")
    if A.grid != B.grid:
        g = Grid(union_axes(A.grid, B.grid))
        A = restriction_extension(A, g)
        B = restriction_extension(B, g)
    if not np.array_equal(A.dims, B.dims):
        raise CertificateError("middle modules do not match")
    # edges carried by neither dict are zero maps on both sides
    for vidx, k in set(A.steps) | set(B.steps):
        if not np.array_equal(A.step(vidx, k), B.step(vidx, k)):
            raise CertificateError("middle modules do not match")


def pair_sum_certificates(c1: InterleavingCertificate,
                          c2: InterleavingCertificate,
                          verify: bool = True):
    """Block sum: from d(A,B) <= eps and d(C,D) <= eps, certify
    d(A+C, B+D) <= eps.  Returns (cert, A+C, B+D)."""
    if c1.eps != c2.eps:
        raise CertificateError("pair_sum requires equal eps (weaken first)")
    eps = c1.eps
    A, B = c1.m_module, c1.n_module
    C, D = c2.m_module, c2.n_module
    gm = Grid(union_axes(A.grid, C.grid))
    gn = Grid(union_axes(B.grid, D.grid))
    S1, _, _ = direct_sum(restriction_extension(A, gm),
                          restriction_extension(C, gm))
    S2, _, _ = direct_sum(restriction_extension(B, gn),
                          restriction_extension(D, gn))
    grid = certificate_grid(S1, S2, eps)

    # all lookups below are per-axis floor tables; no exact arithmetic in
    # the vertex loop
    t1 = _floor_tables(c1.grid, grid)
    t2 = _floor_tables(c2.grid, grid)
    mod_tabs = {}
    for name, X in (("A0", A), ("B0", B), ("C0", C), ("D0", D)):
        mod_tabs[name] = _floor_tables(X.grid, grid)
        mod_tabs[name[0] + "e"] = _floor_tables(X.grid, grid, eps)

    def dim_from(mod, tab, vidx):
        fl = tuple(tab[k][i] for k, i in enumerate(vidx))
        return 0 if -1 in fl else mod.dim(fl)

    def fill(d1, d2, row1, col1, row2, col2):
        out = {}
        for vidx in grid.vertices():
            vidx = tuple(vidx)
            fl1 = tuple(t1[k][i] for k, i in enumerate(vidx))
            v1 = None if -1 in fl1 else d1.get(fl1)
            fl2 = tuple(t2[k][i] for k, i in enumerate(vidx))
            v2 = None if -1 in fl2 else d2.get(fl2)
            if v1 is None and v2 is None:
                continue
            r1, c1d = ((v1.shape if v1 is not None else
                        (dim_from(row1[0], mod_tabs[row1[1]], vidx),
                         dim_from(col1[0], mod_tabs[col1[1]], vidx))))
            r2, c2d = ((v2.shape if v2 is not None else
                        (dim_from(row2[0], mod_tabs[row2[1]], vidx),
                         dim_from(col2[0], mod_tabs[col2[1]], vidx))))
            m = field.zeros(r1 + r2, c1d + c2d)
            if v1 is not None:
                m[:r1, :c1d] = v1
            if v2 is not None:
                m[r1:, c1d:] = v2
            if m.size and m.any():
                out[vidx] = m
        return out

    fdict = fill(c1.f, c2.f, (B, "Be"), (A, "A0"), (D, "De"), (C, "C0"))
    gdict = fill(c1.g, c2.g, (A, "Ae"), (B, "B0"), (C, "Ce"), (D, "D0"))
    cert = InterleavingCertificate(S1, S2, eps, grid, fdict, gdict)
    if verify:
        cert.verify()
    return cert, S1, S2


def sum_certificates(c: InterleavingCertificate, X: GridModule):
    """Certify d(M + X, N + X) <= eps from d(M, N) <= eps."""
    return pair_sum_certificates(c, identity_certificate(X, c.eps))


sum_certificate = sum_certificates


def weaken_certificate(c: InterleavingCertificate, eps2) -> InterleavingCertificate:
    """Relax a certificate to a larger eps."""
    eps2 = as_frac(eps2)
    if eps2 < c.eps:
        raise CertificateError("can only weaken to a larger eps")
    if eps2 == c.eps:
        return c
    M, N, p = c.m_module, c.n_module, c.m_module.p
    d = eps2 - c.eps
    grid = certificate_grid(M, N, eps2)
    frule = lambda x: field.mmul(
        N.structure_map_points(pt_shift(x, c.eps), pt_shift(x, eps2)),
        c.f_at(x), p)
    grule = lambda x: field.mmul(
        M.structure_map_points(pt_shift(x, c.eps), pt_shift(x, eps2)),
        c.g_at(x), p)
    cert = InterleavingCertificate(M, N, eps2, grid,
                                   _fill(M, N, eps2, grid, frule),
                                   _fill(M, N, eps2, grid, grule))
    cert.verify()
    return cert


def snap_certificate(M: GridModule, pitch, margin_cells: int = 6):
    """Snap M to the (pitch Z)^n lattice and certify d(M, snap) <= pitch.

    Returns (L, cert)."""
    pitch = as_frac(pitch)
    L = snap_to_lattice(M, pitch, margin_cells)
    grid = certificate_grid(M, L, pitch)
    p = M.p

    def frule(x):
        # M(x) -> L(x + pitch) = M(floor_lattice(x + pitch)), a point >= x
        tgt = L.grid.floor_index(pt_shift(x, pitch))
        tgt_pt = x if tgt is None else L.grid.coord(tgt)
        if tgt is None or not pt_leq(x, tgt_pt):
            return field.zeros(L.dim_at(pt_shift(x, pitch)), M.dim_at(x))
        fi = M.grid.floor_index(x)
        if fi is None:
            return field.zeros(L.dim_at(pt_shift(x, pitch)), 0)
        return M.structure_map(fi, M.grid.floor_index(tgt_pt))

    def grule(x):
        # L(x) = M(floor_lattice(x)) -> M(x + pitch)
        src = L.grid.floor_index(x)
        if src is None:
            return field.zeros(M.dim_at(pt_shift(x, pitch)), 0)
        src_pt = L.grid.coord(src)
        fi = M.grid.floor_index(src_pt)
        if fi is None:
            return field.zeros(M.dim_at(pt_shift(x, pitch)), 0)
        return M.structure_map(fi, M.grid.floor_index(pt_shift(x, pitch)))

    cert = InterleavingCertificate(M, L, pitch, grid,
                                   _fill(M, L, pitch, grid, frule),
                                   _fill(M, L, pitch, grid, grule))
    cert.verify()
    return L, cert


def local_change_certificate(M: GridModule, M2: GridModule,
                             region: TrivialRegion, eps,
                             verify: bool = True) -> InterleavingCertificate:
    """Certify d(M, M2) <= eps when M and M2 agree outside an eps-trivial
    region U: use M's own structure maps inside U and M2's outside (and
    symmetrically), then verify the interleaving exactly.  verify=False
    defers soundness to a later verification of a composite containing this
    certificate."""
    eps = as_frac(eps)
    if not region.is_eps_trivial(eps):
        raise CertificateError("region is not eps-trivial")
    if M.p != M2.p or M.grid.n != M2.grid.n:
        raise CertificateError("incompatible modules")
    extra = [sorted(region.corner_coords(k)) for k in range(M.grid.n)]
    grid = certificate_grid(M, M2, eps, extra_axes=extra)
    # everything below depends on a vertex only through its floors in the two
    # module grids and its per-box region membership, so those serve as
    # memoization signatures
    tm0, tme = _floor_tables(M.grid, grid), _floor_tables(M.grid, grid, eps)
    t20, t2e = _floor_tables(M2.grid, grid), _floor_tables(M2.grid, grid, eps)
    memb = [[[bool(lo <= c < hi) for c in ax]
             for (lo, hi), ax in zip(box, grid.axes)]
            for box in region.boxes]
    smap_memo = {}

    def smap(mod, flag, fl_src, fl_tgt):
        # the eps-shift structure map of mod's extension, or None when zero
        if -1 in fl_src:
            return None
        key = (flag, fl_src, fl_tgt)
        got = smap_memo.get(key, _MISS)
        if got is _MISS:
            m = mod.structure_map(fl_src, fl_tgt)
            got = m if m.size and m.any() else None
            smap_memo[key] = got
        return got

    fdict, gdict = {}, {}
    for vidx in grid.vertices():
        vidx = tuple(vidx)
        inside = any(all(mb[k][i] for k, i in enumerate(vidx)) for mb in memb)
        fm0 = tuple(tm0[k][i] for k, i in enumerate(vidx))
        fme = tuple(tme[k][i] for k, i in enumerate(vidx))
        f20 = tuple(t20[k][i] for k, i in enumerate(vidx))
        f2e = tuple(t2e[k][i] for k, i in enumerate(vidx))
        if not inside:
            dm = 0 if -1 in fm0 else M.dim(fm0)
            d2 = 0 if -1 in f20 else M2.dim(f20)
            if dm != d2:
                raise CertificateError(
                    f"modules differ outside the region at {grid.coord(vidx)}")
        own = smap(M, 0, fm0, fme)
        other = smap(M2, 1, f20, f2e)
        fv, gv = (own, other) if inside else (other, own)
        if fv is not None:
            fdict[vidx] = fv
        if gv is not None:
            gdict[vidx] = gv
    cert = InterleavingCertificate(M, M2, eps, grid, fdict, gdict)
    if verify:
        cert.verify()
    return cert


# -- rank obstruction ---------------------------------------------------------

def rank_lower_bound(M: GridModule, N: GridModule, max_candidates: int = 96):
    """A certified lower bound for the interleaving distance of M and N.

    If an eps-interleaving existed, every rank rk(M(a) -> M(b)) with
    b - a >= 2 eps would be bounded by rk(N(a+eps) -> N(b-eps)).  The sweep
    tests exact windows at candidate eps drawn from half-differences of grid
    coordinates (and their 9/10 multiples, to witness open-ended windows);
    any violated candidate is a sound bound.  Returns a Fraction (0 when no
    obstruction is found).
    """
    cands = set()
    for A in (M, N):
        coords = sorted({c for ax in A.grid.axes for c in ax})
        for i, c1 in enumerate(coords):
            for c2 in coords[i + 1:]:
                h = (c2 - c1) / 2
                cands.add(h)
                cands.add(h * Fraction(9, 10))
    cands = sorted(cands, reverse=True)[: 2 * max_candidates]
    for eps in cands:
        if _rank_violation(M, N, eps) or _rank_violation(N, M, eps):
            return eps
    return Fraction(0)


def _rank_violation(M: GridModule, N: GridModule, eps) -> bool:
    """Is there a window witnessing rk_M > rk_N at shift eps?"""
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        if M.dim(vidx) == 0:
            continue
        a = M.grid.coord(vidx)
        # smallest admissible upper cell: the one containing a + 2 eps,
        # provided its supremum strictly exceeds a + 2 eps on every axis
        vb = []
        sup = []
        ok = True
        for k, x in enumerate(a):
            ax = M.grid.axes[k]
            t = x + 2 * eps
            j = bisect_right(ax, t) - 1
            if j < 0:
                ok = False
                break
            nxt = ax[j + 1] if j + 1 < len(ax) else None
            if nxt is not None and nxt <= t:
                ok = False
                break
            vb.append(j)
            sup.append(nxt)
        if not ok:
            continue
        r_m = field.rank(M.structure_map(vidx, tuple(vb)), M.p)
        if r_m == 0:
            continue
        # N-rank over the widest window that fits strictly inside
        src = N.grid.floor_index(pt_shift(a, eps))
        if src is None:
            r_n = 0
        else:
            tgt = []
            for k in range(N.grid.n):
                ax = N.grid.axes[k]
                if sup[k] is None:
                    tgt.append(len(ax) - 1)
                else:
                    limit = sup[k] - eps
                    j = len([c for c in ax if c < limit]) - 1
                    tgt.append(max(j, src[k]))
            r_n = field.rank(N.structure_map(src, tuple(tgt)), N.p)
        if r_n < r_m:
            return True
    return False


# -- factoring through a bounded-mesh grid ------------------------------------

def factor_through_grid(L: GridModule, window: Grid, r):
    """Factor the shift unit of L through a bounded-mesh grid window.

    For a window P with mesh widths in [alpha, beta] and any 0 <= r <= alpha,
    the shift unit eta_beta of L_P factors as m o (eta_r)_P where
    m: (L restricted to P+r)[r] -> L_P[beta].  Returns the components of m
    indexed by window vertices after verifying the factorization square
    exactly.  The window must reach at least as far as L's grid on top.
    """
    r = as_frac(r)
    meshes = [ax[i + 1] - ax[i] for ax in window.axes for i in range(len(ax) - 1)]
    if not meshes:
        raise ValueError("window needs at least two coordinates per axis")
    alpha, beta = min(meshes), max(meshes)
    if not (0 <= r <= alpha):
        raise ValueError(f"need 0 <= r <= min mesh width {alpha}")
    for ax_w, ax_l in zip(window.axes, L.grid.axes):
        if ax_w[-1] < ax_l[-1]:
            raise ValueError("window must cover L's grid on top")
    p = L.p
    m_mats = {}
    for vidx in window.vertices():
        vidx = tuple(vidx)
        v = window.coord(vidx)
        tgt = window.coord(window.floor_index(pt_shift(v, beta)))
        src_f = L.grid.floor_index(pt_shift(v, r))
        tgt_f = L.grid.floor_index(tgt)
        if src_f is None:
            m_mats[vidx] = field.zeros(0 if tgt_f is None else L.dim(tgt_f), 0)
            continue
        if not all(a <= b for a, b in zip(src_f, tgt_f)):
            raise ValueError(f"factorization undefined at {v}")
        m_mats[vidx] = L.structure_map(src_f, tgt_f)
        # verify the square eta_beta = m o (eta_r)_P at this vertex
        eta_r = L.structure_map_points(v, pt_shift(v, r))
        eta_beta = L.structure_map_points(v, tgt)
        if not np.array_equal(field.mmul(m_mats[vidx], eta_r, p), eta_beta):
            raise ValueError(f"factorization square fails at {v}")
    return m_mats
