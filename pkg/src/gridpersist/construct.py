"""Surgery on persistence modules: gluing on hyper-rectangles, the rigid
gadget G, thin corners, antennas, antenna relocation, tacking two modules
into one indecomposable, and the approximation of any module by an
indecomposable within any interleaving tolerance.

Axes are 0-indexed here; the constructions treat axis 0 / axis 1 the way the
informal pictures treat their first two coordinates, freezing the remaining
coordinates.  Every constructor returns its result together with a verified
local-change interleaving certificate back to its input; nothing is trusted
without verification.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np

from . import field
from .core import (Grid, GridModule, ModuleMorphism, as_frac, direct_sum,
                   interval_module, pt_leq, zero_module)
from .decomp import decompose, is_indecomposable
from .interleave import (CertificateError, InterleavingCertificate,
                         TrivialRegion, certificate_grid, compose_certificates,
                         compose_chain, identity_certificate,
                         local_change_certificate, pair_sum_certificates,
                         snap_certificate, trivial_certificate)
from .kan import prune, restriction_extension, union_axes


# -- hyper-rectangles ----------------------------------------------------------

class HyperRectangle:
    """A closed box prod [a_i, b_i] with corners on the (pitch Z)^n lattice.

    None stands for an unbounded end.  Accessors follow the half-step
    conventions: up() enlarges the top by one pitch, down() the bottom.
    """

    def __init__(self, pitch, bounds):
        self.pitch = as_frac(pitch)
        self.bounds = []
        for lo, hi in bounds:
            lo = None if lo is None else as_frac(lo)
            hi = None if hi is None else as_frac(hi)
            if lo is not None and hi is not None and lo > hi:
                raise ValueError("need a_i <= b_i")
            for c in (lo, hi):
                if c is not None and (c / self.pitch).denominator != 1:
                    raise ValueError(f"corner {c} not on the pitch lattice")
            self.bounds.append((lo, hi))
        self.n = len(self.bounds)

    def contains(self, point) -> bool:
        return all((lo is None or lo <= x) and (hi is None or x <= hi)
                   for (lo, hi), x in zip(self.bounds, point))

    def up(self) -> "HyperRectangle":
        return HyperRectangle(self.pitch,
                              [(lo, None if hi is None else hi + self.pitch)
                               for lo, hi in self.bounds])

    def down(self) -> "HyperRectangle":
        return HyperRectangle(self.pitch,
                              [(None if lo is None else lo - self.pitch, hi)
                               for lo, hi in self.bounds])

    def closure(self) -> "HyperRectangle":
        return self.up().down()

    def in_upper_boundary(self, point) -> bool:
        return self.up().contains(point) and not self.contains(point)

    def in_lower_boundary(self, point) -> bool:
        return self.down().contains(point) and not self.contains(point)

    def in_boundary(self, point) -> bool:
        return self.in_upper_boundary(point) or self.in_lower_boundary(point)

    def half_open_box(self):
        """The extension [a, b + pitch) of the closed lattice box."""
        if any(lo is None or hi is None for lo, hi in self.bounds):
            raise ValueError("unbounded rectangle has no finite extension box")
        return [(lo, hi + self.pitch) for lo, hi in self.bounds]


# -- the gadget G ---------------------------------------------------------------

_G_DIMS = {}
for _y, _row in zip((4, 3, 2, 1, 0),
                    ((1, 1, 1, 1, 1),
                     (1, 2, 2, 2, 1),
                     (0, 1, 2, 2, 1),
                     (0, 0, 1, 2, 1),
                     (0, 0, 0, 1, 1))):
    for _x, _d in enumerate(_row):
        _G_DIMS[(_x, _y)] = _d


def _g_steps(p):
    """Step matrices of G in gadget coordinates; key ((x, y), axis)."""
    def m(rows):
        return field.fmat(rows, p)
    up, down, left = m([[1], [1]]), m([[1, -1]]), m([[1], [0]])
    right = m([[0], [1]])
    e1, e2, z1 = field.eye(1), field.eye(2), field.zeros(1, 1)
    s = {}
    # axis 0 (x -> x+1)
    for x in range(4):
        s[((x, 4), 0)] = e1
    s[((0, 3), 0)] = up
    s[((1, 3), 0)] = e2
    s[((2, 3), 0)] = e2
    s[((3, 3), 0)] = down
    s[((1, 2), 0)] = left
    s[((2, 2), 0)] = e2
    s[((3, 2), 0)] = down
    s[((2, 1), 0)] = right
    s[((3, 1), 0)] = down
    s[((3, 0), 0)] = z1
    # axis 1 (y -> y+1)
    s[((0, 3), 1)] = z1
    s[((1, 2), 1)] = left
    s[((1, 3), 1)] = down
    s[((2, 1), 1)] = right
    s[((2, 2), 1)] = e2
    s[((2, 3), 1)] = down
    s[((3, 0), 1)] = up
    s[((3, 1), 1)] = e2
    s[((3, 2), 1)] = e2
    s[((3, 3), 1)] = down
    for y in range(4):
        s[((4, y), 1)] = e1
    return s


def module_G(p: int = field.DEFAULT_PRIME) -> GridModule:
    """The rigid 25-dimensional gadget on {0,...,4}^2: its endomorphism
    algebra is just the scalars, and it carries an axis-0 antenna at (0,3)
    and an axis-1 antenna at (3,0)."""
    grid = Grid([range(5), range(5)])
    dims = np.zeros((5, 5), dtype=np.int64)
    for (x, y), d in _G_DIMS.items():
        dims[x, y] = d
    M = GridModule(grid, dims, _g_steps(p), p)
    M.validate()
    return M


# -- gluing ---------------------------------------------------------------------

def modify_on_rectangle(M: GridModule, S: HyperRectangle, N: GridModule,
                        check_transfer: bool = False) -> GridModule:
    """Replace M by N on the closed box S; M and N (given on the same grid)
    must agree on the boundary collar closure(S) minus S.  Edges with either
    endpoint in S take N's steps; all others keep M's.

    With check_transfer, additionally reports whether the indecomposability
    transfer criterion holds: every indecomposable summand of N meets the
    collar (so gluing onto an indecomposable complement stays connected).
    """
    if M.grid != N.grid or M.p != N.p:
        raise ValueError("modify_on_rectangle needs a common grid; refine first")
    grid = M.grid
    coords = {tuple(v): grid.coord(tuple(v)) for v in grid.vertices()}
    in_S = {v: S.contains(x) for v, x in coords.items()}
    for v, x in coords.items():
        if S.in_boundary(x) and M.dim(v) != N.dim(v):
            raise ValueError(f"modules disagree on the boundary at {x}")
    dims = M.dims.copy()
    for v, inside in in_S.items():
        if inside:
            dims[v] = N.dim(v)
    steps = {}
    out = GridModule(grid, dims, steps, M.p)
    for v in coords:
        for k in range(grid.n):
            if not out.has_succ(v, k):
                continue
            w = out.succ(v, k)
            if dims[v] == 0 or dims[w] == 0:
                continue
            src = N if (in_S[v] or in_S[w]) else M
            if (in_S[v] or in_S[w]) and S.in_boundary(coords[v]) \
                    and S.in_boundary(coords[w]):
                # collar-internal edges must also agree; prefer M's data
                if not np.array_equal(M.step(v, k), N.step(v, k)):
                    raise ValueError(f"modules disagree on the boundary edge {v}")
                src = M
            steps[(v, k)] = src.step(v, k)
    out.validate()
    if check_transfer:
        parts, _ = decompose(N)
        for part in parts:
            if not any(part.dim(v) > 0 and S.in_boundary(coords[v])
                       for v in coords):
                raise ValueError("a summand of the patch misses the collar")
    return out


def _refine(M: GridModule, extra_per_axis) -> GridModule:
    axes = [sorted(set(ax) | set(extra_per_axis[k]))
            for k, ax in enumerate(M.grid.axes)]
    return restriction_extension(M, Grid(axes))


# -- corner and antenna detection ------------------------------------------------

def has_thin_corner(A: GridModule):
    """A vertex r with A(r) one-dimensional and A vanishing strictly below r
    (in every axis-combination), or None."""
    for vidx in A.grid.vertices():
        vidx = tuple(vidx)
        if A.dim(vidx) != 1:
            continue
        lower = A.dims[tuple(slice(0, i + 1) for i in vidx)]
        if int(lower.sum()) == 1:
            return A.grid.coord(vidx)
    return None


def has_antenna(A: GridModule, axis: int, eps=None):
    """A vertex r with A(r) = k, A zero on the ray below r along `axis`, and
    zero structure maps out of r along every other axis (at lattice shift eps
    when given, else to the immediate grid successor).  Returns the first
    such vertex or None."""
    eps = None if eps is None else as_frac(eps)
    found = []
    for vidx in A.grid.vertices():
        vidx = tuple(vidx)
        if A.dim(vidx) != 1:
            continue
        r = A.grid.coord(vidx)
        ray = [vidx[:axis] + (j,) + vidx[axis + 1:] for j in range(vidx[axis])]
        if any(A.dim(u) for u in ray):
            continue
        ok = True
        for j in range(A.grid.n):
            if j == axis:
                continue
            if eps is not None:
                y = list(r)
                y[j] += eps
                m = A.structure_map_points(r, tuple(y))
            else:
                if not A.has_succ(vidx, j):
                    ok = False
                    break
                m = A.step(vidx, j)
            if m.size and m.any():
                ok = False
                break
        if ok:
            found.append(r)
    return found[0] if found else None


# -- thin corner -----------------------------------------------------------------

def _assert_lattice(A: GridModule, eps):
    for ax in A.grid.axes:
        for c in ax:
            if (c / eps).denominator != 1:
                raise ValueError(f"grid coordinate {c} not on the {eps}-lattice")


def add_thin_corner(A: GridModule, eps, check: bool = True,
                    verify_cert: bool = True):
    """Make the minimal support corner one-dimensional at half pitch.

    Returns (A2, certificate at eps/2, corner vertex r).  A2 differs from A
    only on the (eps/2)-trivial box [r, r + eps/2)^n.
    """
    eps = as_frac(eps)
    _assert_lattice(A, eps)
    if A.total_dim() == 0:
        raise ValueError("cannot add a corner to the zero module")
    if check and not is_indecomposable(A):
        raise ValueError("input must be indecomposable")
    h = eps / 2
    support = A.support_vertices()
    minimal = [v for v in support
               if not any(w != v and all(a <= b for a, b in zip(w, v))
                          for w in support)]
    rv = min(minimal, key=lambda v: A.grid.coord(v))
    r = A.grid.coord(rv)
    # the inclusion of the new 1-dim corner into A(r)
    iota = None
    for k in range(A.grid.n):
        if A.has_succ(rv, k):
            st = A.step(rv, k)
            for col in range(st.shape[1]):
                if st[:, col].any():
                    iota = field.zeros(A.dim(rv), 1)
                    iota[col, 0] = 1
                    break
        if iota is not None:
            break
    if iota is None:
        iota = field.zeros(A.dim(rv), 1)
        iota[0, 0] = 1
    Aref = _refine(A, [{r[k] + h, r[k] + eps} for k in range(A.grid.n)])
    rv = Aref.grid.index_of(r)
    dims = Aref.dims.copy()
    dims[rv] = 1
    steps = {}
    for (v, k), m in Aref.steps.items():
        if v == rv:
            steps[(v, k)] = field.mmul(m, iota, A.p)
        else:
            steps[(v, k)] = m
    A2 = GridModule(Aref.grid, dims, steps, A.p)
    A2.validate()
    region = TrivialRegion([[(r[k], r[k] + h) for k in range(A.grid.n)]])
    cert = local_change_certificate(Aref, A2, region, h, verify=verify_cert)
    if has_thin_corner(A2) is None:
        raise RuntimeError("corner construction failed its own check")
    if check and not is_indecomposable(A2):
        raise RuntimeError("corner construction broke indecomposability")
    return A2, cert, r


# -- antenna splice ----------------------------------------------------------------

def add_antenna(A: GridModule, eps, check: bool = True,
                verify_cert: bool = True):
    """Splice the gadget into the thin corner, producing an axis-0 antenna.

    Requires has_thin_corner(A) over the eps-lattice.  Returns
    (A2, certificate at eps, antenna tip r + (3 eps/5) e_1); A2 differs from
    A only on the eps-trivial box [r, r + 4 eps/5)^n, over pitch eps/5.
    """
    eps = as_frac(eps)
    _assert_lattice(A, eps)
    r = has_thin_corner(A)
    if r is None:
        raise ValueError("input has no thin corner")
    n = A.grid.n
    if n < 2:
        raise ValueError("need at least two parameters")
    q = eps / 5
    extra = [{r[k] + j * q for j in range(1, 6)} if k < 2 else
             {r[k] + q, r[k] + eps} for k in range(n)]
    Aref = _refine(A, extra)
    p = A.p
    gsteps = _g_steps(p)
    grid = Aref.grid

    def gvert(gx, gy):
        return grid.index_of((r[0] + gx * q, r[1] + gy * q) + tuple(r[2:]))

    block = {gvert(gx, gy): (gx, gy) for gx in range(5) for gy in range(5)}
    dims = Aref.dims.copy()
    for v, (gx, gy) in block.items():
        dims[v] = _G_DIMS[(gx, gy)]
    steps = {}
    out = GridModule(grid, dims, steps, p)
    g44 = {}  # composite G(x,y) -> G(4,4) = k, used along frozen axes
    Gm = module_G(p)
    for gx in range(5):
        for gy in range(5):
            g44[(gx, gy)] = Gm.structure_map((gx, gy), (4, 4))
    for v in grid.vertices():
        v = tuple(v)
        for k in range(n):
            if not out.has_succ(v, k):
                continue
            w = out.succ(v, k)
            if dims[v] == 0 or dims[w] == 0:
                continue
            if v in block and w in block:
                steps[(v, k)] = gsteps.get((block[v], k),
                                           field.zeros(int(dims[w]), int(dims[v])))
            elif v in block:
                gx, gy = block[v]
                old = Aref.step(v, k)  # a map out of the old corner value k
                if k < 2:
                    if (k == 0 and gx != 4) or (k == 1 and gy != 4):
                        raise RuntimeError("block boundary mismatch")
                    steps[(v, k)] = old
                else:
                    steps[(v, k)] = field.mmul(old, g44[(gx, gy)], p)
            elif w in block:
                if Aref.dim(v) != 0:
                    raise RuntimeError("nonzero module below the corner")
            else:
                steps[(v, k)] = Aref.step(v, k)
    out.validate()
    region = TrivialRegion([[(r[k], r[k] + 4 * q) for k in range(n)]])
    cert = local_change_certificate(Aref, out, region, eps,
                                    verify=verify_cert)
    tip = (r[0], r[1] + 3 * q) + tuple(r[2:])
    if has_antenna(out, 0, eps=q) != tip:
        raise RuntimeError("antenna construction failed its own check")
    if check and not is_indecomposable(out):
        raise RuntimeError("antenna construction broke indecomposability")
    return out, cert, tip


# -- antenna relocation ------------------------------------------------------------

def move_antenna(A: GridModule, eps, s, check: bool = True,
                 verify_cert: bool = True):
    """Relocate an axis-0 antenna at r to the vertex s by laying a constant-k
    staircase, one axis at a time.

    Requires s_k < r_k on even axes (0-indexed), s_k > r_k on odd axes, and
    A zero wherever the axis-0 coordinate is <= s_0.  Returns
    (A2, certificate at eps, new antenna axis): the antenna ends up on
    axis 0 when n is even and on axis n-1 when n is odd.
    """
    eps = as_frac(eps)
    _assert_lattice(A, eps)
    s = tuple(as_frac(x) for x in s)
    n = A.grid.n
    r = has_antenna(A, 0, eps=eps)
    if r is None:
        raise ValueError("input has no axis-0 antenna")
    for k in range(n):
        if k % 2 == 0 and not s[k] < r[k]:
            raise ValueError(f"need s[{k}] < r[{k}]")
        if k % 2 == 1 and not s[k] > r[k]:
            raise ValueError(f"need s[{k}] > r[{k}]")
        if ((s[k] - r[k]) / eps).denominator != 1:
            raise ValueError("target not on the lattice")
    for vidx in A.grid.vertices():
        vidx = tuple(vidx)
        if A.dim(vidx) and A.grid.coord(vidx)[0] <= s[0]:
            raise ValueError("module must vanish at axis-0 coordinates <= s_0")

    # half-open staircase boxes T_1 ... T_n (stage k moves along axis k-1)
    boxes = []
    for stage in range(1, n + 1):
        a = stage - 1
        box = []
        for k in range(n):
            if k < a:
                box.append((s[k], s[k] + eps))
            elif k == a:
                if stage % 2 == 1:
                    box.append((s[k], r[k]))
                else:
                    box.append((r[k] + eps, s[k] + eps))
            else:
                box.append((r[k], r[k] + eps))
        boxes.append(box)
    region = TrivialRegion(boxes)
    extra = [{s[k], s[k] + eps, r[k], r[k] + eps} for k in range(n)]
    Aref = _refine(A, extra)
    grid = Aref.grid
    rv = grid.index_of(r)
    in_T = {tuple(v): region.contains(grid.coord(tuple(v)))
            for v in grid.vertices()}
    dims = Aref.dims.copy()
    for v, inside in in_T.items():
        if inside:
            dims[v] = 1
    steps = {}
    out = GridModule(grid, dims, steps, A.p)
    for v in grid.vertices():
        v = tuple(v)
        for k in range(n):
            if not out.has_succ(v, k):
                continue
            w = out.succ(v, k)
            if dims[v] == 0 or dims[w] == 0:
                continue
            if in_T[v] and (in_T[w] or w == rv):
                steps[(v, k)] = field.eye(1)
            elif in_T[v]:
                steps[(v, k)] = field.zeros(int(dims[w]), int(dims[v]))
            elif in_T[w]:
                raise ValueError("staircase crosses the module's support")
            else:
                steps[(v, k)] = Aref.step(v, k)
    out.validate()
    cert = local_change_certificate(Aref, out, region, eps,
                                    verify=verify_cert)
    new_axis = 0 if n % 2 == 0 else n - 1
    if has_antenna(out, new_axis, eps=eps) is None:
        raise RuntimeError("relocation failed its own antenna check")
    if check and not is_indecomposable(out):
        raise RuntimeError("relocation broke indecomposability")
    return out, cert, new_axis


# -- tacking -----------------------------------------------------------------------

def tack_pair(A: GridModule, B: GridModule, eps, ell: int = 0, ellp: int = 1,
              verify_cert: bool = True,
              check: bool = True):
    """Join two antenna-equipped indecomposables into one indecomposable.

    A must have an axis-ell antenna at some r and B one at r - eps*e_ellp.
    Both antennas are extended by constant-k runs to a region left of both
    supports (along axis ell), where a copy of the gadget with two extra
    ground field cells ties them together.  Returns (M, certificate at
    5 eps) between M and A + B.
    """
    eps = as_frac(eps)
    for X in (A, B):
        _assert_lattice(X, eps)
    if ell == ellp:
        raise ValueError("antenna axes must differ")
    n = A.grid.n
    rA = has_antenna(A, ell, eps=eps)
    if rA is None:
        raise ValueError("first module has no axis-ell antenna")
    rB = has_antenna(B, ell, eps=eps)
    want = list(rA)
    want[ellp] -= eps
    if rB is None or list(rB) != want:
        raise ValueError("second antenna is not at r - eps e_ellp")
    r = rA
    p = A.p

    # a: one lattice step below both supports along axis ell
    msupp = min(min(A.grid.coord(v)[ell] for v in A.support_vertices()),
                min(B.grid.coord(v)[ell] for v in B.support_vertices()))
    a = msupp - eps
    if not a < r[ell]:
        raise ValueError("no room left of the supports")
    b = r[ellp] + 2 * eps

    def axpt(c_ell, c_ellp):
        x = list(r)
        x[ell], x[ellp] = c_ell, c_ellp
        return tuple(x)

    extra = [{r[k], r[k] + eps} for k in range(n)]
    extra[ell] |= {a + j * eps for j in range(-5, 2)}
    extra[ellp] |= {r[ellp] - eps, r[ellp] + eps} \
        | {b + j * eps for j in range(-1, 6)}
    gm = Grid(union_axes(Grid([sorted(set(ax) | extra[k]) for k, ax
                               in enumerate(A.grid.axes)]), B.grid))
    Aref = restriction_extension(A, gm)
    Bref = restriction_extension(B, gm)

    frozen = [(r[k], r[k] + eps) for k in range(n)]

    def fbox(ell_iv, ellp_iv):
        box = list(frozen)
        box[ell] = ell_iv
        box[ellp] = ellp_iv
        return box

    # half-open connector regions: a horizontal run at the antenna's height
    # and a vertical rise up to the gadget's bottom row
    regA = TrivialRegion([fbox((a - eps, r[ell] + eps),
                               (r[ellp], r[ellp] + eps)),
                          fbox((a - eps, a), (r[ellp] + eps, b))])
    regB = TrivialRegion([fbox((a - 2 * eps, r[ell] + eps),
                               (r[ellp] - eps, r[ellp])),
                          fbox((a - 2 * eps, a - eps), (r[ellp], b))])
    tipA, tipB = r, axpt(r[ell], r[ellp] - eps)

    def extend(M, reg, tip):
        """Constant-k run through `reg` feeding the antenna tip."""
        tipv = gm.index_of(tip)
        inside = {tuple(v): reg.contains(gm.coord(tuple(v))) and
                  gm.coord(tuple(v)) != tip for v in gm.vertices()}
        dims = M.dims.copy()
        for v, ins in inside.items():
            if ins:
                dims[v] = 1
        steps = dict(M.steps)
        out = GridModule(gm, dims, steps, p)
        for v in gm.vertices():
            v = tuple(v)
            for k in range(n):
                if not out.has_succ(v, k):
                    continue
                w = out.succ(v, k)
                if dims[v] == 0 or dims[w] == 0:
                    continue
                if inside[v]:
                    if inside[w] or w == tipv:
                        steps[(v, k)] = field.eye(1)
                    else:
                        steps[(v, k)] = field.zeros(int(dims[w]), 1)
                elif inside[w]:
                    raise ValueError("support reaches into the connector run")
        out.validate()
        return out

    X = extend(Aref, regA, tipA)
    Y = extend(Bref, regB, tipB)
    Z, _, _ = direct_sum(X, Y)
    Zorig, _, _ = direct_sum(Aref, Bref)

    # the gadget block on [a-5eps, a-eps] x [b, b+4eps], fed from below by
    # the two rises at height b - eps
    gsteps = _g_steps(p)
    dims = Z.dims.copy()
    steps = dict(Z.steps)

    def gv(gx, gy):
        return gm.index_of(axpt(a - (5 - gx) * eps, b + gy * eps))

    block = {gv(gx, gy): (gx, gy) for gx in range(5) for gy in range(5)}
    for v, (gx, gy) in block.items():
        dims[v] = _G_DIMS[(gx, gy)]
    out = GridModule(gm, dims, steps, p)
    for v, (gx, gy) in block.items():
        for k in range(n):
            if not out.has_succ(v, k):
                continue
            w = out.succ(v, k)
            if w in block:
                axk = 0 if k == ell else 1
                if dims[v] and dims[w]:
                    st = gsteps.get(((gx, gy), axk))
                    steps[(v, k)] = st if st is not None else \
                        field.zeros(int(dims[w]), int(dims[v]))
                else:
                    steps.pop((v, k), None)
            else:
                if dims[w] != 0 and dims[v] != 0:
                    raise RuntimeError("gadget block touches the support")
                steps.pop((v, k), None)
    bottomB = gm.index_of(axpt(a - 2 * eps, b - eps))  # = k, top of Y's rise
    bottomA = gm.index_of(axpt(a - eps, b - eps))      # = k, top of X's rise
    steps[(bottomB, ellp)] = field.eye(1)  # into the gadget's (3,0) cell
    steps[(bottomA, ellp)] = field.eye(1)  # into the gadget's (4,0) cell
    steps[(bottomB, ell)] = field.zeros(1, 1)
    out = GridModule(gm, dims, steps, p)
    out.validate()

    region = TrivialRegion(
        [fbox((a - 5 * eps, a), (b, b + 5 * eps))] + list(regA.boxes)
        + list(regB.boxes))
    cert = local_change_certificate(Zorig, out, region, 5 * eps,
                                    verify=verify_cert).flip()
    if check and not is_indecomposable(out):
        raise RuntimeError("tacked module failed its indecomposability check")
    return out, cert


def _frac_gcd(vals):
    out = Fraction(0)
    for v in vals:
        v = abs(as_frac(v))
        if v == 0:
            continue
        # gcd(a/b, c/d) = gcd(a d, c b) / (b d), reduced
        out = Fraction(gcd(out.numerator * v.denominator,
                           v.numerator * out.denominator),
                       out.denominator * v.denominator)
    if out == 0:
        raise ValueError("cannot infer a pitch from an all-zero grid")
    return out


def infer_pitch(*modules) -> Fraction:
    """The coarsest tau with every grid coordinate on (tau Z)^n."""
    vals = [c for M in modules for ax in M.grid.axes for c in ax]
    return _frac_gcd(vals)


def tack(A: GridModule, B: GridModule, delta, tau=None,
         check_stages: bool = False, check: bool = True,
         verify_cert: bool = True):
    """Replace A + B by a single indecomposable within delta.

    Runs the full chain: thin corners at eps0/2, antennas at eps0/10 pitch,
    relocation of both antennas to a common out-of-support corner, and the
    gadget join; eps0 = tau/m with m minimal such that eps0 < delta/4.  The
    returned certificate between M and A + B has eps = 1.6 eps0 < delta.
    """
    delta = as_frac(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = A.grid.n
    if n < 2 or B.grid.n != n:
        raise ValueError("need two modules with the same n >= 2 parameters")
    if A.total_dim() == 0 or B.total_dim() == 0:
        raise ValueError("tack needs nonzero modules")
    # drop redundant grid coordinates (extension unchanged); inputs arriving
    # from earlier folds carry heavily refined grids otherwise
    A, B = prune(A), prune(B)
    tau = infer_pitch(A, B) if tau is None else as_frac(tau)
    m = int(4 * tau / delta) + 1
    eps0 = tau / m
    assert eps0 < delta / 4
    eps = eps0 / 10

    A1, cA1, _ = add_thin_corner(A, eps0, check=check_stages,
                                   verify_cert=verify_cert)
    B1, cB1, _ = add_thin_corner(B, eps0, check=check_stages,
                                   verify_cert=verify_cert)
    A2, cA2, alphaA = add_antenna(A1, eps0 / 2, check=check_stages,
                                    verify_cert=verify_cert)
    B2, cB2, alphaB = add_antenna(B1, eps0 / 2, check=check_stages,
                                    verify_cert=verify_cert)

    u = []
    for k in range(n):
        if k == 0:
            lo = min(min(A2.grid.coord(v)[0] for v in A2.support_vertices()),
                     min(B2.grid.coord(v)[0] for v in B2.support_vertices()),
                     alphaA[0], alphaB[0])
            u.append(lo - 2 * eps)
        elif k % 2 == 0:
            u.append(min(alphaA[k], alphaB[k]) - 2 * eps)
        else:
            u.append(max(alphaA[k], alphaB[k]) + 2 * eps)
    ell = 0 if n % 2 == 0 else n - 1
    ellp = 1 if n % 2 == 0 else n - 2
    r = list(u)
    r[ellp] += eps
    r = tuple(r)
    rB = list(r)
    rB[ellp] -= eps
    A3, cA3, ellA = move_antenna(A2, eps, r, check=check_stages,
                               verify_cert=verify_cert)
    B3, cB3, ellB = move_antenna(B2, eps, tuple(rB), check=check_stages,
                               verify_cert=verify_cert)
    assert ellA == ellB == ell

    M, c5 = tack_pair(A3, B3, eps, ell=ell, ellp=ellp, check=check,
                      verify_cert=verify_cert)

    d1, _, _ = pair_sum_certificates(cA1, cB1, verify=False)
    d2, _, _ = pair_sum_certificates(cA2, cB2, verify=False)
    d3, _, _ = pair_sum_certificates(cA3, cB3, verify=False)
    chain = compose_chain([d1, d2, d3, c5.flip()], verify=verify_cert)
    cert = chain.flip()  # (M, A + B)
    assert cert.eps == Fraction(8, 5) * eps0 < delta
    return M, cert


# -- the approximation pipeline ------------------------------------------------

class ApproxResult:
    def __init__(self, module, certificate, snap_cert, stage_certs):
        self.module = module
        self.certificate = certificate
        self.snap_cert = snap_cert
        self.stage_certs = stage_certs


def iso_certificate(W: ModuleMorphism) -> InterleavingCertificate:
    """A 0-interleaving from a verified isomorphism W: A -> B."""
    W.validate()
    if not W.is_isomorphism():
        raise CertificateError("witness is not an isomorphism")
    A, B = W.source, W.target
    grid = certificate_grid(A, B, 0)
    Winv = W.inverse()
    f = {}
    g = {}
    for vidx in grid.vertices():
        vidx = tuple(vidx)
        fi = A.grid.floor_index(grid.coord(vidx))
        if fi is None:
            continue
        m = W.at(fi)
        if m.size and m.any():
            f[vidx] = m
        m = Winv.at(fi)
        if m.size and m.any():
            g[vidx] = m
    cert = InterleavingCertificate(A, B, 0, grid, f, g)
    cert.verify()
    return cert


def approximate_indecomposable(N: GridModule, eps, seed: int = 0,
                               check_stages: bool = False) -> ApproxResult:
    """An indecomposable module within eps of N, with a verified certificate.

    Snap N to the (eps/2)-lattice (certificate eps/2); decompose the snap and
    fold its summands together with tack at delta = eps/(2k).  The zero case
    returns the unit cube module, eps/2 away from the zero snap.
    """
    eps = as_frac(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = N.grid.n
    if n < 2:
        raise ValueError("indecomposable approximation needs n >= 2 parameters")
    if N.total_dim() == 0:
        # the only module at distance 0 from N is zero, so approximate by the
        # unit eps-cube, which sits at distance exactly eps/2
        M = interval_module((0,) * n, (eps,) * n, p=N.p)
        grid = certificate_grid(M, N, eps / 2)
        total = InterleavingCertificate(M, N, eps / 2, grid, {}, {})
        total.verify()
        if not is_indecomposable(M):
            raise RuntimeError("cube module failed indecomposability")
        return ApproxResult(M, total, None, [])
    L, snap_c = snap_certificate(N, eps / 2)
    # the lattice window repeats data heavily; prune keeps the extension
    # identical while shrinking every later stage's evaluation grids
    L = prune(L)
    if L.total_dim() == 0:
        M = interval_module((0,) * n, (eps,) * n, p=N.p)
        cube_c = trivial_certificate(M, eps / 2)  # d(M, 0) <= eps/2, exact
        # the snapped module is the zero extension; its data matches 0
        total = compose_certificates(cube_c, snap_c.flip())
        total.verify()
        if not is_indecomposable(M):
            raise RuntimeError("cube module failed indecomposability")
        return ApproxResult(M, total, snap_c, [cube_c])
    parts, W = decompose(L, seed)
    k = len(parts)
    stage_certs = []
    delta = eps / (2 * k)
    cur = parts[0]
    for i in range(1, k):
        cur, t_c = tack(cur, parts[i], delta, check_stages=check_stages,
                        check=False, verify_cert=False)
        stage_certs.append(t_c)
    # assemble the chain M_k -> M_{k-1} + X_k -> ... -> X_1 + ... + X_k,
    # lifting each tack certificate by the identity on the untouched tail
    chain = []
    acc_eps = Fraction(0)
    for i in range(k - 1, 0, -1):
        t_c = stage_certs[i - 1]
        if i == k - 1:
            lifted = t_c
        else:
            tail, _, _ = direct_sum(*parts[i + 1:])
            lifted, _, _ = pair_sum_certificates(
                t_c, identity_certificate(tail, t_c.eps, verify=False),
                verify=False)
        acc_eps += t_c.eps
        assert acc_eps <= (k - i) * eps / (2 * k)
        chain.append(lifted)
    total = compose_chain(chain + [iso_certificate(W), snap_c.flip()],
                          verify=True)
    assert total.eps <= eps
    if not is_indecomposable(cur):
        raise RuntimeError("folded module failed its indecomposability check")
    return ApproxResult(cur, total, snap_c, stage_certs)
