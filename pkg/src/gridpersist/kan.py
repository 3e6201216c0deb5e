"""Moving modules between grids without changing their meaning on R^n.

The central operation is restriction_extension: evaluate the R^n extension of
a module on a new grid.  When the new grid refines the old one this is an
equality of extensions; in general it snaps the module to the new grid.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import field
from .core import Grid, GridModule, ModuleMorphism, as_frac, pt_shift


def restriction_extension(M: GridModule, grid: Grid) -> GridModule:
    """Evaluate the extension of M at the vertices of `grid`.

    The value at a vertex q is M at the largest M-grid vertex <= q (zero when
    none exists); steps are the corresponding structure maps of M.
    """
    if grid.n != M.grid.n:
        raise ValueError("dimension mismatch")
    # per-axis floor tables, then dims and steps by table lookup only
    tabs = [np.array([M.grid._axis_floor(k, c) for c in ax], dtype=np.int64)
            for k, ax in enumerate(grid.axes)]
    dims = M.dims[np.ix_(*(np.maximum(t, 0) for t in tabs))].copy()
    valid = np.ones(grid.shape, dtype=bool)
    for k, t in enumerate(tabs):
        shape = [1] * grid.n
        shape[k] = len(t)
        valid &= (t >= 0).reshape(shape)
    dims[~valid] = 0
    steps = {}
    shape = grid.shape
    for vidx in np.argwhere(dims > 0):
        vidx = tuple(int(i) for i in vidx)
        fl = tuple(int(tabs[k][i]) for k, i in enumerate(vidx))
        for k in range(grid.n):
            if vidx[k] + 1 >= shape[k]:
                continue
            w = vidx[:k] + (vidx[k] + 1,) + vidx[k + 1:]
            if dims[w] == 0:
                continue
            fw = tuple(int(tabs[a][i]) for a, i in enumerate(w))
            steps[(vidx, k)] = M.structure_map(fl, fw)
    return GridModule(grid, dims, steps, M.p)


def restrict(M: GridModule, grid: Grid) -> GridModule:
    """Restriction to a subgrid (every axis a subset of M's axis)."""
    for ax_new, ax_old in zip(grid.axes, M.grid.axes):
        if not set(ax_new) <= set(ax_old):
            raise ValueError("restrict requires a subgrid; "
                             "use restriction_extension to snap")
    return restriction_extension(M, grid)


def morphism_restriction_extension(f: ModuleMorphism, grid: Grid) -> ModuleMorphism:
    """The induced morphism between the restriction-extensions on `grid`."""
    Mg = restriction_extension(f.source, grid)
    Ng = restriction_extension(f.target, grid)
    mats = {}
    for vidx in grid.vertices():
        vidx = tuple(vidx)
        fi = f.source.grid.floor_index(grid.coord(vidx))
        if fi is None:
            continue
        m = f.at(fi)
        if m.size and m.any():
            mats[vidx] = m.copy()
    return ModuleMorphism(Mg, Ng, mats)


def union_axes(*grids_or_axes):
    """Per-axis union of coordinate sets."""
    axes_list = []
    for g in grids_or_axes:
        axes_list.append(g.axes if isinstance(g, Grid) else g)
    n = len(axes_list[0])
    out = []
    for k in range(n):
        s = set()
        for axes in axes_list:
            s.update(as_frac(c) for c in axes[k])
        out.append(sorted(s))
    return out


def common_refinement(M: GridModule, N: GridModule):
    """Both modules re-expressed on the union grid. Returns (M', N', grid)."""
    grid = Grid(union_axes(M.grid, N.grid))
    return restriction_extension(M, grid), restriction_extension(N, grid), grid


def shift(M: GridModule, r) -> GridModule:
    """The shifted module M[r], with M[r](x) = M(x + r); its grid is M's
    grid translated by -r."""
    r = as_frac(r)
    grid = Grid([[c - r for c in ax] for ax in M.grid.axes])
    return GridModule(grid, M.dims.copy(), dict(M.steps), M.p)


def shift_unit(M: GridModule, r) -> ModuleMorphism:
    """The canonical morphism M -> M[r] (r >= 0) with components the
    structure maps x -> x + r, expressed on the union of both grids."""
    r = as_frac(r)
    if r < 0:
        raise ValueError("shift unit needs r >= 0")
    Mr = shift(M, r)
    grid = Grid(union_axes(M.grid, Mr.grid))
    A = restriction_extension(M, grid)
    B = restriction_extension(Mr, grid)
    mats = {}
    for vidx in grid.vertices():
        vidx = tuple(vidx)
        x = grid.coord(vidx)
        m = M.structure_map_points(x, pt_shift(x, r))
        if m.size and m.any():
            mats[vidx] = m
    return ModuleMorphism(A, B, mats)


def regular_grid(n: int, pitch, lo, hi) -> Grid:
    """The grid with axis coordinates lo_i, lo_i+pitch, ..., >= hi_i."""
    pitch = as_frac(pitch)
    axes = []
    for k in range(n):
        a, b = as_frac(lo[k]), as_frac(hi[k])
        count = int((b - a) / pitch)
        if a + count * pitch < b:
            count += 1
        axes.append([a + i * pitch for i in range(count + 1)])
    return Grid(axes)


def snap_to_lattice(M: GridModule, pitch, margin_cells: int = 2) -> GridModule:
    """Snap M onto the lattice (pitch * Z)^n, windowed to cover M's grid
    plus a margin.  The result is pitch-interleaved with M."""
    pitch = as_frac(pitch)
    lo, hi = [], []
    for ax in M.grid.axes:
        a = (ax[0] / pitch).__floor__() - margin_cells
        b = (ax[-1] / pitch).__ceil__() + margin_cells
        lo.append(a * pitch)
        hi.append(b * pitch)
    grid = regular_grid(M.grid.n, pitch, lo, hi)
    return restriction_extension(M, grid)


def prune(M: GridModule) -> GridModule:
    """Drop grid coordinates that repeat the previous slice verbatim.

    A non-initial coordinate on an axis is dropped when every step into its
    slice along that axis is an identity matrix; the initial coordinate is
    dropped when its slice is zero.  Unlike compress, the result has exactly
    the same extension as M (not merely an isomorphic one), so pruned
    modules stay interchangeable inside certificate chains.
    """
    cur = M
    changed = True
    while changed:
        changed = False
        for k in range(cur.grid.n):
            keep = _prune_keep(cur, k)
            if not keep:
                keep = [0]
            if len(keep) < cur.grid.shape[k]:
                axes = [list(ax) for ax in cur.grid.axes]
                axes[k] = [axes[k][i] for i in keep]
                cur = restrict(cur, Grid(axes))
                changed = True
    return cur


def _prune_keep(M: GridModule, k: int):
    keep = []
    for j in range(M.grid.shape[k]):
        if j == 0:
            if np.take(M.dims, 0, axis=k).any():
                keep.append(0)
            continue
        prev = np.take(M.dims, j - 1, axis=k)
        here = np.take(M.dims, j, axis=k)
        if not np.array_equal(prev, here):
            keep.append(j)
            continue
        ok = True
        for ridx in np.argwhere(prev > 0):
            vidx = tuple(ridx[:k]) + (j - 1,) + tuple(ridx[k:])
            m = M.step(vidx, k)
            if m.shape[0] != m.shape[1] or not np.array_equal(
                    m, field.eye(m.shape[0])):
                ok = False
                break
        if not ok:
            keep.append(j)
    return keep


def compress(M: GridModule) -> GridModule:
    """Drop grid coordinates that carry no information.

    A non-initial coordinate on an axis is dropped when every step into its
    slice along that axis is an isomorphism; the initial coordinate is
    dropped when its slice is zero.  The result is isomorphic to M (same
    extension up to natural isomorphism), usually on a much smaller grid.
    """
    cur = M
    changed = True
    while changed:
        changed = False
        for k in range(cur.grid.n):
            keep = _keep_indices(cur, k)
            if len(keep) < cur.grid.shape[k]:
                axes = [list(ax) for ax in cur.grid.axes]
                axes[k] = [axes[k][i] for i in keep]
                cur = restrict(cur, Grid(axes))
                changed = True
    return cur


def _keep_indices(M: GridModule, k: int):
    shape = M.grid.shape
    keep = []
    for j in range(shape[k]):
        if j == 0:
            slab = np.take(M.dims, 0, axis=k)
            if slab.any():
                keep.append(0)
            continue
        removable = True
        for rest in np.ndindex(shape[:k] + shape[k + 1:]):
            u = rest[:k] + (j - 1,) + rest[k:]
            v = rest[:k] + (j,) + rest[k:]
            if M.dim(u) != M.dim(v):
                removable = False
                break
            if M.dim(u) and not field.is_invertible(M.step(u, k), M.p):
                removable = False
                break
        if not removable:
            keep.append(j)
    if not keep:
        keep = [0]
    return keep


def compression_witness(M: GridModule, C: GridModule) -> ModuleMorphism:
    """The natural isomorphism (C extended onto M's grid) -> M, for C a
    compression of M.  Components are structure maps of M from the floor in
    C's grid up to each vertex."""
    Cm = restriction_extension(C, M.grid)
    mats = {}
    for vidx in M.grid.vertices():
        vidx = tuple(vidx)
        x = M.grid.coord(vidx)
        fi = C.grid.floor_index(x)
        if fi is None:
            continue
        src = C.grid.coord(fi)
        m = M.structure_map_points(src, x)
        if m.size and m.any():
            mats[vidx] = m
    w = ModuleMorphism(Cm, M, mats)
    return w
