"""Exact linear algebra over a prime field F_p, on numpy int64 arrays.

All matrices are numpy arrays of dtype int64 with entries in [0, p).
p must be prime and small enough that (p-1)**2 * max_dim fits in int64,
which holds comfortably for every p < 2**31 at the matrix sizes used here.
"""

from __future__ import annotations

import numpy as np

DEFAULT_PRIME = 65521


def is_probable_prime(p: int) -> bool:
    if p < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if p % q == 0:
            return p == q
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(s - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    return True


def fmat(rows, p: int) -> np.ndarray:
    """Build a matrix over F_p from a nested list (entries may be negative)."""
    a = np.asarray(rows, dtype=np.int64)
    if a.ndim != 2:
        a = a.reshape(a.shape + (1,) * (2 - a.ndim))
    return np.mod(a, p)

def zeros(nrows: int, ncols: int) -> np.ndarray:
    return np.zeros((nrows, ncols), dtype=np.int64)


def eye(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


def mmul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Matrix product mod p."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
    if a.shape[0] == 0 or b.shape[1] == 0 or a.shape[1] == 0:
        return zeros(a.shape[0], b.shape[1])
    return (a @ b) % p


def minv_scalar(x: int, p: int) -> int:
    return pow(int(x), -1, p)


def rref(a: np.ndarray, p: int):
    """Row-reduce a mod p in place (on a copy).

    Returns (r, pivots) where r is the reduced row echelon form and pivots
    the list of pivot column indices.
    """
    r = np.mod(np.array(a, dtype=np.int64), p)
    nrows, ncols = r.shape
    pivots = []
    row = 0
    for col in range(ncols):
        if row >= nrows:
            break
        nz = np.nonzero(r[row:, col])[0]
        if nz.size == 0:
            continue
        piv = row + nz[0]
        if piv != row:
            r[[row, piv]] = r[[piv, row]]
        r[row] = r[row] * minv_scalar(r[row, col], p) % p
        mask = np.nonzero(r[:, col])[0]
        mask = mask[mask != row]
        if mask.size:
            r[mask] = (r[mask] - np.outer(r[mask, col], r[row])) % p
        pivots.append(col)
        row += 1
    return r, pivots


def rank(a: np.ndarray, p: int) -> int:
    if a.size == 0:
        return 0
    return len(rref(a, p)[1])


def nullspace(a: np.ndarray, p: int) -> np.ndarray:
    """Columns form a basis of {x : a x = 0} over F_p."""
    nrows, ncols = a.shape
    if ncols == 0:
        return zeros(0, 0)
    if nrows == 0:
        return eye(ncols)
    r, pivots = rref(a, p)
    free = [j for j in range(ncols) if j not in pivots]
    basis = zeros(ncols, len(free))
    for k, j in enumerate(free):
        basis[j, k] = 1
        for i, pc in enumerate(pivots):
            basis[pc, k] = (-r[i, j]) % p
    return basis


def column_space(a: np.ndarray, p: int) -> np.ndarray:
    """A matrix whose columns are a basis of the column space of a."""
    if a.size == 0:
        return zeros(a.shape[0], 0)
    _, pivots = rref(a, p)
    return a[:, pivots].copy()


def solve(a: np.ndarray, b: np.ndarray, p: int):
    """One solution x of a x = b, or None if inconsistent.

    b may be a vector or a matrix (solved column by column, consistently).
    """
    b2 = b.reshape(-1, 1) if b.ndim == 1 else b
    nrows, ncols = a.shape
    aug = np.concatenate([a, b2], axis=1) if nrows else zeros(0, ncols + b2.shape[1])
    r, pivots = rref(aug, p)
    pivset = [c for c in pivots if c < ncols]
    if len(pivset) != len(pivots):
        return None  # a pivot in the b-columns: inconsistent
    x = zeros(ncols, b2.shape[1])
    for i, pc in enumerate(pivots):
        x[pc] = r[i, ncols:]
    return x[:, 0] if b.ndim == 1 else x


def quotient_map(a: np.ndarray, p: int) -> np.ndarray:
    """The projection F_p^m -> F_p^m / im(a), as a (m - rank a) x m matrix.

    Coordinates are taken with respect to the standard basis vectors that
    complete a column basis of im(a); the result q satisfies q a = 0 and has
    full row rank.
    """
    m = a.shape[0]
    c = column_space(a, p)
    r = c.shape[1]
    if r == 0:
        return eye(m)
    aug = np.concatenate([c, eye(m)], axis=1)
    _, pivots = rref(aug, p)
    comp = [j - r for j in pivots if j >= r]
    basis = np.concatenate([c, eye(m)[:, comp]], axis=1)
    return minv(basis, p)[r:, :].copy()


def is_invertible(a: np.ndarray, p: int) -> bool:
    return a.shape[0] == a.shape[1] and rank(a, p) == a.shape[0]


def minv(a: np.ndarray, p: int) -> np.ndarray:
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("not square")
    aug = np.concatenate([a, eye(n)], axis=1)
    r, pivots = rref(aug, p)
    if pivots != list(range(n)):
        raise ValueError("matrix not invertible mod p")
    return r[:, n:].copy()
