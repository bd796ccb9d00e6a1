"""Exact dense linear algebra.

Matrices are lists of row lists.  Field routines take a field descriptor
from :mod:`newmodp.rings`; prime fields get an int-only fast path.
Integer routines (HNF, Smith diagonal, saturation) work over ZZ.

Row-vector convention throughout: a vector x is expressed in a basis B by
x = c * B, and the matrix of a linear map sends the coordinate row c to
c * A.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm

from .rings import RingDesc, modulus_of, is_prime_field


def _prime(F):
    return modulus_of(F) if is_prime_field(F) else None


def copy(A):
    return [list(r) for r in A]


def zeros(n, m, F):
    return [[F.zero] * m for _ in range(n)]


def identity(n, F):
    I = zeros(n, n, F)
    for i in range(n):
        I[i][i] = F.one
    return I


def coerce_matrix(A, F):
    return [[F.coerce(x) for x in row] for row in A]


def transpose(A):
    return [list(c) for c in zip(*A)] if A else []


def matmul(A, B, F):
    if not A:
        return []
    if not B:
        return [[] for _ in A]
    m = len(B[0])
    p = _prime(F)
    Bt = transpose(B)
    if p is not None:
        return [[sum(a * b for a, b in zip(row, col)) % p for col in Bt] for row in A]
    if F.kind in ("Integers", "Rationals"):
        return [[sum((a * b for a, b in zip(row, col)), F.zero) for col in Bt] for row in A]
    out = []
    for row in A:
        o = []
        for j in range(m):
            s = F.zero
            for a, b in zip(row, Bt[j]):
                if not F.is_zero(a) and not F.is_zero(b):
                    s = F.add(s, F.mul(a, b))
            o.append(s)
        out.append(o)
    return out


def vecmat(v, B, F):
    return matmul([v], B, F)[0] if B else []


def mat_add(A, B, F):
    return [[F.add(a, b) for a, b in zip(r, s)] for r, s in zip(A, B)]


def mat_sub(A, B, F):
    return [[F.sub(a, b) for a, b in zip(r, s)] for r, s in zip(A, B)]


def mat_scale(c, A, F):
    return [[F.mul(c, a) for a in r] for r in A]


def mat_pow(A, e, F):
    R = identity(len(A), F)
    base = A
    while e:
        if e & 1:
            R = matmul(R, base, F)
        e >>= 1
        if e:
            base = matmul(base, base, F)
    return R


def mat_eq(A, B, F):
    if len(A) != len(B):
        return False
    return all(len(r) == len(s) and all(F.eq(a, b) for a, b in zip(r, s)) for r, s in zip(A, B))


def is_zero_matrix(A, F):
    return all(F.is_zero(a) for r in A for a in r)


# ---- elimination over a field ----

def rref(A, F, ncols=None):
    """Reduced row echelon form: (R, pivots, T) with R = T * A, R nonzero rows only."""
    n = len(A)
    m = ncols if ncols is not None else (len(A[0]) if A else 0)
    p = _prime(F)
    M = [list(r) + [F.zero] * n for r in A]
    for i in range(n):
        M[i][m + i] = F.one
    piv = []
    r = 0
    if p is not None:
        for c in range(m):
            k = next((i for i in range(r, n) if M[i][c] % p), None)
            if k is None:
                continue
            M[r], M[k] = M[k], M[r]
            inv = pow(M[r][c], -1, p)
            row = [x * inv % p for x in M[r]]
            M[r] = row
            for i in range(n):
                if i != r:
                    f = M[i][c] % p
                    if f:
                        Mi = M[i]
                        M[i] = [(x - f * y) % p for x, y in zip(Mi, row)]
            piv.append(c)
            r += 1
            if r == n:
                break
    else:
        for c in range(m):
            k = next((i for i in range(r, n) if not F.is_zero(M[i][c])), None)
            if k is None:
                continue
            M[r], M[k] = M[k], M[r]
            inv = F.inv(M[r][c])
            row = [F.mul(x, inv) for x in M[r]]
            M[r] = row
            for i in range(n):
                if i != r and not F.is_zero(M[i][c]):
                    f = M[i][c]
                    M[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(M[i], row)]
            piv.append(c)
            r += 1
            if r == n:
                break
    R = [row[:m] for row in M[:r]]
    T = [row[m:] for row in M]
    return R, piv, T


def rank(A, F):
    if not A:
        return 0
    return len(rref_rows(A, F)[1])


def rref_rows(A, F):
    """RREF without the transform (cheaper)."""
    n = len(A)
    m = len(A[0]) if A else 0
    p = _prime(F)
    M = [list(r) for r in A]
    piv = []
    r = 0
    for c in range(m):
        if p is not None:
            k = next((i for i in range(r, n) if M[i][c] % p), None)
        else:
            k = next((i for i in range(r, n) if not F.is_zero(M[i][c])), None)
        if k is None:
            continue
        M[r], M[k] = M[k], M[r]
        if p is not None:
            inv = pow(M[r][c], -1, p)
            row = [x * inv % p for x in M[r]]
            M[r] = row
            for i in range(n):
                if i != r:
                    f = M[i][c] % p
                    if f:
                        M[i] = [(x - f * y) % p for x, y in zip(M[i], row)]
        else:
            inv = F.inv(M[r][c])
            row = [F.mul(x, inv) for x in M[r]]
            M[r] = row
            for i in range(n):
                if i != r and not F.is_zero(M[i][c]):
                    f = M[i][c]
                    M[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(M[i], row)]
        piv.append(c)
        r += 1
        if r == n:
            break
    return M[:r], piv


def left_kernel(A, F):
    """Basis of {x : x * A = 0}, as rows of length len(A)."""
    n = len(A)
    if n == 0:
        return []
    m = len(A[0])
    R, piv, T = rref(A, F, m)
    return [T[i] for i in range(len(piv), n)]


def right_kernel(A, F):
    """Basis of {y : A * y = 0}, as rows."""
    if not A:
        return []
    return left_kernel(transpose(A), F)


class Echelon:
    """Solve x = c * B repeatedly for a fixed set of independent rows B."""

    def __init__(self, B, F, ncols=None):
        self.F = F
        self.n = len(B)
        self.R, self.piv, T = rref(B, F, ncols if ncols is not None else (len(B[0]) if B else 0))
        if len(self.piv) != self.n:
            raise ValueError("rows are dependent")
        self.T = T[: self.n]

    def coords(self, v):
        """Coordinates of v in B, or None when v is outside the span."""
        F = self.F
        p = _prime(F)
        if self.n == 0:
            return [] if all(F.is_zero(x) for x in v) else None
        c = [v[j] for j in self.piv]
        if p is not None:
            w = list(v)
            for ci, row in zip(c, self.R):
                if ci % p:
                    w = [(x - ci * y) % p for x, y in zip(w, row)]
            if any(w):
                return None
            Tt = self._Tt()
            return [sum(a * b for a, b in zip(c, col)) % p for col in Tt]
        w = list(v)
        for ci, row in zip(c, self.R):
            if not F.is_zero(ci):
                w = [F.sub(x, F.mul(ci, y)) for x, y in zip(w, row)]
        if not all(F.is_zero(x) for x in w):
            return None
        return vecmat(c, self.T, F)

    def _Tt(self):
        if not hasattr(self, "_tt"):
            self._tt = transpose(self.T)
        return self._tt

    def contains(self, v):
        return self.coords(v) is not None


def solve_left(A, v, F):
    """Some x with x * A = v, or None."""
    if not A:
        return [] if all(F.is_zero(x) for x in v) else None
    R, piv, T = rref(A, F)
    c = [v[j] for j in piv]
    w = list(v)
    for ci, row in zip(c, R):
        w = [F.sub(x, F.mul(ci, y)) for x, y in zip(w, row)]
    if not all(F.is_zero(x) for x in w):
        return None
    return vecmat(c, T[: len(piv)], F)


# ---- subspaces given by row bases ----

def row_basis(A, F):
    if not A:
        return []
    return rref_rows(A, F)[0]


def span_sum(B1, B2, F):
    return row_basis(list(B1) + list(B2), F)


def span_intersection(B1, B2, F):
    if not B1 or not B2:
        return []
    K = left_kernel(list(B1) + list(B2), F)
    r = len(B1)
    rows = [vecmat(x[:r], B1, F) for x in K]
    return row_basis(rows, F)


def span_contains(B, C, F):
    """Row space of B contains every row of C."""
    if not C:
        return True
    if not B:
        return all(all(F.is_zero(x) for x in row) for row in C)
    return rank(list(B) + list(C), F) == rank(B, F)


def span_equal(B1, B2, F):
    return rank(B1, F) == rank(B2, F) and span_contains(B1, B2, F) if (B1 or B2) else True


# ---- polynomials over a field (low degree first) ----

def poly_trim(a, F):
    a = list(a)
    while a and F.is_zero(a[-1]):
        a.pop()
    return a


def poly_mul(a, b, F):
    if not a or not b:
        return []
    out = [F.zero] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if F.is_zero(x):
            continue
        for j, y in enumerate(b):
            out[i + j] = F.add(out[i + j], F.mul(x, y))
    return poly_trim(out, F)


def poly_sub(a, b, F):
    n = max(len(a), len(b))
    a = list(a) + [F.zero] * (n - len(a))
    b = list(b) + [F.zero] * (n - len(b))
    return poly_trim([F.sub(x, y) for x, y in zip(a, b)], F)


def poly_scale(c, a, F):
    return poly_trim([F.mul(c, x) for x in a], F)


def charpoly(A, F):
    """Characteristic polynomial det(x - A), monic, via Hessenberg reduction."""
    n = len(A)
    H = copy(A)
    for j in range(n - 2):
        k = next((i for i in range(j + 1, n) if not F.is_zero(H[i][j])), None)
        if k is None:
            continue
        if k != j + 1:
            H[k], H[j + 1] = H[j + 1], H[k]
            for row in H:
                row[k], row[j + 1] = row[j + 1], row[k]
        inv = F.inv(H[j + 1][j])
        for i in range(j + 2, n):
            if F.is_zero(H[i][j]):
                continue
            f = F.mul(H[i][j], inv)
            H[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(H[i], H[j + 1])]
            for row in H:
                row[j + 1] = F.add(row[j + 1], F.mul(f, row[i]))
    polys = [[F.one]]
    for m in range(1, n + 1):
        # p_m = (x - h_mm) p_{m-1} - sum_i h_{i,m} prod_{j=i+1}^{m} h_{j,j-1} p_{i-1}
        hm = H[m - 1][m - 1]
        pm = poly_mul([F.neg(hm), F.one], polys[m - 1], F)
        prod = F.one
        for i in range(m - 1, 0, -1):
            prod = F.mul(prod, H[i][i - 1])
            term = F.mul(H[i - 1][m - 1], prod)
            if not F.is_zero(term):
                pm = poly_sub(pm, poly_scale(term, polys[i - 1], F), F)
        polys.append(pm)
    out = polys[n]
    return out + [F.zero] * (n + 1 - len(out))


def poly_eval_matrix(c, A, F):
    n = len(A)
    R = zeros(n, n, F)
    for coef in reversed(c):
        R = matmul(R, A, F)
        for i in range(n):
            R[i][i] = F.add(R[i][i], coef)
    return R


# ---- integer lattices ----

def _xgcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def hnf(A):
    """Row Hermite normal form of an integer matrix; zero rows dropped.

    Pivots positive, entries above each pivot reduced into [0, pivot).
    """
    M = [list(map(int, r)) for r in A]
    if not M:
        return []
    n, m = len(M), len(M[0])
    r = 0
    piv = []
    for c in range(m):
        rows = [i for i in range(r, n) if M[i][c]]
        if not rows:
            continue
        # gcd-combine into row r
        k = rows[0]
        M[r], M[k] = M[k], M[r]
        for i in range(r + 1, n):
            if M[i][c] == 0:
                continue
            a, b = M[r][c], M[i][c]
            g, x, y = _xgcd(a, b)
            u, v = a // g, b // g
            Rr, Ri = M[r], M[i]
            M[r] = [x * s + y * t for s, t in zip(Rr, Ri)]
            M[i] = [u * t - v * s for s, t in zip(Rr, Ri)]
        if M[r][c] < 0:
            M[r] = [-x for x in M[r]]
        pv = M[r][c]
        for i in range(r):
            q = M[i][c] // pv
            if q:
                M[i] = [s - q * t for s, t in zip(M[i], M[r])]
        piv.append(c)
        r += 1
        if r == n:
            break
    return M[:r]


def hnf_pivots(H):
    out = []
    for row in H:
        out.append(next(j for j, x in enumerate(row) if x))
    return out


def smith_diagonal(A):
    """Nonzero elementary divisors d_1 | d_2 | ... of an integer matrix."""
    M = [list(map(int, r)) for r in A]
    if not M or not M[0]:
        return []
    n, m = len(M), len(M[0])
    diag = []
    t = 0
    while t < min(n, m):
        entries = [(abs(M[i][j]), i, j) for i in range(t, n) for j in range(t, m) if M[i][j]]
        if not entries:
            break
        _, i0, j0 = min(entries)
        M[t], M[i0] = M[i0], M[t]
        for row in M:
            row[t], row[j0] = row[j0], row[t]
        while True:
            changed = False
            pv = M[t][t]
            for i in range(t + 1, n):
                if M[i][t]:
                    q = M[i][t] // pv
                    M[i] = [x - q * y for x, y in zip(M[i], M[t])]
                    if M[i][t]:
                        changed = True
            for j in range(t + 1, m):
                if M[t][j]:
                    q = M[t][j] // pv
                    for row in M:
                        row[j] -= q * row[t]
                    if M[t][j]:
                        changed = True
            if changed:
                entries = [(abs(M[i][j]), i, j) for i in range(t, n) for j in range(t, m)
                           if M[i][j] and (i == t or j == t)]
                _, i0, j0 = min(entries)
                M[t], M[i0] = M[i0], M[t]
                for row in M:
                    row[t], row[j0] = row[j0], row[t]
                continue
            bad = next(((i, j) for i in range(t + 1, n) for j in range(t + 1, m)
                        if M[i][j] % pv), None)
            if bad is None:
                break
            M[t] = [x + y for x, y in zip(M[t], M[bad[0]])]
        diag.append(abs(M[t][t]))
        t += 1
    return diag


def rational_rref(A):
    """RREF over QQ of an integer/rational matrix, fraction-free inside."""
    from .rings import QQ
    rows = [[Fraction(x) for x in r] for r in A]
    R, piv = rref_rows(rows, QQ)
    return R, piv


def saturate(A):
    """HNF basis of (QQ-span of A) intersected with ZZ^n.

    Returns (H, pivots).  Runs by intersecting the coordinate lattice column
    by column; no integer factoring is needed.
    """
    if not A:
        return [], []
    E, piv = rational_rref(A)
    if not E:
        return [], []
    r = len(E)
    lam = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    pivset = set(piv)
    ncols = len(E[0])
    for c in range(ncols):
        if c in pivset:
            continue
        col = [E[i][c] for i in range(r)]
        if all(x.denominator == 1 for x in col):
            continue
        vals = [sum((lam[s][i] * col[i] for i in range(r)), Fraction(0)) for s in range(r)]
        if all(v.denominator == 1 for v in vals):
            continue
        D = lcm(*[v.denominator for v in vals])
        w = [int(v * D) for v in vals]
        aug = [[w[s]] + [1 if s == t else 0 for t in range(r)] for s in range(r)]
        aug.append([D] + [0] * r)
        H = hnf(aug)
        K = [row[1:] for row in H if row[0] == 0]
        lam = hnf(matmul(K, lam, _ZZ()))
    lam = hnf(lam)
    rows = []
    for u in lam:
        v = [sum((u[i] * E[i][j] for i in range(r) if u[i]), Fraction(0)) for j in range(ncols)]
        rows.append([int(x) for x in v])
    H = hnf(rows)
    return H, hnf_pivots(H)


def _ZZ():
    from .rings import ZZ
    return ZZ


def integer_coords(H, v):
    """Rational coordinates of v in the independent integer rows H (echelon), or None."""
    piv = hnf_pivots(H)
    c = []
    w = [Fraction(x) for x in v]
    for row, j in zip(H, piv):
        ci = w[j] / row[j]
        c.append(ci)
        if ci:
            w = [x - ci * y for x, y in zip(w, row)]
    if any(w):
        return None
    return c


def denominators_lcm(M):
    return lcm(*[Fraction(x).denominator for r in M for x in r]) if M else 1


def content(v):
    g = 0
    for x in v:
        g = gcd(g, int(x))
    return g
