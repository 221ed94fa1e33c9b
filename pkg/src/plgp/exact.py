"""Exact rational scalars and the linear-algebra predicates under every geometric decision.

All geometry downstream reduces to three questions over the rationals:
a determinant, a rank, or the solution set of an affine system.  This module
answers them exactly.  No floating point is used anywhere here; callers that
need a non-squared length get a certified rational upper bound on the square
root instead (sqrt_upper / sqrt_bracket).

Elimination is fraction-free (Bareiss): rows are scaled to integers once, and
every interior division in the elimination is exact integer division, which
bounds coefficient swell to minor-sized determinants.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

Rational = Fraction

SQRT_SLACK = Fraction(1, 2**20)


def rat(value) -> Fraction:
    """Coerce ints, Fractions, and strings ("p/q", "p", "0.25") to an exact Fraction.

    Floats are rejected: every coordinate entering the toolkit must be exact.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed rational literal: {value!r}") from exc
    raise ValueError(f"cannot interpret {value!r} as an exact rational")


def rat_str(value: Fraction) -> str:
    """Serialize as "p" or "p/q"."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def vec(coords) -> tuple:
    return tuple(rat(c) for c in coords)


def vec_add(a, b) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a, b) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def vec_scale(s, a) -> tuple:
    return tuple(s * x for x in a)


def vec_dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def norm_sq(a) -> Fraction:
    return vec_dot(a, a)


def dist_sq(a, b) -> Fraction:
    return norm_sq(vec_sub(a, b))


@dataclass(frozen=True)
class Matrix:
    rows: int
    cols: int
    entries: tuple  # row-major Fractions, length rows * cols

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entry count does not match rows * cols")

    @classmethod
    def from_rows(cls, row_iterable) -> "Matrix":
        rows = [tuple(rat(x) for x in row) for row in row_iterable]
        if not rows:
            return cls(0, 0, ())
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), width, tuple(x for r in rows for x in r))

    def entry(self, i: int, j: int) -> Fraction:
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def row_list(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "Matrix":
        return Matrix(
            self.cols,
            self.rows,
            tuple(self.entry(i, j) for j in range(self.cols) for i in range(self.rows)),
        )


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def _integerize_rows(rows):
    """Scale each row by the lcm of its denominators; return (int rows, multipliers)."""
    out, mults = [], []
    for row in rows:
        m = 1
        for x in row:
            m = _lcm(m, x.denominator)
        out.append([int(x * m) for x in row])
        mults.append(m)
    return out, mults


def _exact_div(a: int, b: int) -> int:
    q, r = divmod(a, b)
    if r:
        raise ArithmeticError("non-exact division in fraction-free elimination")
    return q


def _echelon_int(rows, pivot_col_limit=None):
    """Fraction-free (Bareiss) forward elimination in place.

    Pivots are searched left to right up to pivot_col_limit columns; the update
    is applied across the full row width, so augmented columns ride along.
    Returns the list of pivot columns; rows is modified to echelon form whose
    entries are (up to sign bookkeeping) minors of the input.
    """
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    limit = ncols if pivot_col_limit is None else pivot_col_limit
    pivots = []
    r = 0
    prev = 1
    for c in range(limit):
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        piv = rows[r][c]
        for i in range(r + 1, nrows):
            f = rows[i][c]
            ri = rows[i]
            rr = rows[r]
            for j in range(ncols):
                ri[j] = _exact_div(piv * ri[j] - f * rr[j], prev)
        prev = piv
        pivots.append(c)
        r += 1
    return pivots


def det(m: Matrix) -> Fraction:
    """Exact determinant by Bareiss elimination."""
    if m.rows != m.cols:
        raise ValueError("determinant requires a square matrix")
    n = m.rows
    if n == 0:
        return Fraction(1)
    rows, mults = _integerize_rows(m.row_list())
    sign = 1
    prev = 1
    for c in range(n):
        p = next((i for i in range(c, n) if rows[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            rows[c], rows[p] = rows[p], rows[c]
            sign = -sign
        piv = rows[c][c]
        for i in range(c + 1, n):
            f = rows[i][c]
            ri = rows[i]
            rc = rows[c]
            for j in range(c, n):
                ri[j] = _exact_div(piv * ri[j] - f * rc[j], prev)
        prev = piv
    scale = 1
    for mu in mults:
        scale *= mu
    return Fraction(sign * rows[n - 1][n - 1], scale)


def rank(m: Matrix) -> int:
    """Exact rank via fraction-free elimination."""
    if m.rows == 0 or m.cols == 0:
        return 0
    rows, _ = _integerize_rows(m.row_list())
    return len(_echelon_int(rows))


@dataclass(frozen=True)
class AffineSolution:
    """Full solution set of A x = b: particular point plus kernel basis."""

    particular: tuple  # Fractions, length = cols of A
    kernel: tuple      # tuple of direction tuples, canonically scaled

    @property
    def unique(self) -> bool:
        return not self.kernel


def primitive_vector(v) -> tuple:
    """Scale to coprime integers with positive leading nonzero entry."""
    v = tuple(Fraction(x) for x in v)
    if all(x == 0 for x in v):
        return v
    m = 1
    for x in v:
        m = _lcm(m, x.denominator)
    ints = [int(x * m) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x != 0)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(Fraction(x) for x in ints)


def solve_affine(a: Matrix, b) -> AffineSolution | None:
    """Exact description of {x : A x = b}, or None when inconsistent."""
    b = [rat(x) for x in b]
    if len(b) != a.rows:
        raise ValueError("right-hand side length does not match row count")
    n = a.cols
    if a.rows == 0:
        return AffineSolution(tuple(Fraction(0) for _ in range(n)),
                              tuple(_unit_vector(n, j) for j in range(n)))
    aug = [list(a.row(i)) + [b[i]] for i in range(a.rows)]
    rows, _ = _integerize_rows(aug)
    pivots = _echelon_int(rows, pivot_col_limit=n)
    nrank = len(pivots)
    for i in range(nrank, len(rows)):
        if rows[i][n] != 0:
            return None
    free_cols = [c for c in range(n) if c not in set(pivots)]

    def back_substitute(rhs_col_value, free_assignment):
        x = [Fraction(0)] * n
        for c, val in zip(free_cols, free_assignment):
            x[c] = val
        for i in range(nrank - 1, -1, -1):
            c = pivots[i]
            acc = Fraction(rows[i][n]) * rhs_col_value
            for j in range(c + 1, n):
                if rows[i][j]:
                    acc -= rows[i][j] * x[j]
            x[c] = acc / rows[i][c]
        return tuple(x)

    particular = back_substitute(Fraction(1), [Fraction(0)] * len(free_cols))
    kernel = []
    for idx in range(len(free_cols)):
        assignment = [Fraction(0)] * len(free_cols)
        assignment[idx] = Fraction(1)
        kernel.append(primitive_vector(back_substitute(Fraction(0), assignment)))
    return AffineSolution(particular, tuple(kernel))


def _unit_vector(n, j):
    return tuple(Fraction(1 if i == j else 0) for i in range(n))


def affinely_independent(points) -> bool:
    """True iff the differences p_i - p_0 have full rank count - 1.

    Requires count <= ambient + 1 to be possibly true; duplicated points are
    dependent by definition.
    """
    pts = [vec(p) for p in points]
    if not pts:
        raise ValueError("affine independence of an empty family is undefined")
    m = len(pts[0])
    if any(len(p) != m for p in pts):
        raise ValueError("points of mixed ambient dimension")
    k = len(pts) - 1
    if k == 0:
        return True
    if k > m:
        return False
    diffs = Matrix.from_rows(vec_sub(p, pts[0]) for p in pts[1:])
    return rank(diffs) == k


def sqrt_bracket(x: Fraction, slack: Fraction = SQRT_SLACK) -> tuple:
    """Certified rational bracket lo <= sqrt(x) <= hi with hi - lo <= slack.

    Exact (lo == hi) when x is a perfect rational square; x must be >= 0.
    """
    x = rat(x)
    if x < 0:
        raise ValueError("square root of a negative rational")
    if x == 0:
        return Fraction(0), Fraction(0)
    num, den = x.numerator, x.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        r = Fraction(rn, rd)
        return r, r
    # sqrt(num/den) = sqrt(num*den)/den; the isqrt gives a width-1/den bracket
    s = isqrt(num * den)
    lo = Fraction(s, den)
    hi = Fraction(s + 1, den)
    while hi - lo > slack:
        mid = (lo + hi) / 2
        if mid * mid <= x:
            lo = mid
        else:
            hi = mid
    return lo, hi


def sqrt_upper(x: Fraction, slack: Fraction = SQRT_SLACK) -> Fraction:
    """Certified rational upper bound on sqrt(x), exact on perfect squares."""
    return sqrt_bracket(x, slack)[1]
