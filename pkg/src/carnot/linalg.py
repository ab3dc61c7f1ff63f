"""Small exact linear algebra over the rationals.

Rows are sequences of ``Fraction`` (ints are accepted).  Everything here is
row-oriented: a list of rows spans a subspace of Q^n.
"""

from fractions import Fraction


def _frac_row(row):
    return [x if isinstance(x, Fraction) else Fraction(x) for x in row]


def rref(rows, ncols=None):
    """Reduced row echelon form.

    Returns ``(reduced, pivots)`` where ``reduced`` holds only the nonzero
    rows and ``pivots[i]`` is the pivot column of ``reduced[i]``.
    """
    m = [_frac_row(r) for r in rows]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(m)):
            if m[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        if p != 1:
            m[r] = [x / p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows, ncols=None):
    return len(rref(rows, ncols)[1])


def nullspace(rows, ncols):
    """Basis of {x : row . x = 0 for every row}."""
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def reduce_against(vec, red, pivots):
    """Reduce ``vec`` modulo the row space given in rref form."""
    v = _frac_row(vec)
    for row, p in zip(red, pivots):
        if v[p] != 0:
            f = v[p]
            v = [a - f * b for a, b in zip(v, row)]
    return v


class Span:
    """Incrementally grown row space kept in reduced echelon form."""

    def __init__(self, ncols, rows=()):
        self.ncols = ncols
        self.rows = []
        self.pivots = []
        for r in rows:
            self.add(r)

    def __len__(self):
        return len(self.rows)

    def contains(self, vec):
        return not any(reduce_against(vec, self.rows, self.pivots))

    def add(self, vec):
        """Add ``vec``; return True when the dimension grew."""
        v = reduce_against(vec, self.rows, self.pivots)
        c = next((i for i, x in enumerate(v) if x != 0), None)
        if c is None:
            return False
        p = v[c]
        v = [x / p for x in v]
        for i, row in enumerate(self.rows):
            if row[c] != 0:
                f = row[c]
                self.rows[i] = [a - f * b for a, b in zip(row, v)]
        # keep pivots sorted so rows stay in echelon order
        k = 0
        while k < len(self.pivots) and self.pivots[k] < c:
            k += 1
        self.rows.insert(k, v)
        self.pivots.insert(k, c)
        return True

    def basis(self):
        return [list(r) for r in self.rows]
