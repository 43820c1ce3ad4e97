"""Closed-interval arithmetic, boxes, and an affine-constraint contractor.

The decoder needs three guarantees from this module: interval evaluation
of affine maps never under-covers the true range, boxes returned by the
contractor never exclude a feasible point, and infeasibility (EMPTY) is
an explicit value rather than an inverted-endpoint convention.

Endpoints are ordinary floats with round-to-nearest arithmetic.  We do
not chase directed rounding at the ulp level; emptiness decisions inside
the contractor carry a small scale-relative margin instead, so a claim
of EMPTY is always backed by a clearly positive gap.
"""

import numpy as np

__all__ = [
    "Interval",
    "EMPTY",
    "Box",
    "matvec_box",
    "contract_affine",
    "box_hull_lp",
]

# Margin factors for emptiness proofs inside the contractor.  Plain
# intersect() stays exact; see module docstring.
_GAP_RTOL = 1e-12


class Interval:
    """A closed interval [lo, hi] with lo <= hi, or the EMPTY interval."""

    __slots__ = ("lo", "hi", "_empty")

    def __init__(self, lo, hi):
        lo = float(lo)
        hi = float(hi)
        if not (lo <= hi):
            raise ValueError(f"invalid interval endpoints [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi
        self._empty = False

    @classmethod
    def _make_empty(cls):
        it = cls.__new__(cls)
        it.lo = np.nan
        it.hi = np.nan
        it._empty = True
        return it

    @property
    def is_empty(self):
        return self._empty

    @property
    def width(self):
        if self._empty:
            raise ValueError("width of EMPTY interval is undefined")
        return self.hi - self.lo

    @property
    def center(self):
        if self._empty:
            raise ValueError("center of EMPTY interval is undefined")
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, tol=0.0):
        if self._empty:
            return False
        return self.lo - tol <= x <= self.hi + tol

    def __add__(self, other):
        if self._empty or other._empty:
            return EMPTY
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other):
        if self._empty or other._empty:
            return EMPTY
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def scale(self, a):
        """Image of the interval under multiplication by the real a."""
        if self._empty:
            return EMPTY
        a = float(a)
        if a >= 0.0:
            return Interval(a * self.lo, a * self.hi)
        return Interval(a * self.hi, a * self.lo)

    def __mul__(self, a):
        return self.scale(a)

    __rmul__ = __mul__

    def intersect(self, other):
        if self._empty or other._empty:
            return EMPTY
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return EMPTY
        return Interval(lo, hi)

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        if self._empty or other._empty:
            return self._empty and other._empty
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self._empty, self.lo, self.hi))

    def __repr__(self):
        if self._empty:
            return "Interval.EMPTY"
        return f"Interval({self.lo!r}, {self.hi!r})"


EMPTY = Interval._make_empty()


class Box:
    """An axis-aligned box: a vector of closed intervals, or EMPTY.

    A box is EMPTY as a whole; there is no mixed state where some
    components are empty and others are not.  Endpoint vectors are numpy
    arrays of equal length.
    """

    __slots__ = ("lo", "hi", "dim", "_empty")

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float).copy()
        hi = np.asarray(hi, dtype=float).copy()
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("box endpoints must be 1-d arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("box has lo > hi; use Box.empty() for the empty box")
        self.lo = lo
        self.hi = hi
        self.dim = lo.shape[0]
        self._empty = False

    @classmethod
    def empty(cls, dim):
        box = cls.__new__(cls)
        box.lo = np.full(dim, np.nan)
        box.hi = np.full(dim, np.nan)
        box.dim = int(dim)
        box._empty = True
        return box

    @classmethod
    def point(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x, x)

    @classmethod
    def uniform(cls, lo, hi, dim):
        """The cube [lo, hi]^dim."""
        return cls(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @classmethod
    def from_intervals(cls, intervals):
        intervals = list(intervals)
        if any(it.is_empty for it in intervals):
            return cls.empty(len(intervals))
        return cls([it.lo for it in intervals], [it.hi for it in intervals])

    @property
    def is_empty(self):
        return self._empty

    @property
    def center(self):
        if self._empty:
            raise ValueError("center of EMPTY box is undefined")
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self):
        if self._empty:
            raise ValueError("width of EMPTY box is undefined")
        return self.hi - self.lo

    @property
    def radius(self):
        if self._empty:
            raise ValueError("radius of EMPTY box is undefined")
        return 0.5 * (self.hi - self.lo)

    def interval(self, k):
        if self._empty:
            return EMPTY
        return Interval(self.lo[k], self.hi[k])

    def intervals(self):
        return [self.interval(k) for k in range(self.dim)]

    def contains(self, x, tol=0.0):
        if self._empty:
            return False
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.lo - tol <= x) and np.all(x <= self.hi + tol))

    def intersect(self, other):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch in box intersection")
        if self._empty or other._empty:
            return Box.empty(self.dim)
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            return Box.empty(self.dim)
        return Box(lo, hi)

    def __add__(self, other):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch in box sum")
        if self._empty or other._empty:
            return Box.empty(self.dim)
        return Box(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch in box difference")
        if self._empty or other._empty:
            return Box.empty(self.dim)
        return Box(self.lo - other.hi, self.hi - other.lo)

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        if self.dim != other.dim:
            return False
        if self._empty or other._empty:
            return self._empty and other._empty
        return bool(np.all(self.lo == other.lo) and np.all(self.hi == other.hi))

    def __repr__(self):
        if self._empty:
            return f"Box.empty({self.dim})"
        return f"Box({self.lo!r}, {self.hi!r})"


def matvec_box(A, box):
    """Interval image of a box under the linear map A.

    Componentwise this is the exact interval matrix-vector product: each
    output component is [A @ c - |A| @ r, A @ c + |A| @ r] with c, r the
    center and radius of the input box.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] != box.dim:
        raise ValueError("shape mismatch between matrix and box")
    if box.is_empty:
        return Box.empty(A.shape[0])
    c = A @ box.center
    r = np.abs(A) @ box.radius
    return Box(c - r, c + r)


def _gap_eps(scale):
    return _GAP_RTOL * (1.0 + scale)


def _contract_affine_batch(A, lo, hi, c_lo, c_hi, tol, max_sweeps):
    """Forward-backward contraction of K boxes against A x in [c].

    Parameters
    ----------
    A : (m, n) array
    lo, hi : (K, n) arrays, contracted in place
    c_lo, c_hi : (K, m) arrays of constraint intervals
    tol : relative stall threshold on per-sweep width contraction
    max_sweeps : hard sweep cap

    Returns the boolean (K,) array marking boxes proven EMPTY.  The
    emptiness tests carry a small scale-relative margin so that rounding
    can never manufacture a false infeasibility proof; near-touching
    intersections collapse to a point instead.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    K = lo.shape[0]
    empty = np.zeros(K, dtype=bool)
    pos = A >= 0.0

    for _ in range(max_sweeps):
        w_before = hi - lo
        for j in range(m):
            a = A[j]
            t_lo = np.where(pos[j], a * lo, a * hi)
            t_hi = np.where(pos[j], a * hi, a * lo)
            pre_lo = np.concatenate([np.zeros((K, 1)), np.cumsum(t_lo, axis=1)], axis=1)
            pre_hi = np.concatenate([np.zeros((K, 1)), np.cumsum(t_hi, axis=1)], axis=1)
            suf_lo = np.concatenate([np.cumsum(t_lo[:, ::-1], axis=1)[:, ::-1], np.zeros((K, 1))], axis=1)
            suf_hi = np.concatenate([np.cumsum(t_hi[:, ::-1], axis=1)[:, ::-1], np.zeros((K, 1))], axis=1)
            s_lo = pre_lo[:, -1]
            s_hi = pre_hi[:, -1]

            scale = np.abs(s_lo) + np.abs(s_hi) + np.abs(c_lo[:, j]) + np.abs(c_hi[:, j])
            eps = _gap_eps(scale)
            f_lo = np.maximum(s_lo, c_lo[:, j])
            f_hi = np.minimum(s_hi, c_hi[:, j])
            gap = f_lo - f_hi
            empty |= gap > eps
            # near-touching forward ranges collapse to a point
            mid = np.where(gap > 0.0, 0.5 * (f_lo + f_hi), 0.0)
            touch = (gap > 0.0) & ~empty
            f_lo = np.where(touch, mid, f_lo)
            f_hi = np.where(touch, mid, f_hi)

            # backward: [x_k] <- [x_k] /\ (f - sum_{k' != k} t_k') / a_k
            ex_lo = pre_lo[:, :-1] + suf_lo[:, 1:]
            ex_hi = pre_hi[:, :-1] + suf_hi[:, 1:]
            num_lo = f_lo[:, None] - ex_hi
            num_hi = f_hi[:, None] - ex_lo
            nz = a != 0.0
            a_safe = np.where(nz, a, 1.0)
            cand_lo = np.where(a > 0.0, num_lo, num_hi) / a_safe
            cand_hi = np.where(a > 0.0, num_hi, num_lo) / a_safe
            new_lo = np.where(nz, np.maximum(lo, cand_lo), lo)
            new_hi = np.where(nz, np.minimum(hi, cand_hi), hi)

            cgap = new_lo - new_hi
            ceps = _gap_eps(np.abs(new_lo) + np.abs(new_hi))
            empty |= np.any(cgap > ceps, axis=1)
            cmid = 0.5 * (new_lo + new_hi)
            ctouch = cgap > 0.0
            new_lo = np.where(ctouch, cmid, new_lo)
            new_hi = np.where(ctouch, cmid, new_hi)
            keep = ~empty
            lo[keep] = new_lo[keep]
            hi[keep] = new_hi[keep]

        if np.all(empty):
            break
        contraction = np.max(w_before - (hi - lo), axis=1)
        reference = np.maximum(np.max(w_before, axis=1), 1e-300)
        if np.all(empty | (contraction < tol * reference)):
            break

    return empty


def contract_affine(A, x0, c, tol=1e-6, max_sweeps=50):
    """Contract the box x0 against the affine range constraints A x in c.

    Parameters
    ----------
    A : (m, n) array of reals
    x0 : Box of dimension n, the prior enclosure of x
    c : Box of dimension m, one constraint interval per row of A
    tol : float
        Relative stall threshold; sweeping stops once no component width
        shrinks by more than tol times the current largest width.
    max_sweeps : int
        Hard cap on the number of forward-backward sweeps.

    Returns a Box contained in x0 that still contains every x in x0 with
    A x in c, or EMPTY when the constraints are proven infeasible.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    m, n = A.shape
    if x0.dim != n or c.dim != m:
        raise ValueError("shape mismatch between A, x0, and c")
    if tol <= 0.0 or max_sweeps < 1:
        raise ValueError("tol must be positive and max_sweeps at least 1")
    if x0.is_empty or c.is_empty:
        return Box.empty(n)

    lo = x0.lo[None, :].copy()
    hi = x0.hi[None, :].copy()
    empty = _contract_affine_batch(A, lo, hi, c.lo[None, :], c.hi[None, :], tol, max_sweeps)
    if empty[0]:
        return Box.empty(n)
    return Box(lo[0], hi[0])


def box_hull_lp(A, x0, c):
    """Exact box hull of {x in x0 : A x in c} via 2n linear programs.

    Slower than contract_affine but tight: each face of the returned box
    touches the feasible polytope.  Returns EMPTY when the polytope is
    empty.  Intended as a cross-check and as an optional contractor
    backend; requires scipy.
    """
    from scipy.optimize import linprog

    A = np.asarray(A, dtype=float)
    m, n = A.shape
    if x0.dim != n or c.dim != m:
        raise ValueError("shape mismatch between A, x0, and c")
    if x0.is_empty or c.is_empty:
        return Box.empty(n)

    A_ub = np.vstack([A, -A])
    b_ub = np.concatenate([c.hi, -c.lo])
    bounds = list(zip(x0.lo, x0.hi))
    lo = np.empty(n)
    hi = np.empty(n)
    for k in range(n):
        obj = np.zeros(n)
        obj[k] = 1.0
        res = linprog(obj, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status == 2:
            return Box.empty(n)
        if not res.success:
            raise RuntimeError(f"LP solve failed: {res.message}")
        lo[k] = res.fun
        res = linprog(-obj, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if not res.success:
            raise RuntimeError(f"LP solve failed: {res.message}")
        hi[k] = -res.fun
    hi = np.maximum(hi, lo)
    return Box(lo, hi)
