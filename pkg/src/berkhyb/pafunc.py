"""Exact piecewise-affine functions: on dual complexes and on the line.

Values live in the span {1, log r, 1/log r} (see exactnum).  On a dual
complex a PA function is affine per simplex; constants are absorbed into
gradients through the simplex identity sum a_j w_j = 1, so a piece is a
pair of gradient vectors (log r part, rational part).  Line functions
carry rational slopes with breakpoints and values in the exact span;
they are the potential profiles in the valuation coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exactnum import LogRVal, as_fraction


class ContinuityError(ValueError):
    pass


class PAFunctionOnComplex:
    """Affine data per simplex: value(w) = <g_logr, w> log r + <g_const, w>."""

    def __init__(self, complex_, pieces: dict):
        self.complex = complex_
        self.pieces = dict(pieces)
        for s in complex_.simplices:
            if s.stratum not in self.pieces:
                raise ValueError(f"missing affine data on stratum {s.stratum}")

    def eval_weights(self, stratum, weights) -> LogRVal:
        g_logr, g_const = self.pieces[tuple(stratum)]
        ws = [as_fraction(w) for w in weights]
        b = sum((g * w for g, w in zip(g_logr, ws)), Fraction(0))
        a = sum((g * w for g, w in zip(g_const, ws)), Fraction(0))
        return LogRVal(const=a, logr=b)

    def eval_point(self, point) -> LogRVal:
        return self.eval_weights(point.stratum, point.weights)

    def vertex_value(self, i: int) -> LogRVal:
        model = self.complex.model
        return self.eval_weights((i,), (Fraction(1, model.multiplicity(i)),))

    def check_face_continuity(self):
        """Exact agreement of affine pieces on shared faces."""
        for s in self.complex.simplices:
            for face in self.complex.faces_of(s.stratum):
                g_logr_f, g_const_f = self.pieces[face]
                g_logr_s, g_const_s = self.pieces[s.stratum]
                pos = {j: k for k, j in enumerate(s.stratum)}
                for idx, j in enumerate(face):
                    if g_logr_f[idx] != g_logr_s[pos[j]] or g_const_f[idx] != g_const_s[pos[j]]:
                        raise ContinuityError(
                            f"face {face} disagrees with simplex {s.stratum} at {j}"
                        )
        return True

    def csv_rows(self):
        """Rows (simplex id, gradient log r part, gradient const part)."""
        rows = []
        for k, s in enumerate(self.complex.simplices):
            g_logr, g_const = self.pieces[s.stratum]
            rows.append(
                (
                    k,
                    "|".join(str(j) for j in s.stratum),
                    "|".join(str(g) for g in g_logr),
                    "|".join(str(g) for g in g_const),
                )
            )
        return rows


@dataclass(frozen=True)
class AffineLine:
    """One affine piece s*x + o on the line; slope rational, offset exact."""

    slope: Fraction
    offset: LogRVal

    def eval(self, x) -> LogRVal:
        if isinstance(x, LogRVal):
            return self.slope * x + self.offset
        return LogRVal.of(as_fraction(x) * self.slope) + self.offset


def _intersect(l1: AffineLine, l2: AffineLine) -> LogRVal:
    # x with l1(x) = l2(x); requires distinct slopes
    return (l2.offset - l1.offset) / (l1.slope - l2.slope)


def upper_envelope(lines: Sequence[AffineLine], r: Fraction) -> "PAFunction1D":
    """Convex upper envelope max_i (s_i x + o_i) as a PAFunction1D."""
    if not lines:
        raise ValueError("empty family")
    by_slope: dict[Fraction, AffineLine] = {}
    for ln in lines:
        s = as_fraction(ln.slope)
        cur = by_slope.get(s)
        if cur is None or ln.offset.cmp(cur.offset, r) > 0:
            by_slope[s] = AffineLine(s, ln.offset)
    ordered = [by_slope[s] for s in sorted(by_slope)]
    hull: list[AffineLine] = []
    cuts: list[LogRVal] = []
    for ln in ordered:
        while hull:
            x = _intersect(hull[-1], ln)
            if cuts and x.cmp(cuts[-1], r) <= 0:
                hull.pop()
                cuts.pop()
                continue
            hull.append(ln)
            cuts.append(x)
            break
        else:
            hull.append(ln)
    return PAFunction1D(hull, cuts, r)


class PAFunction1D:
    """Piecewise-affine function on the line, pieces ordered by slope.

    ``pieces[i]`` is active on (cuts[i-1], cuts[i]); convex iff slopes are
    nondecreasing, which holds by construction for envelopes.  General
    (possibly concave) functions are represented the same way with pieces
    listed left to right.
    """

    def __init__(self, pieces: Sequence[AffineLine], cuts: Sequence[LogRVal],
                 r: Fraction):
        if len(pieces) != len(cuts) + 1:
            raise ValueError("pieces/cuts length mismatch")
        self.pieces = list(pieces)
        self.cuts = list(cuts)
        self.r = r
        for i in range(1, len(self.cuts)):
            if self.cuts[i].cmp(self.cuts[i - 1], r) < 0:
                raise ValueError("breakpoints not sorted")
        for i, x in enumerate(self.cuts):
            left, right = self.pieces[i], self.pieces[i + 1]
            if left.eval(x) != right.eval(x):
                raise ContinuityError(f"pieces disagree at breakpoint {i}")

    @classmethod
    def constant(cls, value, r: Fraction) -> "PAFunction1D":
        return cls([AffineLine(Fraction(0), LogRVal.of(value))], [], r)

    @classmethod
    def from_breakpoints(cls, xs, ys, r: Fraction,
                         left_slope=0, right_slope=0) -> "PAFunction1D":
        """Interpolating PA function through exact points, with end slopes."""
        xs = [x if isinstance(x, LogRVal) else LogRVal.of(as_fraction(x)) for x in xs]
        ys = [y if isinstance(y, LogRVal) else LogRVal.of(as_fraction(y)) for y in ys]
        if len(xs) != len(ys) or not xs:
            raise ValueError("need matching nonempty sample lists")
        pieces = []
        ls = as_fraction(left_slope)
        pieces.append(AffineLine(ls, ys[0] - ls * xs[0]))
        for i in range(len(xs) - 1):
            dx = xs[i + 1] - xs[i]
            dy = ys[i + 1] - ys[i]
            if not dx.is_rational():
                # generic slope (dy/dx) only representable when dx rational
                raise ValueError("breakpoint spacing must be rational")
            s = None
            if dy.is_rational():
                s = dy.rational_part() / dx.rational_part()
                pieces.append(AffineLine(s, ys[i] - s * xs[i]))
            else:
                raise ValueError("interpolation needs rational value differences")
        rs = as_fraction(right_slope)
        pieces.append(AffineLine(rs, ys[-1] - rs * xs[-1]))
        return cls(pieces, xs, r)

    def eval(self, x) -> LogRVal:
        xv = x if isinstance(x, LogRVal) else LogRVal.of(as_fraction(x))
        idx = 0
        while idx < len(self.cuts) and xv.cmp(self.cuts[idx], self.r) > 0:
            idx += 1
        return self.pieces[idx].eval(xv)

    def _float_tables(self):
        cached = getattr(self, "_ftab", None)
        if cached is None:
            import numpy as np

            cached = (
                np.array([c.to_float(self.r) for c in self.cuts]),
                np.array([float(p.slope) for p in self.pieces]),
                np.array([p.offset.to_float(self.r) for p in self.pieces]),
            )
            self._ftab = cached
        return cached

    def eval_float(self, x: float) -> float:
        cuts, slopes, offsets = self._float_tables()
        idx = 0
        while idx < len(cuts) and x > cuts[idx]:
            idx += 1
        return slopes[idx] * x + offsets[idx]

    def eval_float_array(self, xs):
        """Vectorized float evaluation (numpy array in, array out)."""
        import numpy as np

        cuts, slopes, offsets = self._float_tables()
        xs = np.asarray(xs, dtype=float)
        idx = np.searchsorted(cuts, xs, side="left")
        return slopes[idx] * xs + offsets[idx]

    def kinks(self) -> list[tuple[LogRVal, Fraction]]:
        """(location, slope increase) at each breakpoint, zero jumps dropped."""
        out = []
        for i, x in enumerate(self.cuts):
            jump = self.pieces[i + 1].slope - self.pieces[i].slope
            if jump != 0:
                out.append((x, jump))
        return out

    def slopes(self) -> list[Fraction]:
        return [p.slope for p in self.pieces]

    def is_convex(self) -> bool:
        ss = self.slopes()
        return all(ss[i + 1] >= ss[i] for i in range(len(ss) - 1))

    def scale(self, q) -> "PAFunction1D":
        q = as_fraction(q)
        if q < 0:
            raise ValueError("negative scaling would reorder pieces")
        return PAFunction1D(
            [AffineLine(p.slope * q, p.offset * q) for p in self.pieces],
            list(self.cuts),
            self.r,
        )

    def shift(self, c) -> "PAFunction1D":
        cv = LogRVal.of(c)
        return PAFunction1D(
            [AffineLine(p.slope, p.offset + cv) for p in self.pieces],
            list(self.cuts),
            self.r,
        )

    def _merged_cuts(self, other: "PAFunction1D") -> list[LogRVal]:
        merged: list[LogRVal] = []
        for x in self.cuts + other.cuts:
            if not any(x == y for y in merged):
                merged.append(x)
        merged.sort(key=lambda v: v.to_float(self.r))
        # exact re-sort: bubble by certified comparison (float sort is a
        # good initial order; certify adjacent pairs)
        for i in range(1, len(merged)):
            j = i
            while j > 0 and merged[j].cmp(merged[j - 1], self.r) < 0:
                merged[j], merged[j - 1] = merged[j - 1], merged[j]
                j -= 1
        return merged

    def _piece_at(self, x: LogRVal) -> AffineLine:
        idx = 0
        while idx < len(self.cuts) and x.cmp(self.cuts[idx], self.r) >= 0:
            idx += 1
        return self.pieces[idx]

    def add(self, other: "PAFunction1D") -> "PAFunction1D":
        cuts = self._merged_cuts(other)
        pieces = []
        samples = self._interval_samples(cuts)
        for x in samples:
            p, q = self._piece_at(x), other._piece_at(x)
            pieces.append(AffineLine(p.slope + q.slope, p.offset + q.offset))
        return PAFunction1D(pieces, cuts, self.r)

    def sub(self, other: "PAFunction1D") -> "PAFunction1D":
        return self.add(other.scale_signed(-1))

    def scale_signed(self, q) -> "PAFunction1D":
        # pieces are positional (left to right), so any sign works
        q = as_fraction(q)
        scaled = [AffineLine(p.slope * q, p.offset * q) for p in self.pieces]
        return PAFunction1D(scaled, list(self.cuts), self.r)

    def _interval_samples(self, cuts: list[LogRVal]) -> list[LogRVal]:
        """One probe point inside each interval delimited by ``cuts``."""
        if not cuts:
            return [LogRVal.of(0)]
        samples = [cuts[0] - 1]
        for i in range(len(cuts) - 1):
            samples.append((cuts[i] + cuts[i + 1]) / 2)
        samples.append(cuts[-1] + 1)
        return samples

    def end_slopes(self) -> tuple[Fraction, Fraction]:
        return self.pieces[0].slope, self.pieces[-1].slope
