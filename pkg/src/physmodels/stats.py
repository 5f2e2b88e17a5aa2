"""Exact two-tailed binomial statistics for branching-ratio models.

All quantities are exact rationals.  ``tail_prob(m, n, b)`` sums the binomial
probabilities of the outcomes at least as far from the mean ``m*b`` as ``n``;
the test rejects when that probability is strictly below the significance
level.  As a function of ``b`` the tail probability is piecewise polynomial
with breakpoints at ``i/(2m)``: on each open piece the qualifying outcome set
is constant, so the piece is a plain polynomial with rational coefficients,
and the breakpoints carry their own exact values.

``bounds`` computes the exact greatest lower and least upper bound of the
consistency set ``{b in [0,1] : tail_prob(m, n, b) >= alpha}`` by isolating
the roots of ``piece - alpha`` per piece and collecting candidate endpoints;
the endpoints come out as algebraic numbers (rational, or a squarefree
integer polynomial with an isolating interval).  ``interval_estimate``
serializes the two endpoints into a single nonnegative integer with a small
versioned descriptor format, and ``decay_restriction`` builds the submodel
of the decay model whose states pass the test, which turns rejection into
range membership.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from dataclasses import dataclass

from . import exact_arith, model_core
from .encodings import (
    DecodeError,
    Interval,
    int_code,
    int_decode,
    interval_code,
    interval_decode,
    pair,
    rat_code,
    rat_decode,
    unpair,
    unpair_tuple,
)
from .exact_arith import (
    AlgebraicNumber,
    Coeffs,
    isolate_roots,
    poly,
    poly_add,
    poly_divmod,
    poly_eval,
    poly_mul,
    poly_sub,
    squarefree,
)
from .model_core import Budget, Model, ObservationLog, SemiDecidableSet, restrict

DESCRIPTOR_VERSION = 1


def binom_pmf(i: int, b: Fraction, j: int) -> Fraction:
    """Probability of ``j`` tagged outcomes among ``i`` trials at ratio ``b``.

    Uses the convention 0**0 == 1, so the endpoints b == 0 and b == 1 are
    exact point masses.
    """
    if j > i or j < 0:
        raise ValueError(f"need 0 <= j <= i, got j={j}, i={i}")
    b = Fraction(b)
    if not 0 <= b <= 1:
        raise ValueError(f"ratio must be in [0, 1], got {b}")
    return comb(i, j) * b**j * (1 - b) ** (i - j)


def qualifying_outcomes(m: int, n: int, b: Fraction) -> list[int]:
    """Outcomes at least as far from the mean ``m*b`` as ``n`` is."""
    distance = abs(n - m * b)
    return [k for k in range(m + 1) if abs(k - m * b) >= distance]


def tail_prob(m: int, n: int, b: Fraction) -> Fraction:
    """Exact two-tailed tail probability."""
    if n > m:
        raise ValueError(f"need n <= m, got n={n}, m={m}")
    b = Fraction(b)
    return sum(
        (binom_pmf(m, b, k) for k in qualifying_outcomes(m, n, b)), Fraction(0)
    )


def reject(m: int, n: int, b: Fraction, alpha: Fraction) -> bool:
    """Reject at significance ``alpha`` iff the tail probability is < alpha.

    Strictly below: the behavior at tail_prob == alpha exactly is
    convention-sensitive, and this library retains in that case.
    """
    alpha = Fraction(alpha)
    if not 0 < alpha < 1:
        raise ValueError(f"significance level must be in (0, 1), got {alpha}")
    return tail_prob(m, n, b) < alpha


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise-polynomial form of the tail probability in the ratio.

    ``pieces[i]`` equals the tail probability on the open interval
    ``(i/(2m); (i+1)/(2m))``; ``breakpoint_values[i]`` is the exact value at
    ``i/(2m)``.
    """

    m: int
    n: int
    pieces: tuple[Coeffs, ...]
    breakpoint_values: tuple[Fraction, ...]

    def breakpoint(self, i: int) -> Fraction:
        return Fraction(i, 2 * self.m)

    def piece_interval(self, i: int) -> Interval:
        return Interval(self.breakpoint(i), self.breakpoint(i + 1))

    def evaluate(self, b: Fraction) -> Fraction:
        """Exact tail probability via the piecewise form."""
        b = Fraction(b)
        if not 0 <= b <= 1:
            raise ValueError(f"ratio must be in [0, 1], got {b}")
        scaled = b * 2 * self.m
        if scaled.denominator == 1:
            return self.breakpoint_values[int(scaled)]
        return poly_eval(self.pieces[int(scaled)], b)

    def discontinuities(self) -> list[Fraction]:
        """Breakpoints where the piecewise function actually jumps."""
        out = []
        for i in range(1, 2 * self.m):
            x = self.breakpoint(i)
            left = poly_eval(self.pieces[i - 1], x)
            right = poly_eval(self.pieces[i], x)
            value = self.breakpoint_values[i]
            if not (left == value == right):
                out.append(x)
        return out


def _pmf_polynomial(m: int, k: int, one_minus_b_powers: list[Coeffs]) -> Coeffs:
    # comb(m, k) * b^k * (1-b)^(m-k) as a polynomial in b
    shifted = (Fraction(0),) * k + (Fraction(comb(m, k)),)
    return poly_mul(shifted, one_minus_b_powers[m - k])


def build_piecewise(m: int, n: int) -> PiecewisePoly:
    """Symbolic piecewise decomposition of the tail probability."""
    if m < 1:
        raise ValueError("the zero-trials case has no piecewise form")
    if n > m:
        raise ValueError(f"need n <= m, got n={n}, m={m}")
    one_minus_b = poly(1, -1)
    powers = [poly(1)]
    for _ in range(m):
        powers.append(poly_mul(powers[-1], one_minus_b))
    pmf_polys = [_pmf_polynomial(m, k, powers) for k in range(m + 1)]

    pieces = []
    for i in range(2 * m):
        midpoint = Fraction(2 * i + 1, 4 * m)
        piece: Coeffs = ()
        for k in qualifying_outcomes(m, n, midpoint):
            piece = poly_add(piece, pmf_polys[k])
        pieces.append(piece)
    values = tuple(tail_prob(m, n, Fraction(i, 2 * m)) for i in range(2 * m + 1))
    return PiecewisePoly(m, n, tuple(pieces), values)


# ---------------------------------------------------------------------------
# Exact bounds of the consistency set


def _remove_root(p: Coeffs, x: Fraction) -> Coeffs:
    quotient, remainder = poly_divmod(p, poly(-x, 1))
    assert not remainder
    return quotient


def _piece_candidates(
    piece: Coeffs, alpha: Fraction, lo: Fraction, hi: Fraction
) -> "tuple[str, list[AlgebraicNumber], bool, bool] | None":
    """Analyze one open piece of the consistency set.

    Returns (kind, member_roots, touches_left, touches_right) where
    ``member_roots`` are the roots of piece - alpha inside the piece (each a
    member of the set), and the touch flags say whether the set accumulates
    at the piece boundary (making the boundary a glb/lub candidate even when
    the boundary value itself fails the test).  Returns None when the piece
    contributes nothing.
    """
    g = poly_sub(piece, (alpha,))
    if not g:
        # identically alpha: the whole open piece is in the set
        return ("full", [], True, True)
    reduced = squarefree(g)
    for endpoint in (lo, hi):
        if poly_eval(reduced, endpoint) == 0:
            reduced = _remove_root(reduced, endpoint)
    roots = (
        isolate_roots(reduced, lo, hi) if exact_arith.degree(reduced) >= 1 else []
    )
    members = [AlgebraicNumber.from_root(reduced, iv) for iv in roots]
    # Sample signs strictly between consecutive roots; isolating-interval
    # endpoints are guaranteed non-roots, so they are valid sample points.
    samples = [roots[0].lo if roots else (lo + hi) / 2]
    samples += [iv.hi for iv in roots]
    signs = [poly_eval(g, x) > 0 for x in samples]
    if not members and not any(signs):
        return None
    return ("mixed", members, signs[0], signs[-1])


def bounds(m: int, n: int, alpha: Fraction) -> tuple[AlgebraicNumber, AlgebraicNumber]:
    """Exact glb and lub of ``{b in [0,1] : tail_prob(m, n, b) >= alpha}``.

    With zero trials every ratio is consistent and the bounds are (0, 1).
    The set is never empty: the ratio ``n/m`` always has tail probability 1.
    """
    alpha = Fraction(alpha)
    if not 0 < alpha < 1:
        raise ValueError(f"significance level must be in (0, 1), got {alpha}")
    if m == 0:
        return AlgebraicNumber.from_rational(0), AlgebraicNumber.from_rational(1)
    pw = build_piecewise(m, n)
    analyses = [
        _piece_candidates(pw.pieces[i], alpha, pw.breakpoint(i), pw.breakpoint(i + 1))
        for i in range(2 * m)
    ]

    def breakpoint_member(i: int) -> bool:
        return pw.breakpoint_values[i] >= alpha

    glb: AlgebraicNumber | None = None
    for i in range(2 * m + 1):
        if breakpoint_member(i):
            glb = AlgebraicNumber.from_rational(pw.breakpoint(i))
            break
        if i < 2 * m and analyses[i] is not None:
            _, members, touches_left, _ = analyses[i]
            if touches_left:
                glb = AlgebraicNumber.from_rational(pw.breakpoint(i))
            else:
                glb = members[0]
            break

    lub: AlgebraicNumber | None = None
    for i in range(2 * m, -1, -1):
        if breakpoint_member(i):
            lub = AlgebraicNumber.from_rational(pw.breakpoint(i))
            break
        if i > 0 and analyses[i - 1] is not None:
            _, members, _, touches_right = analyses[i - 1]
            if touches_right:
                lub = AlgebraicNumber.from_rational(pw.breakpoint(i))
            else:
                lub = members[-1]
            break

    assert glb is not None and lub is not None, "the consistency set is never empty"
    return glb, lub


def bounds_grid_scan(
    m: int, n: int, alpha: Fraction, grid: int = 1024
) -> tuple[Fraction, Fraction]:
    """Brute-force oracle: extreme grid points ``t/grid`` passing the test."""
    passing = [
        Fraction(t, grid)
        for t in range(grid + 1)
        if tail_prob(m, n, Fraction(t, grid)) >= alpha
    ]
    return passing[0], passing[-1]


# ---------------------------------------------------------------------------
# Estimator descriptor codec

_TAG_RATIONAL = 0
_TAG_ROOT = 1


def algebraic_code(a: AlgebraicNumber) -> int:
    """Serialize an algebraic number into a nonnegative integer.

    Layout: pair(version, pair(tag, body)); tag 0 carries a rational code,
    tag 1 carries pair(degree, left-nested signed coefficient codes,
    isolating interval code).
    """
    if a.rational is not None:
        return pair(DESCRIPTOR_VERSION, pair(_TAG_RATIONAL, rat_code(a.rational)))
    assert a.polynomial is not None and a.isolating is not None
    deg = exact_arith.degree(a.polynomial)
    coeff_code = pair(*(int_code(int(c)) for c in a.polynomial))
    body = pair(deg, coeff_code, interval_code(a.isolating))
    return pair(DESCRIPTOR_VERSION, pair(_TAG_ROOT, body))


def algebraic_decode(n: int) -> AlgebraicNumber:
    version, rest = unpair(n)
    if version != DESCRIPTOR_VERSION:
        raise DecodeError(f"unsupported descriptor version {version}")
    tag, body = unpair(rest)
    if tag == _TAG_RATIONAL:
        return AlgebraicNumber.from_rational(rat_decode(body))
    if tag != _TAG_ROOT:
        raise DecodeError(f"unknown descriptor tag {tag}")
    deg, coeff_code, iv_code = unpair_tuple(body, 3)
    coeffs = [int_decode(c) for c in unpair_tuple(coeff_code, deg + 1)]
    return AlgebraicNumber.from_root(poly(*coeffs), interval_decode(iv_code))


def interval_estimate(m: int, n: int, alpha: Fraction) -> int:
    """Code of the exact interval estimate: pair of endpoint descriptors."""
    glb, lub = bounds(m, n, alpha)
    return pair(algebraic_code(glb), algebraic_code(lub))


def interval_estimate_decode(code: int) -> tuple[AlgebraicNumber, AlgebraicNumber]:
    left, right = unpair(code)
    return algebraic_decode(left), algebraic_decode(right)


# ---------------------------------------------------------------------------
# The decay submodel and the log-level significance bound


def consistency_set(alpha: Fraction, b: Fraction) -> SemiDecidableSet:
    """Measurement codes pair(m, n) whose tail probability passes ``alpha``."""
    alpha = Fraction(alpha)
    b = Fraction(b)

    def accepted(code: int) -> bool:
        m, n = unpair(code)
        return n <= m and tail_prob(m, n, b) >= alpha

    return SemiDecidableSet.from_predicate(accepted, f"tail_prob >= {alpha} at b={b}")


def decay_restriction(alpha: Fraction, b: Fraction) -> Model:
    """Submodel of the decay model keeping states that pass the test.

    Rejection becomes range membership: a measurement pair(m, n) is rejected
    at ``alpha`` exactly when it is absent from this model's range.
    """
    b = Fraction(b)
    if not 0 <= b <= 1:
        raise ValueError(f"ratio must be in [0, 1], got {b}")
    base = model_core.builtin("decay", b=b)
    return restrict(base, "f", consistency_set(alpha, b), Budget(1024))


UNRESTRICTED = None


def max_alpha(log: ObservationLog, b: Fraction) -> Fraction | None:
    """Exact minimum tail probability over the logged measurements.

    Any significance level strictly below the returned value keeps the decay
    submodel consistent with every logged record.  An empty log constrains
    nothing, signalled by ``None``.
    """
    b = Fraction(b)
    best: Fraction | None = None
    for sym, result in log.records:
        m, n = unpair(result)
        if n > m:
            raise ValueError(
                f"malformed decay measurement {result}: tagged count {n} > total {m}"
            )
        p = tail_prob(m, n, b)
        if best is None or p < best:
            best = p
    return best
