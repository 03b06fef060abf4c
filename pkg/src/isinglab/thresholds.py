"""Infinite-tree quantities for the ferromagnetic Ising model.

Fixed points of the degree-(delta-1) tree recursion

    R = lambda * (R e^beta + 1)^(delta-1) / (R + e^beta)^(delta-1)

drive everything here: the uniqueness thresholds beta_u and lambda_u, the
plus/minus tree magnetizations eta+/eta-, the analytic-threshold upper bound
lambda_a_bar, and the derived magnetization thresholds eta_c, eta_u,
eta_a_bar.

Root finding works on the equivalent polynomial in r = R^(1/(delta-1)),

    hhat(r) = r^(d+1) - lambda^(1/d) e^beta r^d + e^beta r - lambda^(1/d),

whose positive real roots number 1 or 3 (counted with multiplicity, by
Descartes' rule of signs); a tangency double root is reported with a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .errors import InvalidInputError, NoNonuniquenessError

MARGINAL_BAND = 1e-8
ROOT_DEDUP = 1e-8


def beta_u(delta: int) -> float:
    """Uniqueness threshold in beta: ln(delta / (delta - 2))."""
    if delta < 3:
        raise InvalidInputError("beta_u needs delta >= 3")
    return math.log(delta / (delta - 2))


@dataclass(frozen=True)
class TreeFixedPoint:
    R: float
    stable: bool
    derivative: float
    marginal: bool = False  # |h'(R) - 1| within the tangency band
    double_root: bool = False  # found as a tangency of hhat (multiplicity 2)


def _recursion_value(R: float, delta: int, beta: float, lam: float) -> float:
    eb = math.exp(beta)
    return lam * ((R * eb + 1) / (R + eb)) ** (delta - 1)


def _recursion_derivative(R: float, delta: int, beta: float, lam: float) -> float:
    # h'(x) = d (e^{2 beta} - 1) h(x) / ((e^beta x + 1)(x + e^beta))
    eb = math.exp(beta)
    h = _recursion_value(R, delta, beta, lam)
    return (delta - 1) * (math.exp(2 * beta) - 1) * h / ((eb * R + 1) * (R + eb))


def tree_fixed_points(delta: int, beta: float, lam: float) -> list:
    """All positive fixed points of the tree recursion, with stability.

    Simple roots come from bracketed bisection over sign changes of hhat on a
    log-spaced r grid plus Newton polish; tangency double roots are caught at
    the critical points of hhat and flagged.
    """
    if delta < 3:
        raise InvalidInputError("need delta >= 3")
    if beta < 0 or lam <= 0:
        raise InvalidInputError("need beta >= 0 and lambda > 0")
    d = delta - 1
    eb = math.exp(beta)
    c = lam ** (1.0 / d)

    def hhat(r):
        return r ** (d + 1) - c * eb * r**d + eb * r - c

    def hhat_prime(r):
        return (d + 1) * r**d - d * c * eb * r ** (d - 1) + eb

    lo_exp, hi_exp, npts = -9.0, 9.0, 4000
    grid = [10 ** (lo_exp + (hi_exp - lo_exp) * i / npts) for i in range(npts + 1)]

    def bisect(f, a, b):
        fa = f(a)
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = f(mid)
            if fm == 0:
                return mid
            if (fa < 0) == (fm < 0):
                a, fa = mid, fm
            else:
                b = mid
            if b - a <= 1e-16 * max(1.0, a):
                break
        return 0.5 * (a + b)

    def newton_polish(r0):
        r = r0
        for _ in range(60):
            fp = hhat_prime(r)
            if fp == 0:
                break
            step = hhat(r) / fp
            r_new = r - step
            if r_new <= 0:
                break
            r = r_new
            if abs(step) <= 1e-16 * max(1.0, r):
                break
        return r

    # Critical points of hhat: between consecutive ones hhat is monotone, so
    # bracketing over the breakpoint intervals finds every simple root even
    # when two roots sit arbitrarily close (just before a tangency).
    crits = []
    dvals = [hhat_prime(r) for r in grid]
    for i in range(npts):
        if (dvals[i] < 0) != (dvals[i + 1] < 0):
            crits.append(bisect(hhat_prime, grid[i], grid[i + 1]))
    breakpoints = [grid[0]] + sorted(crits) + [grid[-1]]

    roots = []  # (r, double_flag)
    for a, b in zip(breakpoints, breakpoints[1:]):
        fa, fb = hhat(a), hhat(b)
        if fa == 0.0:
            roots.append((a, False))
        if (fa < 0) != (fb < 0):
            roots.append((newton_polish(bisect(hhat, a, b)), False))
    if hhat(breakpoints[-1]) == 0.0:
        roots.append((breakpoints[-1], False))

    # Tangency double roots sit at critical points with hhat ~ 0 and no
    # simple crossing nearby.
    for rc in crits:
        scale = max(1.0, abs(rc) ** (d + 1))
        if abs(hhat(rc)) <= 1e-12 * scale and not any(
            abs(r - rc) <= 1e-5 * max(1.0, rc) for r, _ in roots
        ):
            roots.append((rc, True))

    roots.sort()
    dedup = []
    for r, dbl in roots:
        if dedup and abs(r - dedup[-1][0]) <= ROOT_DEDUP * max(1.0, r):
            if dbl:
                dedup[-1] = (dedup[-1][0], True)
            continue
        dedup.append((r, dbl))

    # A pair of simple roots closer than 1e-6 in r is a tangency that the
    # floating-point lambda cannot hit exactly; report it as one double root.
    merged = []
    i = 0
    while i < len(dedup):
        if i + 1 < len(dedup) and (
            dedup[i + 1][0] - dedup[i][0] <= 1e-6 * max(1.0, dedup[i + 1][0])
        ):
            merged.append((0.5 * (dedup[i][0] + dedup[i + 1][0]), True))
            i += 2
        else:
            merged.append(dedup[i])
            i += 1
    dedup = merged

    out = []
    for r, dbl in dedup:
        R = r**d
        deriv = _recursion_derivative(R, delta, beta, lam)
        marginal = abs(abs(deriv) - 1.0) < MARGINAL_BAND
        out.append(
            TreeFixedPoint(
                R=R,
                stable=abs(deriv) < 1 and not marginal,
                derivative=deriv,
                marginal=marginal or dbl,
                double_root=dbl,
            )
        )
    return out


def eta_of_fixed_point(R: float, beta: float) -> float:
    """Magnetization of the tree root whose incoming messages equal R.

    The root likelihood ratio is T = R (R e^beta + 1)/(R + e^beta); the same
    map sends each fixed point to the critical point of the annealed
    free-energy curve it corresponds to.
    """
    eb = math.exp(beta)
    T = R * (R * eb + 1) / (R + eb)
    return (T - 1) / (T + 1)


def _field_solutions(delta: int, beta: float, lam: float) -> list:
    """All solutions of L = (1/2) log(lambda) + (delta-1) artanh(tanh L tanh(beta/2)).

    This is the tree fixed-point equation in half-log-likelihood form
    (L = (1/2) log R); the largest solution feeds eta_plus, the smallest
    eta_minus.
    """
    th = math.tanh(beta / 2)
    half_log_lam = 0.5 * math.log(lam)
    # |artanh(tanh(L) tanh(beta/2))| < beta/2, so every solution satisfies
    # |L| <= |log(lam)|/2 + (delta-1) beta/2.
    span = abs(half_log_lam) + (delta - 1) * beta / 2 + 2.0

    def F(L):
        return half_log_lam + (delta - 1) * math.atanh(math.tanh(L) * th) - L

    npts = 20000
    grid = [-span + 2 * span * i / npts for i in range(npts + 1)]
    vals = [F(L) for L in grid]
    sols = []
    for i in range(npts):
        if vals[i] == 0.0:
            sols.append(grid[i])
        elif (vals[i] < 0) != (vals[i + 1] < 0):
            a, b = grid[i], grid[i + 1]
            fa = vals[i]
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = F(mid)
                if (fa < 0) == (fm < 0):
                    a, fa = mid, fm
                else:
                    b = mid
            sols.append(0.5 * (a + b))
    dedup = []
    for s in sorted(sols):
        if not dedup or abs(s - dedup[-1]) > 1e-9:
            dedup.append(s)
    return dedup


def L_star(delta: int, beta: float, lam: float) -> float:
    """Largest solution of the tree field equation (see _field_solutions)."""
    if delta < 3:
        raise InvalidInputError("need delta >= 3")
    return max(_field_solutions(delta, beta, lam))


def _eta_from_L(L: float, beta: float) -> float:
    return math.tanh(L + math.atanh(math.tanh(L) * math.tanh(beta / 2)))


def eta_plus(delta: int, beta: float, lam: float) -> float:
    """Mean root magnetization of the plus measure on the delta-regular tree."""
    return _eta_from_L(L_star(delta, beta, lam), beta)


def eta_minus(delta: int, beta: float, lam: float) -> float:
    """Mean root magnetization of the minus measure (smallest field solution)."""
    return _eta_from_L(min(_field_solutions(delta, beta, lam)), beta)


def _fixed_point_count(delta: int, beta: float, lam: float) -> int:
    return len(tree_fixed_points(delta, beta, lam))


def lambda_u(delta: int, beta: float, tol: float = 1e-10) -> float:
    """Field uniqueness threshold: where the fixed-point count drops 3 -> 1.

    Bisection on the count for robustness, then refined via the tangency
    system h(x) = x, h'(x) = 1, which reduces to a quadratic in x whose
    larger-lambda branch is lambda_u.
    """
    if beta <= beta_u(delta):
        raise NoNonuniquenessError(
            f"beta={beta} <= beta_u({delta})={beta_u(delta):.6f}: unique for all lambda"
        )
    lo = 1.0
    hi = 2.0
    while _fixed_point_count(delta, beta, hi) >= 3:
        hi *= 2
        if hi > 1e8:
            raise InvalidInputError("lambda_u search diverged")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _fixed_point_count(delta, beta, mid) >= 3:
            lo = mid
        else:
            hi = mid
    coarse = 0.5 * (lo + hi)

    # Tangency refinement: e^b x^2 - (d(e^{2b}-1) - 1 - e^{2b}) x + e^b = 0,
    # lambda(x) = x ((x + e^b)/(x e^b + 1))^d; the two roots give lambda_u
    # and 1/lambda_u.
    d = delta - 1
    eb, e2b = math.exp(beta), math.exp(2 * beta)
    B = -(d * (e2b - 1) - 1 - e2b)
    disc = B * B - 4 * eb * eb
    if disc <= 0:
        return coarse
    cands = []
    for sign in (+1, -1):
        x = (-B + sign * math.sqrt(disc)) / (2 * eb)
        if x > 0:
            cands.append(x * ((x + eb) / (x * eb + 1)) ** d)
    refined = max(cands)
    return refined if abs(refined - coarse) < 1e-6 * refined else coarse


def lambda_a_bar(delta: int, beta: float) -> float:
    """Best known upper bound on the analytic threshold lambda_a.

    min{ ((delta-2) e^{2 beta} - delta) / e^{beta (2 - delta)}, e^{beta delta} };
    the first branch is nonpositive for beta <= beta_u, in which case only the
    second applies.
    """
    if delta < 3:
        raise InvalidInputError("need delta >= 3")
    second = math.exp(beta * delta)
    first_num = (delta - 2) * math.exp(2 * beta) - delta
    if first_num <= 0:
        return second
    first = first_num / math.exp(beta * (2 - delta))
    return min(first, second)


@dataclass(frozen=True)
class ThresholdSet:
    delta: int
    beta: float
    beta_u: float
    lambda_u: float | None
    lambda_a_bar: float
    eta_c: float
    eta_u: float | None
    eta_a_bar: float
    lam: float | None = None
    L_star: float | None = None
    eta_plus: float | None = None
    eta_minus: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def compute_thresholds(delta: int, beta: float, lam: float | None = None) -> ThresholdSet:
    """Assemble the full threshold report for one (delta, beta)."""
    bu = beta_u(delta)
    lab = lambda_a_bar(delta, beta)
    ec = eta_plus(delta, beta, 1.0)
    if beta > bu:
        lu = lambda_u(delta, beta)
        eu = eta_plus(delta, beta, lu)
    else:
        lu, eu = None, None
    ea = eta_plus(delta, beta, lab)
    extra = {}
    if lam is not None:
        extra = {
            "lam": lam,
            "L_star": L_star(delta, beta, lam),
            "eta_plus": eta_plus(delta, beta, lam),
            "eta_minus": eta_minus(delta, beta, lam),
        }
    ts = ThresholdSet(
        delta=delta,
        beta=beta,
        beta_u=bu,
        lambda_u=lu,
        lambda_a_bar=lab,
        eta_c=ec,
        eta_u=eu,
        eta_a_bar=ea,
        **extra,
    )
    if beta > bu and not (0 < ts.eta_c < ts.eta_u < ts.eta_a_bar):
        raise AssertionError(
            f"threshold ordering violated: eta_c={ts.eta_c} eta_u={ts.eta_u} "
            f"eta_a_bar={ts.eta_a_bar}"
        )
    return ts
