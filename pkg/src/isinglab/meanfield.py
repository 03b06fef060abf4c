"""Annealed first-moment landscape on random regular graphs.

For magnetization eta, the expected contribution of magnetization-eta
configurations to the partition function of the configuration model grows
like e^{n f(eta)} with

    f(eta) = max_B g(eta, B),
    g(eta, B) = -(delta-1) H((1+eta)/2) - (delta/2) sum_{ij} B(i,j) log B(i,j)
                + (beta delta/2) sum_i B(i,i) + (1+eta)/2 * log(lambda),

where B is the symmetric 2x2 edge-statistics matrix with row sums
(1+eta)/2 and (1-eta)/2 and H is the binary entropy.  The inner maximum is
one-dimensional in the bichromatic fraction b0 and strictly concave, so a
bounded scalar search plus a Newton polish pins it to full precision.

Also provides the finite-n annealed value log E[Z_{G,k}] computed exactly in
log space from binomials and double factorials.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, log, exp

from .errors import InvalidInputError

ETA_CLIP = 1e-6  # landscape grids stay inside [-1 + clip, 1 - clip]
STATIONARITY_TOL = 1e-10
MARGINAL_F2_BAND = 1e-8


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * log(x) - (1 - x) * log(1 - x)


@dataclass(frozen=True)
class EdgeStatistics:
    """Per-edge color statistics (b_plus, b_zero, b_minus) at magnetization eta."""

    eta: float
    b_plus: float
    b_zero: float
    b_minus: float
    boundary: bool = False

    def residuals(self) -> tuple:
        return (
            self.b_plus + self.b_zero - (1 + self.eta) / 2,
            self.b_minus + self.b_zero - (1 - self.eta) / 2,
        )


def _g_of_b0(eta: float, b0: float, delta: int, beta: float, lam: float) -> float:
    bp = (1 + eta) / 2 - b0
    bm = (1 - eta) / 2 - b0
    ent = 0.0
    for b in (bp, bm):
        if b > 0:
            ent += b * log(b)
    if b0 > 0:
        ent += 2 * b0 * log(b0)
    return (
        -(delta - 1) * binary_entropy((1 + eta) / 2)
        - delta / 2 * ent
        + beta * delta / 2 * (bp + bm)
        + (1 + eta) / 2 * log(lam)
    )


def maximize_B(eta: float, delta: int, beta: float, lam: float) -> EdgeStatistics:
    """Unique maximizer of g(eta, .) on the constraint set.

    g is strictly concave in b0, so the interior optimum is the unique root
    of the stationarity condition b0^2 e^{2 beta} = b_plus b_minus, whose log
    form is strictly decreasing in b0.  Bisection on it followed by a damped
    Newton polish resolves the optimum even when it hugs the b_minus = 0
    boundary (|eta| -> 1), where a fixed-xatol golden-section search cannot.
    """
    if not (-1.0 <= eta <= 1.0):
        raise InvalidInputError("eta must lie in [-1, 1]")
    hi = min((1 + eta) / 2, (1 - eta) / 2)
    if hi <= 0.0:
        return EdgeStatistics(
            eta=eta, b_plus=(1 + eta) / 2, b_zero=0.0, b_minus=(1 - eta) / 2,
            boundary=True,
        )
    # Inside the singular zone next to |eta| = 1 the entropy terms are too
    # ill-conditioned for the 1e-10 stationarity guarantee; flag as boundary.
    singular = abs(eta) >= 1 - ETA_CLIP

    def stat(b0):
        bp = (1 + eta) / 2 - b0
        bm = (1 - eta) / 2 - b0
        if bp <= 0.0 or bm <= 0.0:
            return float("-inf")
        return log(bp) + log(bm) - 2 * log(b0) - 2 * beta

    def stat_prime(b0):
        bp = (1 + eta) / 2 - b0
        bm = (1 - eta) / 2 - b0
        return -1 / bp - 1 / bm - 2 / b0

    lo, up = 0.0, hi
    b0 = 0.5 * hi
    for _ in range(120):
        b0 = 0.5 * (lo + up)
        s = stat(b0)
        if s > 0:
            lo = b0
        elif s < 0:
            up = b0
        else:
            break
        if up - lo <= 1e-18 * hi:
            break

    for _ in range(30):
        s = stat(b0)
        if s == float("-inf"):
            break
        step = s / stat_prime(b0)
        b0_new = b0 - step
        if not (lo < b0_new < up) or not (0 < b0_new < hi):
            break
        b0 = b0_new
        if abs(step) < 1e-18 * hi:
            break

    if not singular and abs(stat(b0)) > STATIONARITY_TOL:
        raise AssertionError(f"stationarity residual {stat(b0):.3e} at eta={eta}")
    if stat_prime(b0) >= 0:
        raise AssertionError("g lost concavity in b0; should be impossible")
    return EdgeStatistics(
        eta=eta,
        b_plus=(1 + eta) / 2 - b0,
        b_zero=b0,
        b_minus=(1 - eta) / 2 - b0,
        boundary=singular,
    )


def f_eta(eta: float, delta: int, beta: float, lam: float) -> float:
    """Annealed free-energy curve f(eta) = g(eta, B*(eta))."""
    stats = maximize_B(eta, delta, beta, lam)
    return _g_of_b0(eta, stats.b_zero, delta, beta, lam)


@dataclass(frozen=True)
class LandscapePoint:
    eta: float
    B_star: EdgeStatistics
    f_value: float
    classification: str  # local-max | local-min | inflection


def _f_derivatives(eta: float, delta: int, beta: float, lam: float, h: float):
    """Richardson-extrapolated central differences for f' and f''."""

    def d1(h):
        return (f_eta(eta + h, delta, beta, lam) - f_eta(eta - h, delta, beta, lam)) / (
            2 * h
        )

    def d2(h):
        return (
            f_eta(eta + h, delta, beta, lam)
            - 2 * f_eta(eta, delta, beta, lam)
            + f_eta(eta - h, delta, beta, lam)
        ) / h**2

    f1 = (4 * d1(h / 2) - d1(h)) / 3
    f2 = (4 * d2(h / 2) - d2(h)) / 3
    return f1, f2


def critical_points(
    delta: int, beta: float, lam: float, grid_resolution: float = 1e-3
) -> list:
    """Interior critical points of f, located by a sign-change scan of f'.

    Classification is by the sign of f'' with a marginal band mapped to
    'inflection'.
    """
    if grid_resolution < 1e-4:
        raise InvalidInputError("grid resolution below 1e-4 is not supported")
    step = grid_resolution
    h = max(step / 8, 1e-6)
    lo, hi = -1 + ETA_CLIP + 2 * h, 1 - ETA_CLIP - 2 * h
    n_steps = int((hi - lo) / step)

    def fprime(eta):
        return (
            f_eta(eta + h, delta, beta, lam) - f_eta(eta - h, delta, beta, lam)
        ) / (2 * h)

    etas = [lo + i * (hi - lo) / n_steps for i in range(n_steps + 1)]
    vals = [fprime(e) for e in etas]
    found = []
    for i in range(n_steps):
        if vals[i] == 0.0:
            found.append(etas[i])
        elif (vals[i] < 0) != (vals[i + 1] < 0):
            a, b = etas[i], etas[i + 1]
            fa = vals[i]
            for _ in range(100):
                mid = 0.5 * (a + b)
                fm = fprime(mid)
                if (fa < 0) == (fm < 0):
                    a, fa = mid, fm
                else:
                    b = mid
                if b - a < 1e-13:
                    break
            found.append(0.5 * (a + b))

    out = []
    for eta in found:
        if out and abs(eta - out[-1].eta) < 10 * grid_resolution * 1e-3:
            continue
        _, f2 = _f_derivatives(eta, delta, beta, lam, h=1e-4)
        if abs(f2) < MARGINAL_F2_BAND:
            cls = "inflection"
        elif f2 < 0:
            cls = "local-max"
        else:
            cls = "local-min"
        out.append(
            LandscapePoint(
                eta=eta,
                B_star=maximize_B(eta, delta, beta, lam),
                f_value=f_eta(eta, delta, beta, lam),
                classification=cls,
            )
        )
    return out


def _log_double_factorial_even_args(two_m: int) -> float:
    """log((2m-1)!!) for an even argument 2m, via log-gamma."""
    if two_m < 0 or two_m % 2:
        raise InvalidInputError("double factorial needs an even nonnegative count")
    m = two_m // 2
    return lgamma(two_m + 1) - m * log(2.0) - lgamma(m + 1)


def _log_binom(n: int, k: int) -> float:
    return lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1)


def annealed_log_EZ_per_k(n: int, k: int, delta: int, beta: float, lam: float) -> float:
    """Exact finite-n value of log E[Z_{G,k}(beta, lambda)] over the configuration model.

    Sums over the feasible count e0 of bichromatic edges (parity e0 = k*delta
    mod 2); choosing which plus and minus half-edges cross, matching them, and
    matching the leftovers internally gives

        P[e0] = C(P, e0) C(M, e0) e0! (P-e0-1)!! (M-e0-1)!! / (Dn-1)!!

    with P = k*delta, M = (n-k)*delta plus/minus half-edge counts, and every
    configuration contributes e^{beta (Dn/2 - e0)} monochromatic weight.
    """
    if not (0 <= k <= n):
        raise InvalidInputError("need 0 <= k <= n")
    if (n * delta) % 2:
        raise InvalidInputError("n*delta must be even")
    P = k * delta
    M = (n - k) * delta
    total = n * delta
    log_total_matchings = _log_double_factorial_even_args(total)
    terms = []
    for e0 in range(P % 2, min(P, M) + 1, 2):
        lp = (
            _log_binom(P, e0)
            + _log_binom(M, e0)
            + lgamma(e0 + 1)
            + _log_double_factorial_even_args(P - e0)
            + _log_double_factorial_even_args(M - e0)
            - log_total_matchings
        )
        terms.append(lp + beta * (total / 2 - e0))
    if not terms:
        return float("-inf")
    hi = max(terms)
    log_sum = hi + log(sum(exp(t - hi) for t in terms))
    return _log_binom(n, k) + k * log(lam) + log_sum
