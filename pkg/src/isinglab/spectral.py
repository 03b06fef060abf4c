"""Spectral gaps, influence matrices, local walks, and the Edgeworth/LCLT kit.

Gap conventions follow the Poincare characterization: gap(P) = 1 - second
largest eigenvalue of the pi-symmetrized kernel (so a two-state swap chain
has gap 2).  Influence matrices use the one-sided conditioning
M[u, v] = pi(v | u) - pi(v) on subset-valued distributions, which ties
directly to local walks: the second eigenvalue of the local walk at U is at
most (C - 1)/(k - |U| - 1) when M has top eigenvalue at most C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DegenerateError, InvalidInputError, NonReversibleError
from .graphs import Graph
from .measures import (
    EMPTY_PINNING,
    PartitionTable,
    Pinning,
    cumulants_of_size,
    exact_partition_table,
    fixed_k_states,
    monochromatic_edges,
    size_distribution,
)
from .dynamics import ChainKernel, TransitionMatrix, build_transition_matrix
from .rng import make_rng

REVERSIBILITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# Spectral gap and mixing time
# ---------------------------------------------------------------------------


def _check_reversible(tm: TransitionMatrix) -> None:
    F = tm.pi[:, None] * tm.P
    err = np.max(np.abs(F - F.T))
    if err > REVERSIBILITY_TOL:
        raise NonReversibleError(f"detailed balance violated by {err:.2e}")


def _symmetrized_eigenvalues(tm: TransitionMatrix) -> np.ndarray:
    sq = np.sqrt(tm.pi)
    A = (sq[:, None] / sq[None, :]) * tm.P
    A = 0.5 * (A + A.T)
    return np.linalg.eigvalsh(A)


def spectral_gap(tm: TransitionMatrix, variational_samples: int = 0,
                 rng_seed: int = 0) -> float:
    """Poincare constant 1 - lambda_2 of a reversible kernel.

    With ``variational_samples`` > 0, also checks gap <= E(f, f)/Var(f) on
    random test functions, which holds for every f by the variational
    characterization.
    """
    _check_reversible(tm)
    eigs = _symmetrized_eigenvalues(tm)
    gap = 1.0 - eigs[-2]
    if variational_samples:
        rng = make_rng(rng_seed)
        for _ in range(variational_samples):
            f = rng.normal(size=len(tm.pi))
            q = dirichlet_quotient(tm, f)
            if q is not None and gap > q + 1e-8:
                raise AssertionError(f"gap {gap} exceeds a Dirichlet quotient {q}")
    return float(gap)


def dirichlet_quotient(tm: TransitionMatrix, f: np.ndarray):
    """E_P(f, f) / Var_pi(f); None for (near-)constant f."""
    mean = tm.pi @ f
    var = tm.pi @ (f - mean) ** 2
    if var < 1e-14:
        return None
    diff = f[:, None] - f[None, :]
    energy = 0.5 * np.sum(tm.pi[:, None] * tm.P * diff**2)
    return float(energy / var)


def mixing_time_upper(tm: TransitionMatrix) -> float:
    """Spectral bound gap^{-1} * log(4 / min pi)."""
    gap = spectral_gap(tm)
    if gap <= 0:
        raise DegenerateError("zero spectral gap; no mixing bound")
    return (1.0 / gap) * math.log(4.0 / tm.pi.min())


def exact_mixing_time(tm: TransitionMatrix, lazy: bool = True,
                      max_steps: int = 1_000_000) -> int:
    """First t with worst-start total variation <= 1/4, by matrix powers.

    Raw Kawasaki on two states is periodic and never mixes; the default runs
    the lazy kernel (I + P)/2.
    """
    if len(tm.states) > 4000:
        raise InvalidInputError("exact mixing time limited to <= 4000 states")
    P = 0.5 * (np.eye(len(tm.states)) + tm.P) if lazy else tm.P
    M = np.eye(len(tm.states))
    for t in range(1, max_steps + 1):
        M = M @ P
        tv = 0.5 * np.max(np.abs(M - tm.pi[None, :]).sum(axis=1))
        if tv <= 0.25:
            return t
    raise DegenerateError(f"chain did not mix within {max_steps} steps")


# ---------------------------------------------------------------------------
# Influence matrices and independence norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InfluenceMatrix:
    vertices: tuple
    M: np.ndarray = field(repr=False)
    linf_norm: float
    top_eigenvalue: float
    has_complex_pair: bool

    @property
    def spectral_radius(self) -> float:
        return self.top_eigenvalue


def influence_matrix(states, probs, vertices) -> InfluenceMatrix:
    """M[u, v] = pi(v | u) - pi(v) for a distribution on subsets.

    ``states`` are subsets of ``vertices`` (any iterable of hashables) and
    ``probs`` their probabilities.  Rows with pi(u) = 0 are zero.  The top
    eigenvalue is the largest real part of the spectrum; a flag reports
    complex pairs (none appear for FKG measures, where M is nonnegative).
    """
    probs = np.asarray(probs, dtype=float)
    if abs(probs.sum() - 1.0) > 1e-9:
        raise InvalidInputError("probabilities must sum to 1")
    vertices = tuple(vertices)
    vi = {v: i for i, v in enumerate(vertices)}
    nv = len(vertices)
    marg = np.zeros(nv)
    joint = np.zeros((nv, nv))
    for s, p in zip(states, probs):
        idx = [vi[v] for v in s]
        for i in idx:
            marg[i] += p
            for j in idx:
                joint[i, j] += p
    M = np.zeros((nv, nv))
    for i in range(nv):
        if marg[i] <= 0:
            continue
        M[i, :] = joint[i, :] / marg[i] - marg
    linf = float(np.max(np.abs(M).sum(axis=1)))
    eigs = np.linalg.eigvals(M)
    has_complex = bool(np.any(np.abs(eigs.imag) > 1e-9))
    top = float(np.max(eigs.real))
    return InfluenceMatrix(
        vertices=vertices,
        M=M,
        linf_norm=linf,
        top_eigenvalue=top,
        has_complex_pair=has_complex,
    )


def grand_canonical_distribution(g: Graph, beta: float, lam: float,
                                 pinning: Pinning = EMPTY_PINNING):
    """(states, probs) over plus-sets for the grand-canonical measure."""
    table = exact_partition_table(g, beta, pinning)
    free = [v for v in range(g.n) if v not in pinning]
    pinned_plus = frozenset(v for v, s in pinning.assignments.items() if s == 1)
    states, logw = [], []
    for r in range(len(free) + 1):
        for extra in combinations(free, r):
            s = pinned_plus | frozenset(extra)
            spins = [1 if v in s else -1 for v in range(g.n)]
            m = monochromatic_edges(g, spins)
            states.append(s)
            logw.append(beta * m + len(s) * math.log(lam))
    logw = np.array(logw)
    p = np.exp(logw - logw.max())
    p /= p.sum()
    return states, p


def fixed_mag_distribution(g: Graph, beta: float, k: int, plus_pinned=()):
    """(states, probs) over plus-sets for the fixed-magnetization measure."""
    states, mono = fixed_k_states(g, k, plus_pinned)
    logw = beta * mono
    p = np.exp(logw - logw.max())
    p /= p.sum()
    return states, p


# ---------------------------------------------------------------------------
# Local walks and the local-to-global bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalWalk:
    pinned: frozenset
    vertices: tuple
    Q: np.ndarray = field(repr=False)
    second_eigenvalue: float


def local_walk(states, probs, pinned, k) -> LocalWalk:
    """Single-element exchange walk on the link of a pinned set.

    Q(u, v) = pi^{U + u}(v) / (k - |U| - 1) for u != v over the unpinned
    vertices; reversible with respect to pi^U(.)/(k - |U|).
    """
    pinned = frozenset(pinned)
    if len(pinned) > k - 2:
        raise InvalidInputError("need |U| <= k - 2 for a nontrivial local walk")
    probs = np.asarray(probs, dtype=float)
    keep = [i for i, s in enumerate(states) if pinned <= s]
    mass = probs[keep].sum()
    if mass <= 0:
        raise InvalidInputError("pinned set has zero probability")
    sub_states = [states[i] for i in keep]
    sub_probs = probs[keep] / mass

    support = sorted(set().union(*sub_states) - pinned)
    vi = {v: i for i, v in enumerate(support)}
    nv = len(support)
    marg = np.zeros(nv)
    joint = np.zeros((nv, nv))
    for s, p in zip(sub_states, sub_probs):
        idx = [vi[v] for v in s if v not in pinned]
        for i in idx:
            marg[i] += p
            for j in idx:
                if j != i:
                    joint[i, j] += p
    Q = np.zeros((nv, nv))
    denom = k - len(pinned) - 1
    for i in range(nv):
        if marg[i] <= 0:
            continue
        Q[i, :] = joint[i, :] / marg[i] / denom
    # reversible wrt pi-hat(u) = pi^U(u)/(k - |U|)
    pi_hat = marg / (k - len(pinned))
    sq = np.sqrt(pi_hat)
    with np.errstate(divide="ignore", invalid="ignore"):
        A = (sq[:, None] / sq[None, :]) * Q
    A[~np.isfinite(A)] = 0.0
    A = 0.5 * (A + A.T)
    eigs = np.linalg.eigvalsh(A)
    return LocalWalk(
        pinned=pinned,
        vertices=tuple(support),
        Q=Q,
        second_eigenvalue=float(eigs[-2]),
    )


@dataclass(frozen=True)
class LocalToGlobalBound:
    gammas: tuple
    bound: float
    collapsed: bool  # some zeta hit 1, zeroing the Gamma tail


def local_to_global_gap_bound(zetas, ell: int) -> LocalToGlobalBound:
    """gap(Q_{pi,ell}) >= sum_{m>=ell} Gamma_m / sum_m Gamma_m.

    ``zetas`` are the per-level local second-eigenvalue bounds
    (zeta_0 .. zeta_{k-2}); Gamma_m = prod_{j<m} (1 - zeta_j)/(1 + zeta_j).
    """
    zetas = list(zetas)
    k = len(zetas) + 1
    if not (0 <= ell <= k - 1):
        raise InvalidInputError("need 0 <= ell <= k-1")
    if any(z < -1 or z > 1 for z in zetas):
        raise InvalidInputError("zetas must lie in [-1, 1]")
    collapsed = any(z == 1.0 for z in zetas)
    gammas = [1.0]
    for z in zetas:
        gammas.append(gammas[-1] * (1 - z) / (1 + z) if z < 1 else 0.0)
    total = sum(gammas)
    tail = sum(gammas[ell:])
    bound = tail / total if total > 0 else 0.0
    return LocalToGlobalBound(gammas=tuple(gammas), bound=bound,
                              collapsed=collapsed)


@dataclass(frozen=True)
class GapFactorizationReport:
    gap_full: float
    gap_pinned_inf: float
    pinned_gaps: dict
    gap_kl: float
    product: float
    satisfied: bool


def gap_factorization_check(g: Graph, beta: float, k: int, ell: int,
                            tol: float = 1e-12) -> GapFactorizationReport:
    """Exact check of gap(P_{beta,k}) >= inf_U gap(P^U_{beta,k}) gap(P_{ell,beta,k})."""
    tm_full = build_transition_matrix(ChainKernel("downup", beta=beta, k=k), g)
    gap_full = spectral_gap(tm_full)
    pinned_gaps = {}
    if ell == 0:
        pinned_gaps[frozenset()] = gap_full
    else:
        for u in combinations(range(g.n), ell):
            tm_u = build_transition_matrix(
                ChainKernel("downup", beta=beta, k=k, pinning=Pinning.plus(u)), g
            )
            pinned_gaps[frozenset(u)] = spectral_gap(tm_u)
    gap_inf = min(pinned_gaps.values())
    tm_kl = build_transition_matrix(
        ChainKernel("kl_downup", beta=beta, k=k, ell=ell), g
    )
    gap_kl = spectral_gap(tm_kl)
    product = gap_inf * gap_kl
    return GapFactorizationReport(
        gap_full=gap_full,
        gap_pinned_inf=gap_inf,
        pinned_gaps=pinned_gaps,
        gap_kl=gap_kl,
        product=product,
        satisfied=gap_full >= product - tol,
    )


def local_expansion_zetas(g: Graph, beta: float, k: int) -> list:
    """zeta_m = max over U in C(V, m) of the local-walk second eigenvalue."""
    states, probs = fixed_mag_distribution(g, beta, k)
    zetas = []
    for m in range(k - 1):
        worst = -1.0
        for u in combinations(range(g.n), m):
            try:
                lw = local_walk(states, probs, u, k)
            except InvalidInputError:
                continue
            worst = max(worst, lw.second_eigenvalue)
        zetas.append(worst)
    return zetas


# ---------------------------------------------------------------------------
# Edgeworth expansion and LCLT probes
# ---------------------------------------------------------------------------


def _hermite(r: int, x: float) -> float:
    """Probabilists' Hermite polynomial He_r(x)."""
    h0, h1 = 1.0, x
    if r == 0:
        return h0
    for m in range(1, r):
        h0, h1 = h1, x * h1 - m * h0
    return h1


def _edgeworth_tuples(r: int, d: int):
    """Tuples (k_3..k_{2d+1}) with sum j k_j = r, sum k_j (j-2)/2 <= d."""
    js = list(range(3, 2 * d + 2))
    out = []

    def rec(pos, remaining, half_weight, acc):
        if pos == len(js):
            if remaining == 0 and half_weight <= d:
                out.append(tuple(acc))
            return
        j = js[pos]
        for kj in range(remaining // j + 1):
            hw = half_weight + kj * (j - 2) / 2
            if hw > d:
                break
            rec(pos + 1, remaining - kj * j, hw, acc + [kj])

    rec(0, r, 0.0, [])
    return out


@dataclass(frozen=True)
class EdgeworthApprox:
    s: float
    beta_coeffs: dict  # j -> kappa_j / (j! s^j)
    order: int
    ells: tuple
    values: tuple


def edgeworth_pmf(kappas, ells, d: int) -> EdgeworthApprox:
    """Series approximation to P(X - E[X] = ell).

    Order d = 0 is the pure Gaussian term e^{-ell^2/(2 s^2)}/(sqrt(2 pi) s);
    order d adds Hermite corrections H_r(ell/s) over r = 3 .. 6d with
    coefficients built from cumulants kappa_3 .. kappa_{2d+1}.
    """
    if d < 0 or d > 2:
        raise InvalidInputError("supported orders are d in {0, 1, 2}")
    kappas = list(kappas)
    if len(kappas) < max(2, 2 * d + 1):
        raise InvalidInputError(f"need cumulants up to order {max(2, 2 * d + 1)}")
    s2 = kappas[1]
    if s2 <= 0:
        raise DegenerateError("variance must be positive")
    s = math.sqrt(s2)
    beta_coeffs = {
        j: kappas[j - 1] / (math.factorial(j) * s**j)
        for j in range(3, 2 * d + 2)
    }
    values = []
    for ell in ells:
        x = ell / s
        series = 1.0
        for r in range(3, 6 * d + 1):
            coeff = 0.0
            for tup in _edgeworth_tuples(r, d):
                term = 1.0
                for j, kj in zip(range(3, 2 * d + 2), tup):
                    term *= beta_coeffs[j] ** kj / math.factorial(kj)
                coeff += term
            if coeff:
                series += _hermite(r, x) * coeff
        values.append(math.exp(-(ell**2) / (2 * s2)) / (math.sqrt(2 * math.pi) * s) * series)
    return EdgeworthApprox(
        s=s, beta_coeffs=beta_coeffs, order=d, ells=tuple(ells), values=tuple(values)
    )


@dataclass(frozen=True)
class LcltErrorReport:
    sup_error: float
    scaled_sup_error: float  # sup error * s
    per_point: tuple


def lclt_error(table: PartitionTable, lam: float, d: int,
               window: int = 2) -> LcltErrorReport:
    """Sup |exact - Edgeworth_d| over plus-counts within ``window`` of the mean."""
    pmf = size_distribution(table, lam)
    kappas = cumulants_of_size(table, lam, max(2, 2 * d + 1)).kappas
    mean = kappas[0]
    ks = [k for k in range(table.n + 1) if abs(k - mean) <= window]
    ells = [k - mean for k in ks]
    approx = edgeworth_pmf(kappas, ells, d)
    errs = tuple(abs(pmf[k] - v) for k, v in zip(ks, approx.values))
    sup = max(errs)
    return LcltErrorReport(
        sup_error=sup, scaled_sup_error=sup * approx.s,
        per_point=tuple(zip(ks, errs)),
    )


@dataclass(frozen=True)
class StabilityProbe:
    pmf_delta: float
    kappa_deltas: tuple


def stability_probe(g: Graph, beta: float, lam: float, pinning: Pinning,
                    v: int) -> StabilityProbe:
    """|P(X=k) - P(X=k | sigma(v)=+1)| at the central k, plus cumulant shifts."""
    table = exact_partition_table(g, beta, pinning)
    res = cumulants_of_size(table, lam, 3)
    if v in pinning:
        return StabilityProbe(pmf_delta=0.0, kappa_deltas=(0.0, 0.0, 0.0))
    plus_pin = Pinning({**pinning.assignments, v: 1})
    table_v = exact_partition_table(g, beta, plus_pin)
    res_v = cumulants_of_size(table_v, lam, 3)
    k = int(round(res.kappas[0]))
    pmf = size_distribution(table, lam)
    pmf_v = size_distribution(table_v, lam)
    return StabilityProbe(
        pmf_delta=abs(pmf[k] - pmf_v[k]),
        kappa_deltas=tuple(
            abs(a - b) for a, b in zip(res.kappas, res_v.kappas)
        ),
    )


@dataclass(frozen=True)
class CharacteristicBound:
    fitted_c: float
    degenerate: bool


def characteristic_bound_probe(g: Graph, beta: float, lam: float,
                               pinning: Pinning = EMPTY_PINNING,
                               n_grid: int = 200) -> CharacteristicBound:
    """Largest c with |E e^{itX}| <= e^{-c t^2 n} on a grid of t in [-pi, pi]."""
    table = exact_partition_table(g, beta, pinning)
    pmf = size_distribution(table, lam)
    ks = np.arange(table.n + 1)
    c_best = math.inf
    degenerate = False
    for i in range(1, n_grid + 1):
        t = math.pi * i / n_grid
        phi = abs(np.sum(pmf * np.exp(1j * t * ks)))
        if phi >= 1.0 - 1e-15:
            degenerate = True
            c_best = 0.0
            break
        c_best = min(c_best, -math.log(phi) / (t**2 * g.n))
    return CharacteristicBound(fitted_c=float(c_best), degenerate=degenerate)
