"""GSI-M distances: closed forms where available, else safeguarded 1-D minimization.

The distance is inf_{k>0} F(k) with F(k) = (1/k) * (1 + sum_e A(e,k)). The
power kinds collapse to the beta_e closed form, the linear limit to a plain
weighted sum; everything else goes through minimize_amemiya: log-grid
bracketing, golden-section shrink, then Newton polish on F' with steps
clamped into the bracket. Since k^2 F'(k) = k M'(k) - (1 + M(k)) with
M(k) = sum_e A(e,k) convex, F' changes sign exactly once: F is unimodal
and the bracketed minimum is the global one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import MismatchedIndex, NoFiniteBracket
from .graph import EdgeFlow, EdgeProfile
from .nfunc import EdgeGeometry, NFunction, beta_e, integral_arrays, quad_arrays

_GRID_LO = 1e-6
_GRID_HI = 1e6
_HARD_LO = 1e-18
_HARD_HI = 1e18
_STEP = math.sqrt(10.0)
_GOLD = (math.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_WINDOW = 0.5  # nats


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 200
    force_optimizer: bool = False   # testing hook: power kinds skip Eq-13 style closed forms
    use_quadrature: bool = False

    def __post_init__(self):
        if not (self.tol > 0.0):
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True)
class AmemiyaResult:
    distance: float
    k_star: Optional[float]  # None on closed-form paths
    iterations: int
    converged: bool


@dataclass(frozen=True)
class MinimizeResult:
    k_star: float
    f_min: float
    iterations: int
    converged: bool


def weighted_abs_sum(prof: EdgeProfile, flow: EdgeFlow) -> float:
    """sum_e w_e * |hbar(e)|; the shared evaluation for every linear limit."""
    w = prof.w_node[flow.nodes]
    return float(np.sum(w * np.abs(flow.h)))


def power_beta_sum(prof: EdgeProfile, flow: EdgeFlow, p: float) -> float:
    """S = sum_e beta_e * |hbar(e)|^p."""
    habs = np.abs(flow.h)
    lam = prof.lambda_G
    total = 0.0
    for v, h in zip(flow.nodes, habs):
        geom = EdgeGeometry(float(prof.w_node[v]), float(prof.lam_gamma_node[v]), lam)
        total += beta_e(p, geom) * h ** p
    return total


def _power_prefactor_root(p: float, scaled: bool) -> float:
    # min_k (1/k)(1 + c S k^p) = (c S)^(1/p) * p * (p-1)^((1-p)/p); the scaled
    # prefactor c = (p-1)^(p-1)/p^p cancels the constant to exactly S^(1/p)
    if scaled:
        return 1.0
    return p * (p - 1.0) ** ((1.0 - p) / p)


def gsim_distance(prof: EdgeProfile, flow: EdgeFlow, f: NFunction,
                  opts: SolverOptions = DEFAULT_OPTIONS) -> AmemiyaResult:
    """GSI-M distance between the two measures behind `flow`."""
    if prof.index is not flow.index:
        raise MismatchedIndex("profile and flow were built from different rooted indexes")
    if flow.is_empty:
        return AmemiyaResult(0.0, None, 0, True)

    if f.kind == "linear":
        return AmemiyaResult(weighted_abs_sum(prof, flow), None, 0, True)

    if f.kind == "power" and not opts.force_optimizer:
        S = power_beta_sum(prof, flow, f.p)
        d = _power_prefactor_root(f.p, f.scaled) * S ** (1.0 / f.p)
        return AmemiyaResult(d, None, 0, True)

    fused = _fused_objective(prof, flow, f, opts.use_quadrature)
    res = minimize_amemiya(lambda k: fused(k)[0], lambda k: fused(k)[1],
                           lambda k: fused(k)[2], opts)
    return AmemiyaResult(res.f_min, res.k_star, res.iterations, res.converged)


def _fused_objective(prof: EdgeProfile, flow: EdgeFlow, f: NFunction,
                     use_quadrature: bool) -> Callable[[float], tuple]:
    """(F, F', F'') at k, memoized so the three callbacks share one pass."""
    nodes = flow.nodes
    w = prof.w_node[nodes]
    lamg = prof.lam_gamma_node[nodes]
    lam = prof.lambda_G
    habs = np.abs(flow.h)
    engine = quad_arrays if use_quadrature else integral_arrays
    cache: dict = {}

    def at(k: float):
        got = cache.get(k)
        if got is None:
            A, dA, d2A = engine(f, w, lamg, lam, habs, k)
            M = float(np.sum(A))
            if not math.isfinite(M):
                got = (math.inf, math.inf, math.inf)
            else:
                M1 = float(np.sum(dA))
                M2 = float(np.sum(d2A))
                F = (1.0 + M) / k
                F1 = M1 / k - (1.0 + M) / (k * k)
                F2 = M2 / k - 2.0 * M1 / (k * k) + 2.0 * (1.0 + M) / (k ** 3)
                got = (F, F1, F2)
            cache[k] = got
        return got

    return at


def minimize_amemiya(value: Callable[[float], float],
                     deriv: Optional[Callable[[float], float]] = None,
                     deriv2: Optional[Callable[[float], float]] = None,
                     opts: SolverOptions = DEFAULT_OPTIONS) -> MinimizeResult:
    """Minimize a positive coercive objective over k > 0.

    `value` returns +inf where the objective overflows; those probes shrink
    the bracket. Derivative callbacks are optional: without them the
    golden-section phase runs to the full tolerance.
    """
    tol = opts.tol
    cap = opts.max_iter
    evals = 0

    def _guard(fn):
        # callers may raise instead of returning inf (math.exp does);
        # jitted code would produce an IEEE inf here, so match that
        if fn is None:
            return None

        def wrapped(k: float) -> float:
            try:
                return fn(k)
            except OverflowError:
                return math.inf

        return wrapped

    value = _guard(value)
    deriv = _guard(deriv)
    deriv2 = _guard(deriv2)

    ks = list(np.logspace(-6.0, 6.0, 25))
    fs = []
    for k in ks:
        fs.append(value(k))
        evals += 1

    best_i = int(np.argmin(fs))
    if not math.isfinite(fs[best_i]):
        # every probe overflowed; sweep downward to the hard stop before giving up
        k = ks[0]
        while k > _HARD_LO and evals < cap:
            k /= _STEP
            fk = value(k)
            evals += 1
            ks.insert(0, k)
            fs.insert(0, fk)
            if math.isfinite(fk):
                break
        best_i = int(np.argmin(fs))
        if not math.isfinite(fs[best_i]):
            raise NoFiniteBracket("objective overflowed at every probe down to 1e-18")

    # extend past the grid while the minimum sits on its edge
    while best_i == 0 and ks[0] > _HARD_LO and evals < cap:
        k = max(ks[0] / _STEP, _HARD_LO)
        fs.insert(0, value(k))
        ks.insert(0, k)
        evals += 1
        best_i = int(np.argmin(fs))
    while best_i == len(ks) - 1 and ks[-1] < _HARD_HI and evals < cap:
        k = min(ks[-1] * _STEP, _HARD_HI)
        fs.append(value(k))
        ks.append(k)
        evals += 1
        best_i = int(np.argmin(fs))

    lo_i = max(best_i - 1, 0)
    hi_i = min(best_i + 1, len(ks) - 1)
    a, b, c = ks[lo_i], ks[best_i], ks[hi_i]
    fa, fb, fc = fs[lo_i], fs[best_i], fs[hi_i]
    best_k, best_f = b, fb

    # golden-section in log space down to a sub-half-nat window
    la, lb, lc = math.log(a), math.log(b), math.log(c)
    target = _GOLDEN_WINDOW if deriv is not None else math.log1p(tol)
    while (lc - la) > target and evals < cap:
        if (lc - lb) > (lb - la):
            lx = lb + (1.0 - _GOLD) * (lc - lb)
            x = math.exp(lx)
            fx = value(x)
            evals += 1
            if fx < fb:
                la, lb, fb = lb, lx, fx
            else:
                lc = lx
        else:
            lx = lb - (1.0 - _GOLD) * (lb - la)
            x = math.exp(lx)
            fx = value(x)
            evals += 1
            if fx < fb:
                lc, lb, fb = lb, lx, fx
            else:
                la = lx
        if fb < best_f:
            best_f, best_k = fb, math.exp(lb)

    if deriv is None:
        converged = (lc - la) <= math.log1p(tol)
        return MinimizeResult(float(best_k), float(best_f), evals, converged)

    # Newton polish on F' with the golden bracket as a safety net
    lo, hi = math.exp(la), math.exp(lc)
    x, fx = math.exp(lb), fb
    converged = False
    while True:
        g = deriv(x)
        if math.isfinite(fx) and abs(g) <= tol * max(1.0, abs(fx)):
            converged = True
            break
        if g > 0.0:
            hi = x
        else:
            lo = x
        if hi / lo - 1.0 <= tol or evals >= cap:
            break
        H = deriv2(x) if deriv2 is not None else 0.0
        xn = x - g / H if (math.isfinite(H) and H > 0.0) else math.nan
        if not (lo < xn < hi):
            xn = math.sqrt(lo * hi)
        fxn = value(xn)
        evals += 1
        if fxn < best_f:
            best_f, best_k = fxn, xn
        x, fx = xn, fxn

    if fx <= best_f:
        best_f, best_k = fx, x
    return MinimizeResult(float(best_k), float(best_f), evals, converged)
