"""N-function catalog and per-edge integrals of the weighted modular.

Every distance in this package reduces to sums of

    A(e, k) = integral_0^1 wbar_t(e) * Phi(k*|h(e)| / wbar_t(e)) * w_e dt,
    wbar_t(e) = (w_e / lamG) * t + 1 + lam_gamma(e) / lamG,

over active edges. For the catalog kinds A has closed forms: powers reduce
to the beta_e antiderivative, the exponential kinds to Ei/exp combinations.
First and second k-derivatives are analytic as well, which is what the
Newton polish in the solver consumes.

Below alpha/b = 0.5 the exponential closed forms cancel catastrophically
(O(1) terms collapsing to an O(alpha^2) result), so evaluation switches to
the Taylor series of the same integral; both branches agree to full double
precision at the cut and the quadrature fallback cross-checks them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NegativeArgument, NonPositiveArgument, Overflow
from .special import _ei_array_unchecked

EXP_ARG_MAX = 700.0
_SERIES_CUT = 0.5


class EdgeGeometry(NamedTuple):
    """One profiled tree edge: its length, lambda(gamma_e), and global lambda(G)."""

    w: float
    lam_gamma: float
    lam_total: float


@dataclass(frozen=True)
class NFunction:
    """One of the four catalog kinds; `p`/`scaled` only apply to powers."""

    kind: str  # "power" | "exp" | "expsq" | "linear"
    p: float = 0.0
    scaled: bool = False

    def __post_init__(self):
        if self.kind not in ("power", "exp", "expsq", "linear"):
            raise ValueError(f"unknown N-function kind {self.kind!r}")
        if self.kind == "power" and not (self.p > 1.0 and math.isfinite(self.p)):
            raise ValueError(f"power N-function needs finite p > 1, got {self.p}")

    @classmethod
    def power(cls, p: float, scaled: bool = False) -> "NFunction":
        return cls("power", p=float(p), scaled=scaled)

    @classmethod
    def exp_linear(cls) -> "NFunction":
        return cls("exp")

    @classmethod
    def exp_square(cls) -> "NFunction":
        return cls("expsq")

    @classmethod
    def limit_linear(cls) -> "NFunction":
        return cls("linear")

    @property
    def prefactor(self) -> float:
        """Multiplier in front of t^p; 1 unless the scaled power kind."""
        if self.kind != "power" or not self.scaled:
            return 1.0
        p = self.p
        return (p - 1.0) ** (p - 1.0) / p ** p

    def spec(self) -> str:
        """Canonical selection string (round-trips through parse_phi)."""
        if self.kind == "power":
            return f"{'ps' if self.scaled else 'p'}:{self.p:.17g}"
        return {"exp": "exp", "expsq": "expsq", "linear": "linear"}[self.kind]


def parse_phi(text: str) -> NFunction:
    """Parse the CLI grammar: p:<float>, ps:<float>, exp, expsq, linear."""
    s = text.strip().lower()
    if s == "exp":
        return NFunction.exp_linear()
    if s == "expsq":
        return NFunction.exp_square()
    if s == "linear":
        return NFunction.limit_linear()
    for prefix, scaled in (("ps:", True), ("p:", False)):
        if s.startswith(prefix):
            try:
                p = float(s[len(prefix):])
            except ValueError:
                raise ValueError(f"bad power exponent in phi spec {text!r}")
            return NFunction.power(p, scaled=scaled)
    raise ValueError(f"bad phi spec {text!r} (expected p:<f>, ps:<f>, exp, expsq or linear)")


# -- pointwise Phi ------------------------------------------------------------

def _phi_np(f: NFunction, t):
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        if f.kind == "linear":
            return t.copy()
        if f.kind == "power":
            return f.prefactor * t ** f.p
        if f.kind == "exp":
            return np.expm1(t) - t
        return np.expm1(t * t)


def _dphi_np(f: NFunction, t):
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        if f.kind == "linear":
            return np.ones_like(t)
        if f.kind == "power":
            return f.prefactor * f.p * t ** (f.p - 1.0)
        if f.kind == "exp":
            return np.expm1(t)
        return 2.0 * t * np.exp(t * t)


def _d2phi_np(f: NFunction, t):
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        if f.kind == "linear":
            return np.zeros_like(t)
        if f.kind == "power":
            p = f.p
            return f.prefactor * p * (p - 1.0) * t ** (p - 2.0)
        if f.kind == "exp":
            return np.exp(t)
        t2 = t * t
        return (2.0 + 4.0 * t2) * np.exp(t2)


def phi_value(f: NFunction, t: float) -> float:
    """Phi(t) for t >= 0."""
    t = float(t)
    if t < 0.0:
        raise NegativeArgument(f"N-functions are defined on t >= 0, got {t}")
    return float(_phi_np(f, t))


# -- beta_e -------------------------------------------------------------------

_P2_WINDOW = 1e-9


def beta_e(p: float, geom: EdgeGeometry) -> float:
    """Closed form of integral_0^1 wbar_t^(1-p) w_e dt for a power N-function."""
    p = float(p)
    if not (p > 1.0 and math.isfinite(p)):
        raise ValueError(f"beta_e needs finite p > 1, got {p}")
    lam = geom.lam_total
    y = lam + geom.lam_gamma
    ratio = geom.w / y
    if abs(p - 2.0) <= _P2_WINDOW:
        return lam * math.log1p(ratio)
    q = 2.0 - p
    # stable for any p: Y^q * expm1(q ln(X/Y)) / q with X = Y + w_e
    return lam ** (p - 1.0) * y ** q * math.expm1(q * math.log1p(ratio)) / q


# -- analytic A(e,k) and k-derivatives, vectorized over edges -----------------

def _phi1_arrays(alpha, h, w, a, b, ab, lam):
    """(A, dA, d2A) for Phi_1 = e^t - t - 1; inf rows mark overflow."""
    n = alpha.shape[0]
    A = np.zeros(n)
    dA = np.zeros(n)
    d2A = np.zeros(n)

    xb = alpha / b
    over = xb > EXP_ARG_MAX
    if over.any():
        A[over] = np.inf
        dA[over] = np.inf
        d2A[over] = np.inf

    closed = (~over) & (xb > _SERIES_CUT)
    if closed.any():
        al, hh, aa, bb, abb = (v[closed] for v in (alpha, h, a, b, ab))
        x_ab = al / abb
        x_b = al / bb
        dei = _ei_array_unchecked(x_ab) - _ei_array_unchecked(x_b)
        with np.errstate(over="ignore", invalid="ignore"):
            e_ab = np.exp(x_ab)
            e_b = np.exp(x_b)
            # beta/(2a) = lam/2 and beta/a = lam for beta = w_e, a = w_e/lam
            val = 0.5 * lam * (-al * al * dei
                               + al * (abb * e_ab - bb * e_b)
                               + (abb * abb * e_ab - bb * bb * e_b)
                               - 2.0 * al * aa
                               - (abb * abb - bb * bb))
            d1 = lam * hh * (-al * dei + abb * e_ab - bb * e_b - aa)
            d2 = -lam * hh * hh * dei
        A[closed] = val
        dA[closed] = d1
        d2A[closed] = d2

    series = (~over) & (~closed) & (alpha > 0.0)
    if series.any():
        al, hh, ww, aa, bb, abb = (v[series] for v in (alpha, h, w, a, b, ab))
        sA, sd1, sd2 = _phi1_series(al, aa, bb, abb)
        A[series] = ww * sA
        dA[series] = ww * hh * sd1
        d2A[series] = ww * hh * hh * sd2
    return A, dA, d2A


def _phi1_series(al, a, b, ab):
    """Taylor sums S_A = sum a^n J_n / n!, etc., for alpha/b <= 0.5."""
    e_ratio = b / ab
    delta = -(a / ab)          # e^1 - 1, exact
    inv_b = 1.0 / b
    J = np.log1p(a / b) / a    # J_2
    q = delta                  # e^(n-2) - 1 for n = 3
    s = inv_b                  # b^(2-n)   for n = 3
    pa = np.ones_like(al)      # alpha^(n-2) / (n-2)!
    al2 = al * al
    sA = np.zeros_like(al)
    sd1 = np.zeros_like(al)
    sd2 = np.zeros_like(al)
    for n in range(2, 26):
        if n > 2:
            J = s * q / (a * (2.0 - n))
            s = s * inv_b
            q = q * e_ratio + delta
        sA += J * pa * al2 / (n * (n - 1.0))
        sd1 += J * pa * al / (n - 1.0)
        sd2 += J * pa
        pa = pa * al / (n - 1.0)
    return sA, sd1, sd2


def _phi2_arrays(alpha, h, w, a, b, ab, lam):
    """(A, dA, d2A) for Phi_2 = e^(t^2) - 1; inf rows mark overflow."""
    n = alpha.shape[0]
    A = np.zeros(n)
    dA = np.zeros(n)
    d2A = np.zeros(n)

    xb = alpha / b
    over = xb * xb > EXP_ARG_MAX
    if over.any():
        A[over] = np.inf
        dA[over] = np.inf
        d2A[over] = np.inf

    closed = (~over) & (xb > _SERIES_CUT)
    if closed.any():
        al, hh, bb, abb = (v[closed] for v in (alpha, h, b, ab))
        x2_ab = (al / abb) ** 2
        x2_b = (al / bb) ** 2
        dei = _ei_array_unchecked(x2_ab) - _ei_array_unchecked(x2_b)
        with np.errstate(over="ignore", invalid="ignore"):
            e_ab = np.exp(x2_ab)
            e_b = np.exp(x2_b)
            val = 0.5 * lam * (-al * al * dei
                               + (abb * abb * e_ab - bb * bb * e_b)
                               - (abb * abb - bb * bb))
            d1 = -lam * al * hh * dei
            d2 = -lam * hh * hh * (dei + 2.0 * e_ab - 2.0 * e_b)
        A[closed] = val
        dA[closed] = d1
        d2A[closed] = d2

    series = (~over) & (~closed) & (alpha > 0.0)
    if series.any():
        al, hh, ww, aa, bb, abb = (v[series] for v in (alpha, h, w, a, b, ab))
        sA, sd1, sd2 = _phi2_series(al, aa, bb, abb)
        A[series] = ww * sA
        dA[series] = ww * hh * sd1
        d2A[series] = ww * hh * hh * sd2
    return A, dA, d2A


def _phi2_series(al, a, b, ab):
    """Taylor sums over even J: sum alpha^(2m) J_(2m) / m!, for alpha/b <= 0.5."""
    e_ratio = b / ab
    delta = -(a / ab)
    inv_b2 = 1.0 / (b * b)
    J = np.log1p(a / b) / a    # J_2
    q = delta                  # e^(2m-2) - 1 for the NEXT index (m=2 needs e^2-1)
    s = 1.0 / b                # b^(2-n) for n = 3; stepped twice per m
    pa2 = np.ones_like(al)     # alpha^(2m-2) / m!
    al2 = al * al
    sA = np.zeros_like(al)
    sd1 = np.zeros_like(al)
    sd2 = np.zeros_like(al)
    for m in range(1, 15):
        if m > 1:
            # advance J_(2m-2) -> J_(2m): two recurrence steps
            q = q * e_ratio + delta
            s = s * (1.0 / b)
            J = s * q / (a * (2.0 - 2.0 * m))
            s = s * (1.0 / b)
            q = q * e_ratio + delta
        two_m = 2.0 * m
        sA += pa2 * al2 * J
        sd1 += pa2 * al * two_m * J
        sd2 += pa2 * two_m * (two_m - 1.0) * J
        pa2 = pa2 * al2 / (m + 1.0)
    return sA, sd1, sd2


def integral_arrays(f: NFunction, w, lamg, lam_total: float, habs, k: float):
    """A(e,k), dA/dk, d2A/dk2 over edge arrays; np.inf marks overflow.

    This is the reference (numpy) evaluation path; the jitted kernels
    mirror it term for term.
    """
    w = np.asarray(w, dtype=np.float64)
    habs = np.asarray(habs, dtype=np.float64)
    lamg = np.asarray(lamg, dtype=np.float64)
    lam = float(lam_total)
    alpha = k * habs

    if f.kind == "linear":
        return alpha * w, habs * w, np.zeros_like(w)

    if f.kind == "power":
        p = f.p
        c = f.prefactor
        betas = np.array([beta_e(p, EdgeGeometry(float(wi), float(gi), lam))
                          for wi, gi in zip(w, lamg)])
        return _power_arrays(alpha, habs, betas, p, c)

    a = w / lam
    b = 1.0 + lamg / lam
    ab = a + b
    if f.kind == "exp":
        return _phi1_arrays(alpha, habs, w, a, b, ab, lam)
    return _phi2_arrays(alpha, habs, w, a, b, ab, lam)


def _power_arrays(alpha, habs, betas, p: float, c: float):
    A = np.zeros_like(alpha)
    dA = np.zeros_like(alpha)
    d2A = np.zeros_like(alpha)
    pos = alpha > 0.0
    if pos.any():
        al, hh, be = alpha[pos], habs[pos], betas[pos]
        with np.errstate(over="ignore", invalid="ignore"):
            A[pos] = c * al ** p * be
            dA[pos] = c * p * al ** (p - 1.0) * hh * be
            d2A[pos] = c * p * (p - 1.0) * al ** (p - 2.0) * hh * hh * be
        bad = pos.copy()
        bad[pos] = ~np.isfinite(A[pos])
        if bad.any():
            A[bad] = np.inf
            dA[bad] = np.inf
            d2A[bad] = np.inf
    return A, dA, d2A


# -- quadrature fallback ------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
_GL_T = 0.5 * (_GL_X + 1.0)          # nodes on [0,1]
_GL_WT = 0.5 * _GL_W


def quad_arrays(f: NFunction, w, lamg, lam_total: float, habs, k: float):
    """Fixed 32-point Gauss-Legendre version of :func:`integral_arrays`."""
    w = np.asarray(w, dtype=np.float64)
    habs = np.asarray(habs, dtype=np.float64)
    lamg = np.asarray(lamg, dtype=np.float64)
    lam = float(lam_total)
    alpha = k * habs

    # wbar has shape (32, n_edges)
    wbar = (np.outer(_GL_T, w) + (lam + lamg)) / lam
    t_arg = alpha / wbar
    with np.errstate(over="ignore", invalid="ignore"):
        A = _GL_WT @ (wbar * _phi_np(f, t_arg)) * w
        dA = _GL_WT @ _dphi_np(f, t_arg) * (habs * w)
        d2A = _GL_WT @ (_d2phi_np(f, t_arg) / wbar) * (habs * habs * w)
    for arr in (A, dA, d2A):
        np.nan_to_num(arr, copy=False, nan=np.inf, posinf=np.inf)
    return A, dA, d2A


# -- scalar public operations -------------------------------------------------

def _scalar_integral(f, geom, habs, k, quadrature, which):
    habs = float(habs)
    k = float(k)
    if habs < 0.0:
        raise NegativeArgument(f"habs must be >= 0, got {habs}")
    if not k > 0.0:
        raise NonPositiveArgument(f"k must be > 0, got {k}")
    fn = quad_arrays if quadrature else integral_arrays
    res = fn(f, [geom.w], [geom.lam_gamma], geom.lam_total, [habs], k)[which]
    val = float(res[0])
    if not math.isfinite(val):
        raise Overflow(f"edge integral overflow at k = {k} (alpha/b too large)")
    return val


def edge_integral(f: NFunction, geom: EdgeGeometry, habs: float, k: float,
                  quadrature: bool = False) -> float:
    """A(e,k) for one edge; `quadrature` forces the 32-point fallback."""
    return _scalar_integral(f, geom, habs, k, quadrature, 0)


def edge_integral_dk(f: NFunction, geom: EdgeGeometry, habs: float, k: float,
                     quadrature: bool = False) -> float:
    return _scalar_integral(f, geom, habs, k, quadrature, 1)


def edge_integral_d2k(f: NFunction, geom: EdgeGeometry, habs: float, k: float,
                      quadrature: bool = False) -> float:
    return _scalar_integral(f, geom, habs, k, quadrature, 2)
