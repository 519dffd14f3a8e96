"""Closed-form estimate families for the fundamental solution p(t,x,y).

This module transcribes, with every suppressed constant set to 1, the
displayed two-sided estimates: the auxiliary piecewise functions F_k / F_c
(seven cases each, selected by the exponent s against {0, alpha/2, alpha}
resp. {2-alpha, 1, alpha}), the large-domain log factor G_d, the
near-diagonal boundary integral

    I_k^gamma(t,x,y) = int_{Phi(rho)}^{1/(2e^2 phi(1/t))}
                           a_k^gamma(r,x,y) / V(x, Phi^{-1}(r)) dr,
    J_k^gamma(t,x,y) = a_k^gamma(1/phi(1/t),x,y) / V(Phi^{-1}(1/phi(1/t)))
                       + w(t) I_k^gamma(t,x,y),

its closed forms per exponent case (a)..(g) and boundary scenario
(Sc.1)-(Sc.3), the elementary integral S_p with its asymptotic regimes, and
a theorem_estimate dispatcher covering the special classes, the general
theorems, and the two worked examples (truncated-Caputo in free space,
distributed-order on a bounded interval).

Conventions: log+ x = max(0, log x); when gamma = 0 the boundary distances
are treated as infinite, which silently switches every scenario split to its
interior branch; at exact case boundaries the display's own equality branch
is used (never interpolation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, RegimeError
from .heat_kernel import a_gamma, geometry_probe, q_eval

__all__ = [
    "F_alpha_k",
    "F_alpha_c",
    "G_alpha_d",
    "I_gamma_quadrature",
    "J_gamma",
    "boundary_integral",
    "closed_I_gamma",
    "S_p",
    "EstimateCase",
    "theorem_estimate",
    "CASE_TAGS",
]

_Q2 = 1.0 / (2.0 * math.e**2)
_Q4 = 1.0 / (4.0 * math.e**2)


def _logp(x):
    return max(0.0, math.log(x)) if x > 0.0 else 0.0


# ---------------------------------------------------------------------------
# The auxiliary piecewise functions
# ---------------------------------------------------------------------------


def F_alpha_k(alpha, s, phi_t_inv, rho, dx, dy):
    """F^alpha_k(s,t,x,y) with phi_t_inv = 1/phi(t^{-1}) precomputed.

    dx, dy may be inf (free space / gamma = 0 convention); the boundary
    indicator then vanishes and only the s = alpha and s > alpha cases
    survive.
    """
    dstar = dx * dy
    dmin, dmax = min(dx, dy), max(dx, dy)
    ind = 1.0 if dstar ** (alpha / 2.0) <= phi_t_inv else 0.0
    if s < 0.0:
        if ind == 0.0:
            return 0.0
        return (max(rho**alpha, dstar ** (alpha / 2.0))) * phi_t_inv ** (s / alpha) * ind
    if s == 0.0:
        if ind == 0.0:
            return 0.0
        return (
            max(rho**alpha, dstar ** (alpha / 2.0))
            * _logp(2.0 * phi_t_inv / max(rho, dmax) ** alpha)
        )
    if s < alpha / 2.0:
        if ind == 0.0:
            return 0.0
        return max(rho ** (alpha - s), dstar ** (alpha / 2.0) * dmax ** (-s))
    if s == alpha / 2.0:
        if ind == 0.0:
            return 0.0
        return rho ** (alpha / 2.0) + dmin ** (alpha / 2.0) * math.log(
            max(rho, 2.0 * dmax) / max(rho, dmin)
        )
    if s < alpha:
        if ind == 0.0:
            return 0.0
        return max(rho ** (alpha - s), dmin ** (alpha - s))
    if s == alpha:
        if rho == 0.0:
            return math.inf
        return 1.0 + _logp(2.0 * min(phi_t_inv, dmin**alpha) / rho**alpha)
    return rho ** (alpha - s)


def F_alpha_c(alpha, s, phi_t_inv, rho, dx, dy):
    """F^alpha_c(s,t,x,y), the censored-class companion of F^alpha_k.

    The 2-alpha < s < 1 case's display abbreviates the boundary product as
    delta(x,y)^{alpha-1}; it is evaluated as delta_*^{alpha-1} by pattern
    with the neighbouring cases.
    """
    dstar = dx * dy
    dmin, dmax = min(dx, dy), max(dx, dy)
    ind = 1.0 if dstar ** (alpha / 2.0) <= phi_t_inv else 0.0
    if s < 2.0 - alpha:
        if ind == 0.0:
            return 0.0
        return (
            max(rho ** (2.0 * alpha - 2.0), dstar ** (alpha - 1.0))
            * phi_t_inv ** ((2.0 - alpha - s) / alpha)
        )
    if s == 2.0 - alpha:
        if ind == 0.0:
            return 0.0
        return max(rho ** (2.0 * alpha - 2.0), dstar ** (alpha - 1.0)) * _logp(
            2.0 * phi_t_inv / max(rho, dmax) ** alpha
        )
    if s < 1.0:
        if ind == 0.0:
            return 0.0
        return max(rho ** (alpha - s), dstar ** (alpha - 1.0) * dmax ** (2.0 - alpha - s))
    if s == 1.0:
        if ind == 0.0:
            return 0.0
        return rho ** (alpha - 1.0) + dmin ** (alpha - 1.0) * math.log(
            max(rho, 2.0 * dmax) / max(rho, dmin)
        )
    if s < alpha:
        if ind == 0.0:
            return 0.0
        return max(rho ** (alpha - s), dmin ** (alpha - s))
    if s == alpha:
        if rho == 0.0:
            return math.inf
        return 1.0 + _logp(2.0 * min(phi_t_inv, dmin**alpha) / rho**alpha)
    return rho ** (alpha - s)


def G_alpha_d(table, alpha, d, t, l, T):
    """Large-domain log factor G^alpha_d(t, l) with explicit horizon T."""
    if d < alpha:
        return 0.0
    if d == alpha:
        return math.log(
            2.0 / (table.phi(1.0 / t) * l * (1.0 / table.phi(1.0 / T)))
        )
    return l ** (alpha - d)


# ---------------------------------------------------------------------------
# Boundary integrals
# ---------------------------------------------------------------------------


def _a_gamma_scalar(gamma, alpha, k, r, dx, dy):
    if gamma == 0.0:
        return 1.0
    rr = r / (r + 1.0) if k == 2 else r
    out = 1.0
    for dp in (dx, dy):
        if math.isinf(dp):
            continue
        ph = dp**alpha
        out *= (ph / (ph + rr)) ** gamma
    return out


def boundary_integral(model, k, lo, hi, dx, dy, weight_pow=0.0, rtol=1e-8):
    """int_lo^hi r^{weight_pow} a_k^gamma(r)/V(Phi^{-1}(r)) dr.

    Inverted limits return 0 (the regime is empty).  Panels split at the
    boundary scales Phi(delta) so the adaptive rule sees smooth pieces.
    """
    if hi <= lo:
        return 0.0
    g, alpha, d = model.gamma, model.alpha, model.d

    def f(r):
        return r**weight_pow * _a_gamma_scalar(g, alpha, k, r, dx, dy) / r ** (d / alpha)

    pts = sorted(
        {p**alpha for p in (dx, dy) if math.isfinite(p) and lo < p**alpha < hi}
        | ({1.0} if k == 2 and lo < 1.0 < hi else set())
    )
    total = 0.0
    edges = [lo, *pts, hi]
    for a, b in zip(edges[:-1], edges[1:]):
        v, _ = quad(f, a, b, epsrel=rtol, epsabs=1e-300, limit=200)
        total += v
    return total


def I_gamma_quadrature(model, geometry, table, k, t, x, y):
    """The near-diagonal integral I_k^gamma(t,x,y) by adaptive quadrature."""
    p = geometry_probe(geometry, x, y)
    lo = p["rho"] ** model.alpha
    hi = _Q2 / table.phi(1.0 / t)
    return boundary_integral(model, k, lo, hi, p["delta_x"], p["delta_y"])


def J_gamma(model, geometry, table, kernel, k, t, x, y):
    """J_k^gamma(t,x,y): the full near-diagonal estimate form."""
    p = geometry_probe(geometry, x, y)
    phi_inv = 1.0 / table.phi(1.0 / t)
    lead = _a_gamma_scalar(model.gamma, model.alpha, k, phi_inv, p["delta_x"], p["delta_y"])
    lead /= model.V_inv_time(phi_inv)
    return lead + float(kernel.w(t)) * I_gamma_quadrature(model, geometry, table, k, t, x, y)


# ---------------------------------------------------------------------------
# Closed forms of the near-diagonal integral (cases (a)-(g))
# ---------------------------------------------------------------------------


def _dgamma_case(alpha, d, gamma):
    ratio = d / alpha
    if gamma > 0.0 and abs(d - (1.0 - 2.0 * gamma) * alpha) < 1e-12:
        return "b"
    if gamma > 0.0 and abs(d - (1.0 - gamma) * alpha) < 1e-12:
        return "d"
    if abs(d - alpha) < 1e-12:
        return "f"
    if ratio < 1.0 - 2.0 * gamma:
        return "a"
    if 1.0 - 2.0 * gamma < ratio < 1.0 - gamma:
        return "c"
    if 1.0 - gamma < ratio < 1.0:
        return "e"
    if ratio > 1.0:
        return "g"
    raise DomainError("exponents (alpha=%g, d=%g, gamma=%g) not covered by the closed forms"
                      % (alpha, d, gamma))


def _S_exact(p, A, B, alpha, d):
    """Exact elementary value of S_p(A,B) for the power V, Phi."""
    q = p + d / alpha
    if abs(q - 1.0) < 1e-12:
        return math.log(B / A)
    return (B ** (1.0 - q) - A ** (1.0 - q)) / (1.0 - q)


def closed_I_gamma(model, geometry, table, t, x, y):
    """Closed form of I_1^gamma via the boundary-scenario decomposition.

    The three scenarios split the integration range by where the boundary
    factor a_1^gamma(r) saturates: (Sc.1) both distances comparable to rho,
    a ~ delta_*^Phi,gamma r^{-2 gamma} throughout; (Sc.2) three bands, a ~ 1
    below Phi(delta_x), one factor decaying up to Phi(delta_y), both beyond;
    (Sc.3) a ~ 1 on the whole range.  The band integrals S_p are elementary
    for power V and Phi and are evaluated exactly, so the only slack left
    against the direct quadrature is the saturation of a itself.

    Returns (value, case, scenario) with the exponent case letter (a)..(g)
    for grouping; gamma = 0 treats boundary distances as infinite, which
    forces the interior scenario.
    """
    g, alpha, d = model.gamma, model.alpha, model.d
    p = geometry_probe(geometry, x, y)
    dx, dy = p["delta_x"], p["delta_y"]
    if dx > dy:
        dx, dy = dy, dx
    if g == 0.0:
        dx = dy = math.inf
    l = p["rho"]
    phi_t = table.phi(1.0 / t)
    if l**alpha * phi_t > _Q4:
        raise RegimeError(
            "closed_I_gamma needs Phi(rho) phi(1/t) = %g <= 1/(4e^2)" % (l**alpha * phi_t)
        )
    Phi = lambda r: r**alpha
    case = _dgamma_case(alpha, d, g)
    A = Phi(l)
    B = _Q2 / phi_t
    dstar_phi = Phi(dx) * Phi(dy)
    if Phi(dx) <= 4.0 * A:
        sc = 1
        val = dstar_phi**g * _S_exact(2.0 * g, A, B, alpha, d)
    elif Phi(dy) <= _Q4 / phi_t:
        sc = 2
        val = _S_exact(0.0, A, Phi(dx) / 2.0, alpha, d)
        val += Phi(dx) ** g * _S_exact(g, Phi(dx) / 2.0, Phi(dy), alpha, d)
        val += dstar_phi**g * _S_exact(2.0 * g, Phi(dy), B, alpha, d)
    else:
        sc = 3
        val = _S_exact(0.0, A, B, alpha, d)
    return val, case, "Sc.%d" % sc


def S_p(p, A, B, alpha, d, rtol=1e-10):
    """The elementary integral S_p(A,B) = int_A^B r^{-p}/V(Phi^{-1}(r)) dr.

    Returns the direct quadrature value together with the matching
    asymptotic form: the A-endpoint dominates when d/alpha > 1-p, the
    B-endpoint when d/alpha < 1-p, and the integral is log(B/A) at equality.
    """
    if not 0.0 < A < B:
        raise DomainError("S_p needs 0 < A < B")
    q = p + d / alpha
    if abs(q - 1.0) < 1e-12:
        direct = math.log(B / A)
        return {"quadrature": direct, "asymptotic": direct, "case": "iv"}
    direct = (B ** (1.0 - q) - A ** (1.0 - q)) / (1.0 - q)
    if d / alpha > 1.0 - p:
        asym = A ** (1.0 - p) / A ** (d / alpha)
        case = "ii"
    else:
        asym = B ** (1.0 - p) / B ** (d / alpha)
        case = "iii"
    return {"quadrature": direct, "asymptotic": asym, "case": case}


# ---------------------------------------------------------------------------
# Theorem dispatcher
# ---------------------------------------------------------------------------

CASE_TAGS = (
    "specialsmall-i-a",
    "specialsmall-i-b",
    "specialsmall-ii-a",
    "specialsmall-ii-b",
    "specialsmall-ii-c",
    "speciallarge-i",
    "speciallarge-ii",
    "speciallarge-iii",
    "speciallarge-iv",
    "speciallarge-v",
    "specialsub-i",
    "specialsub-ii",
    "specialtrunc-i",
    "specialtrunc-ii",
    "specialtrunc-iii",
    "mainsmall-i",
    "mainsmall-ii-a",
    "mainsmall-ii-b",
    "mainsmall-ii-c",
    "mainlarge-i",
    "mainlarge-ii",
    "mainsub-i",
    "mainsub-ii",
    "main2-i",
    "main2-ii",
    "example1-small",
    "example1-large",
    "example2-i",
    "example2-ii",
    "example2-iii",
)


@dataclass
class EstimateCase:
    """One theorem evaluation request.

    margin is the safety factor applied to the regime inequalities; the
    horizon T enters the fixed-T statements (t >= T) and G_alpha_d.
    """

    tag: str
    kernel: object
    table: object
    model: object
    geometry: object
    t: float
    x: float
    y: float
    horizon_T: float = 1.0
    margin: float = 2.0
    conditions: object = None
    exp_constant: float = 1.0

    def __post_init__(self):
        if self.tag not in CASE_TAGS:
            raise DomainError("unknown estimate case tag %r" % (self.tag,))


def _require(ok, predicate):
    if not ok:
        raise RegimeError("outside regime: %s" % predicate)


def _bnd_min_form(alpha_gamma_exp, scale, dx, dy):
    out = 1.0
    for dp in (dx, dy):
        if math.isfinite(dp):
            out *= min(1.0, dp / scale) ** alpha_gamma_exp
    return out


def _one_over_rho_sq(dx, dy, rho, expo):
    if rho == 0.0:
        return 1.0
    ds = dx * dy
    if math.isinf(ds):
        return 1.0
    return min(1.0, ds / rho**2) ** expo


def theorem_estimate(case):
    """Evaluate the displayed two-sided form of one theorem branch.

    Free constants are 1 (``exp_constant`` scales exponential arguments);
    returns {"value", "lower", "upper", "branch"}; out-of-regime inputs
    raise RegimeError naming the failed predicate.
    """
    tag = case.tag
    m, g, table, kern = case.model, case.geometry, case.table, case.kernel
    t, x, y = case.t, case.x, case.y
    mg = case.margin
    p = geometry_probe(g, x, y)
    rho, dx, dy = p["rho"], p["delta_x"], p["delta_y"]
    alpha, d = m.alpha, m.d
    phi_t = table.phi(1.0 / t)
    inv = 1.0 / phi_t
    w_t = float(kern.w(t))
    c = case.exp_constant

    def done(v, branch, lower=None, upper=None):
        return {
            "value": v,
            "lower": v if lower is None else lower,
            "upper": v if upper is None else upper,
            "branch": branch,
        }

    # ---- explicit special classes -----------------------------------------
    if tag.startswith("specialsmall"):
        if tag == "specialsmall-i-a":
            _require(rho**alpha * phi_t <= _Q4 / mg, "phi(1/t) rho^alpha <= 1/(4e^2)")
            ds = dx * dy
            first = (min(1.0, ds / inv ** (2.0 / alpha)) ** (alpha / 2.0) if math.isfinite(ds) else 1.0) * phi_t ** (d / alpha)
            second = w_t * _one_over_rho_sq(dx, dy, rho, alpha / 2.0) * F_alpha_k(alpha, d, inv, rho, dx, dy)
            return done(first + second, "near-diagonal jump/diffusion")
        if tag == "specialsmall-i-b":
            _require(rho**alpha * phi_t <= _Q4 / mg, "phi(1/t) rho^alpha <= 1/(4e^2)")
            ds = dx * dy
            first = (min(1.0, ds / inv ** (2.0 / alpha)) ** (alpha - 1.0) if math.isfinite(ds) else 1.0) * phi_t ** (d / alpha)
            second = w_t * _one_over_rho_sq(dx, dy, rho, alpha - 1.0) * F_alpha_c(alpha, d, inv, rho, dx, dy)
            return done(first + second, "near-diagonal censored")
        _require(rho**alpha * phi_t > mg * _Q4, "phi(1/t) rho^alpha > 1/(4e^2)")
        if tag == "specialsmall-ii-a":
            bnd = _bnd_min_form(alpha / 2.0, inv ** (1.0 / alpha), dx, dy)
            return done(bnd * inv / rho ** (d + alpha), "off-diagonal jump")
        if tag == "specialsmall-ii-b":
            bnd = _bnd_min_form(alpha - 1.0, inv ** (1.0 / alpha), dx, dy)
            return done(bnd * inv / rho ** (d + alpha), "off-diagonal censored")
        bnd = _bnd_min_form(alpha / 2.0, inv ** (1.0 / alpha), dx, dy)
        val = bnd * phi_t ** (d / alpha) * math.exp(
            -c * t * table.bar_phi_alpha(alpha, (rho / t) ** alpha)
        )
        return done(val, "off-diagonal diffusion")

    if tag.startswith("speciallarge"):
        _require(t >= mg * case.horizon_T, "t >= T")
        if tag in ("speciallarge-i", "speciallarge-ii"):
            _require(g.bounded, "diam(D) < inf")
            R = g.diam
            # at t = T_D := [phi^{-1}(R^-alpha/(4e^2))]^{-1} the inverse
            # exponent is exactly 4e^2 R^alpha
            invTD = R**alpha / _Q4
            expo = alpha / 2.0 if tag == "speciallarge-i" else alpha - 1.0
            F = F_alpha_k if tag == "speciallarge-i" else F_alpha_c
            ds = dx * dy
            bracket = min(1.0, ds**expo) + F(alpha, d, invTD, rho, dx, dy)
            val = w_t * _one_over_rho_sq(dx, dy, rho, expo) * bracket
            return done(val, "large-time bounded")
        if tag in ("speciallarge-iii", "speciallarge-iv"):
            # the small-time displays extend to all t >= T
            sub = EstimateCase(
                "specialsmall-i-a" if rho**alpha * phi_t <= _Q4 else (
                    "specialsmall-ii-a" if tag.endswith("iii") else "specialsmall-ii-c"
                ),
                kern, table, m, g, t, x, y, case.horizon_T, mg, exp_constant=c,
            )
            out = theorem_estimate(sub)
            out["branch"] = "large-time unbounded: " + out["branch"]
            return out
        # speciallarge-v: J3 / D3 on the exterior-type domain
        b1 = min(1.0, dx) ** (alpha / 2.0) * min(1.0, dy) ** (alpha / 2.0)
        if rho**alpha * phi_t <= _Q4 / mg:
            G = G_alpha_d(table, alpha, d, t, max(1.0, rho), case.horizon_T)
            first = b1 * (phi_t ** (d / alpha) + w_t * G)
            second = 0.0
            if rho <= 1.0:
                # at t* = [phi^{-1}(1/(4e^2))]^{-1} the inverse exponent is 4e^2
                second = (
                    w_t
                    * _one_over_rho_sq(dx, dy, rho, alpha / 2.0)
                    * F_alpha_k(alpha, d, 1.0 / _Q4, rho, dx, dy)
                )
            return done(first + second, "exterior near-diagonal")
        _require(rho**alpha * phi_t > mg * _Q4, "phi(1/t) rho^alpha > 1/(4e^2)")
        if m.family.startswith("J") or m.family == "HK_J":
            return done(b1 * inv / rho ** (d + alpha), "exterior off-diagonal jump")
        val = b1 * phi_t ** (d / alpha) * math.exp(
            -c * t * table.bar_phi_alpha(alpha, (rho / t) ** alpha)
        )
        return done(val, "exterior off-diagonal diffusion")

    if tag.startswith("specialsub"):
        _require(t >= mg * case.horizon_T, "t >= T")
        _require(g.bounded, "diam(D) < inf")
        cond = case.conditions
        _require(cond is not None and cond.sub is not None, "(Sub*.) certified")
        beta, theta = cond.sub["beta"], cond.sub["theta"]
        R = g.diam
        invTD = R**alpha / _Q4
        expo = alpha / 2.0 if tag == "specialsub-i" else alpha - 1.0
        F = F_alpha_k if tag == "specialsub-i" else F_alpha_c
        ds = dx * dy
        bracket = min(1.0, ds**expo) + F(alpha, d, invTD, rho, dx, dy)
        val = math.exp(-theta * t**beta) * _one_over_rho_sq(dx, dy, rho, expo) * bracket
        return done(val, "subexponential large-time")

    if tag.startswith("specialtrunc"):
        t_f = kern.support_end
        _require(math.isfinite(t_f), "(Trunc.) kernel")
        _require(t >= t_f / 2.0, "t >= t_f/2")
        n_t = math.floor(t / t_f) + 1
        if tag == "specialtrunc-i" or tag == "specialtrunc-ii":
            _require(g.bounded, "diam(D) < inf")
            expo = alpha / 2.0 if tag == "specialtrunc-i" else alpha - 1.0
            F = F_alpha_k if tag == "specialtrunc-i" else F_alpha_c
            thresh = (
                math.floor((d + alpha) / alpha)
                if tag == "specialtrunc-i"
                else math.floor((d + 2.0 * alpha - 2.0) / alpha)
            )
            ds = dx * dy
            if t >= thresh * t_f:
                return done(ds**expo * math.exp(-c * t), "post-singular exponential")
            R = g.diam
            invTD = R**alpha / _Q4
            bracket = (
                min(ds ** (alpha / 2.0), inv)
                + F(alpha, d - alpha * n_t, invTD, rho, dx, dy)
                + (n_t * t_f - t) ** n_t * F(alpha, d - alpha * (n_t - 1), invTD, rho, dx, dy)
            )
            val = _one_over_rho_sq(dx, dy, rho, expo) * bracket
            return done(val, "truncated polynomial window (n_t=%d)" % n_t)
        # specialtrunc-iii: J2/J3/D2/D3
        if rho**alpha <= inv and t < math.floor((d + alpha) / alpha) * t_f:
            ds = dx * dy
            bracket = (
                min(ds ** (alpha / 2.0), inv) if math.isfinite(ds) else inv
            ) + F_alpha_k(alpha, d - alpha * n_t, inv, rho, dx, dy) + (
                n_t * t_f - t
            ) ** n_t * F_alpha_k(alpha, d - alpha * (n_t - 1), inv, rho, dx, dy)
            val = _one_over_rho_sq(dx, dy, rho, alpha / 2.0) * bracket
            return done(val, "truncated polynomial window (n_t=%d)" % n_t)
        return done(q_eval(m, g, c * t, x, y), "q(ct,x,y)")

    # ---- general theorems ---------------------------------------------------
    if tag == "mainlarge-i":
        # lambda = 0: the small-time estimates extend verbatim to t >= T
        _require(t >= mg * case.horizon_T, "t >= T")
        _require(m.lam is None or m.lam == 0.0, "lambda = 0")
        if rho**alpha * phi_t <= _Q4:
            sub_tag = "mainsmall-i"
        elif m.family in ("HK_D", "D1", "D2", "D3"):
            sub_tag = "mainsmall-ii-b"
        elif m.family == "HK_M":
            sub_tag = "mainsmall-ii-c"
        else:
            sub_tag = "mainsmall-ii-a"
        sub = EstimateCase(
            sub_tag, kern, table, m, g, t, x, y, case.horizon_T, 1.0,
            conditions=case.conditions, exp_constant=c,
        )
        out = theorem_estimate(sub)
        out["branch"] = "large-time: " + out["branch"]
        return out
    if tag == "mainsmall-i":
        _require(rho**alpha * phi_t <= _Q4 / mg, "Phi(rho) phi(1/t) <= 1/(4e^2)")
        val = J_gamma(m, g, table, kern, m.k, t, x, y)
        return done(val, "near-diagonal J form")
    if tag.startswith("mainsmall-ii"):
        _require(rho**alpha * phi_t > mg * _Q4, "Phi(rho) phi(1/t) > 1/(4e^2)")
        a = _a_gamma_scalar(m.gamma, alpha, m.k, inv, dx, dy)
        if tag.endswith("a"):
            val = a / (phi_t * m.Phi(rho) * m.V(rho))
            return done(val, "off-diagonal jump")
        from .bernstein import calN

        N = calN(table, m.Phi, t, rho)
        diff = a * math.exp(-c * N) / m.V_inv_time(inv)
        if tag.endswith("b"):
            return done(diff, "off-diagonal diffusion")
        jump = a / (phi_t * m.Psi(rho) * m.V(rho))
        return done(jump + diff, "off-diagonal mixed")
    if tag == "mainlarge-ii":
        _require(t >= mg * case.horizon_T, "t >= T")
        _require(m.lam is not None and m.lam > 0.0, "lambda > 0")
        _require(g.bounded, "R_D < inf")
        R = g.diam
        val = w_t * boundary_integral(m, 1, rho**alpha, 2.0 * R**alpha, dx, dy)
        return done(val, "large-time boundary integral")
    if tag == "mainsub-i":
        cond = case.conditions
        _require(cond is not None and cond.sub is not None, "(Sub.) certified")
        beta, theta = cond.sub["beta"], cond.sub["theta"]
        _require(t >= mg * case.horizon_T, "t >= T")
        if rho**alpha * phi_t <= _Q4 / mg:
            lead = _a_gamma_scalar(m.gamma, alpha, m.k, t, dx, dy) / m.V_inv_time(t)
            I = boundary_integral(m, m.k, rho**alpha, _Q2 / phi_t, dx, dy)
            lower = lead + w_t * I
            upper = lead + math.exp(-0.5 * theta * t**beta) * I
            return done(0.5 * (lower + upper), "subexp near-diagonal", lower=lower, upper=upper)
        return done(q_eval(m, g, c * t, x, y), "q(ct,x,y)")
    if tag == "mainsub-ii":
        cond = case.conditions
        _require(cond is not None and cond.sub is not None, "(Sub.) certified")
        beta, theta = cond.sub["beta"], cond.sub["theta"]
        _require(t >= mg * case.horizon_T, "t >= T")
        _require(m.lam is not None and m.lam > 0.0 and g.bounded, "lambda > 0 and R_D < inf")
        R = g.diam
        I = boundary_integral(m, 1, rho**alpha, 2.0 * R**alpha, dx, dy)
        if beta < 1.0:
            return done(
                0.5 * (w_t + math.exp(-theta * t**beta)) * I,
                "subexp boundary integral",
                lower=w_t * I,
                upper=math.exp(-theta * t**beta) * I,
            )
        bnd = (dx**alpha) ** m.gamma * (dy**alpha) ** m.gamma
        lower = w_t * I + math.exp(-m.lam * 1.0 * t) * bnd
        upper = math.exp(-0.5 * theta * t) * I + math.exp(-m.lam * 1.0 * t) * bnd
        return done(0.5 * (lower + upper), "exponential boundary mix", lower=lower, upper=upper)
    if tag.startswith("main2"):
        t_f = kern.support_end
        _require(math.isfinite(t_f), "(Trunc.) kernel")
        _require(t >= t_f / 2.0, "t >= t_f/2")
        n_t = math.floor(t / t_f) + 1
        window = math.floor(m.d / m.alpha + 2.0 * m.gamma) * t_f
        if tag == "main2-i":
            if rho**alpha > t:
                return done(q_eval(m, g, c * t, x, y), "q(ct,x,y)")
            if t >= window:
                val = _a_gamma_scalar(m.gamma, alpha, m.k, t, dx, dy) / m.V_inv_time(t)
                return done(val, "post-singular q form")
            i1 = boundary_integral(m, 1, rho**alpha, 2.0 * t, dx, dy, weight_pow=float(n_t))
            i2 = boundary_integral(m, 1, rho**alpha, 2.0 * t, dx, dy, weight_pow=float(n_t - 1))
            return done(i1 + (n_t * t_f - t) ** n_t * i2, "truncated window (n_t=%d)" % n_t)
        _require(m.lam is not None and m.lam > 0.0 and g.bounded, "lambda > 0 and R_D < inf")
        R = g.diam
        if t >= window:
            bnd = (dx**alpha) ** m.gamma * (dy**alpha) ** m.gamma
            return done(math.exp(-c * t) * bnd, "post-singular exponential")
        i1 = boundary_integral(m, 1, rho**alpha, 2.0 * R**alpha, dx, dy, weight_pow=float(n_t))
        i2 = boundary_integral(m, 1, rho**alpha, 2.0 * R**alpha, dx, dy, weight_pow=float(n_t - 1))
        return done(i1 + (n_t * t_f - t) ** n_t * i2, "truncated window (n_t=%d)" % n_t)

    # ---- worked examples ------------------------------------------------------
    if tag.startswith("example1"):
        beta, delta = kern.beta, kern.delta
        diffusive = abs(alpha - 2.0) < 1e-12
        if tag == "example1-small":
            _require(t <= delta / 2.0, "t <= delta/2")
            if rho <= t ** (beta / alpha):
                if d < alpha:
                    return done(t ** (-beta * d / alpha), "on-diagonal d<alpha")
                if rho == 0.0:
                    return done(math.inf, "on-diagonal divergent")
                if d == alpha:
                    return done(
                        t**-beta * math.log(2.0 * t ** (beta / alpha) / rho), "on-diagonal log"
                    )
                return done(t**-beta / rho ** (d - alpha), "on-diagonal d>alpha")
            if not diffusive:
                return done(t**beta / rho ** (d + alpha), "off-diagonal jump")
            val = t ** (-beta * d / alpha) * math.exp(
                -c * rho ** (2.0 / (2.0 - beta)) * t ** (-beta / (2.0 - beta))
            )
            return done(val, "off-diagonal gaussian")
        _require(t >= delta / 2.0, "t >= delta/2")
        n_t = math.floor(t / delta) + 1
        if rho**alpha > t:
            if not diffusive:
                return done(t / rho ** (d + alpha), "off-diagonal jump")
            return done(t ** (-d / alpha) * math.exp(-c * rho**2 / t), "off-diagonal gaussian")
        if t >= math.floor(d / alpha) * delta:
            return done(t ** (-d / alpha), "diagonal-regular")
        d_over_a_int = abs(d / alpha - round(d / alpha)) < 1e-12
        if d_over_a_int and t >= (d - alpha) * delta / alpha:
            val = t ** (-d / alpha) + (d * delta / (alpha * t) - 1.0) ** (d / alpha) * math.log(
                2.0 * t / rho**alpha
            )
            return done(val, "log window")
        if t >= math.floor((d - alpha) / alpha) * delta and not d_over_a_int:
            val = t ** (-d / alpha) + (n_t * delta - t) ** n_t * t**-n_t / rho ** (
                d - alpha * n_t
            )
            return done(val, "mixed window (n_t=%d)" % n_t)
        val = (rho**alpha / t + (n_t * delta - t) ** n_t) * t**-n_t / rho ** (d - alpha * n_t)
        return done(val, "early window (n_t=%d)" % n_t)

    if tag.startswith("example2"):
        if tag == "example2-iii":
            _require(t >= 1.0, "t >= 1")
            sub = EstimateCase(
                "speciallarge-i", kern, table, m, g, t, x, y, case.horizon_T, 1.0, exp_constant=c
            )
            out = theorem_estimate(sub)
            out["branch"] = "distributed-order large-time"
            return out
        _require(t <= 1.0, "t <= 1")
        if tag == "example2-i":
            sub = EstimateCase(
                "specialsmall-i-a", kern, table, m, g, t, x, y, case.horizon_T, mg, exp_constant=c
            )
            out = theorem_estimate(sub)
            out["branch"] = "distributed-order near-diagonal"
            return out
        sub_tag = "specialsmall-ii-c" if abs(alpha - 2.0) < 1e-12 else "specialsmall-ii-a"
        sub = EstimateCase(
            sub_tag, kern, table, m, g, t, x, y, case.horizon_T, mg, exp_constant=c
        )
        out = theorem_estimate(sub)
        out["branch"] = "distributed-order off-diagonal"
        return out

    raise DomainError("tag %r not dispatched" % (tag,))
