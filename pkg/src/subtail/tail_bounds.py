"""Theoretical tail-probability bounds and their validity regimes.

Each bound of the theory holds on an explicit inequality region of (r, t),
always with free constants whose existence (not value) is proven; here the
structural part is evaluated with every free constant set to 1 and the
comparability layer fits and monitors the constants.

Upper bounds for P(S_r >= t):

* small-t-poly:   c r w(t)                    on t <= t_s, r phi(1/t) <= 1/(4e^2)
* large-t-poly:   c r w(t)                    on t >= T,  r phi(1/t) <= 1/(4e^2)
* subexp:         c r exp(-theta t^beta / 2)  on t >= T, r/t <= L
                  (sharp variant c r exp(-theta t^beta + k r) for beta < 1)
* truncated-small-r: [r + (n t_f - t)^n] r^n exp(-c t log t), n = floor(t/t_f)+1,
                  on r <= r_0, t >= t_f/2
* truncated-linear:  exp(-c t log(t/r))       on t >= t_f/2, r/t <= L

Lower bounds:

* universal-lower: P(S_r >= t) >= e^{-eL} r w(t) whenever r phi(1/t) <= L
* lower-tail (both directions for P(S_r <= t)):
      exp(-r H((phi')^{-1}(t/r))) as the upper bound and the same exponent
      with free (c1, c2) below, on r >= N b^{-1}(t).

Regime classification applies a margin factor (default 2) to every boundary
inequality, because the statements are asymptotic near their boundaries and
MC noise would dominate there.  A point inside no regime, or inside two
regimes whose structural forms disagree, is reported as unclassified rather
than guessed at.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import RegimeError
from .kernels import Truncated, check_conditions

__all__ = [
    "Regime",
    "RegimeConfig",
    "classify",
    "lower_bound_universal",
    "upper_bound_form",
    "lower_tail_bounds",
    "truncated_small_r_threshold",
]

_QUARTER_E2 = 1.0 / (4.0 * math.e**2)


@dataclass(frozen=True)
class RegimeConfig:
    """Knobs of the regime classifier.

    ``horizon_T`` is the fixed large-time horizon of the t >= T statements;
    ``sub_L`` the r/t threshold of the subexponential bounds (the theory
    only guides it qualitatively); ``margin`` the safety factor kept from
    every boundary.
    """

    margin: float = 2.0
    horizon_T: float = 1.0
    sub_L: float = 0.5
    sub_k: float = 1.0


@dataclass
class Regime:
    tag: str
    constraints: list = field(default_factory=list)  # (name, value, bound) with value <= bound
    margin: float = 2.0

    def check(self):
        for name, value, bound in self.constraints:
            if value > bound:
                raise RegimeError("outside regime %s: %s = %g > %g" % (self.tag, name, value, bound))


def truncated_small_r_threshold(table, kernel):
    """r_0 with r phi(1/r) <= 1/(4e^2) and r <= t_f/6 for all r <= r_0."""
    t_f = kernel.support_end
    lo, hi = 1e-12, t_f / 6.0
    if hi * table.phi(1.0 / hi) <= _QUARTER_E2:
        return hi
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if mid * table.phi(1.0 / mid) <= _QUARTER_E2:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-12:
            break
    return lo


def classify(kernel, table, r, t, conditions=None, config=RegimeConfig()):
    """All upper-bound regimes admitting (r, t) after the margin factor."""
    if conditions is None:
        conditions = check_conditions(kernel)
    m = config.margin
    out = []
    rp = r * table.phi(1.0 / t)
    if conditions.spoly is not None:
        reg = Regime(
            "small-t-poly",
            [("t/t_s", t / conditions.spoly["t_s"], 1.0 / m), ("4e^2 r phi(1/t)", rp / _QUARTER_E2, 1.0 / m)],
            m,
        )
        if all(v <= b for _, v, b in reg.constraints):
            out.append(reg)
    if conditions.lpoly is not None:
        reg = Regime(
            "large-t-poly",
            [("T/t", config.horizon_T / t, 1.0 / m), ("4e^2 r phi(1/t)", rp / _QUARTER_E2, 1.0 / m)],
            m,
        )
        if all(v <= b for _, v, b in reg.constraints):
            out.append(reg)
    if conditions.sub is not None:
        reg = Regime(
            "subexp",
            [("T/t", config.horizon_T / t, 1.0 / m), ("(r/t)/L", (r / t) / config.sub_L, 1.0 / m)],
            m,
        )
        if all(v <= b for _, v, b in reg.constraints):
            out.append(reg)
    if conditions.trunc is not None:
        t_f = conditions.trunc["t_f"]
        r0 = truncated_small_r_threshold(table, kernel)
        reg = Regime(
            "truncated-small-r",
            [("r/r_0", r / r0, 1.0 / m), ("t_f/(2t)", t_f / (2.0 * t), 1.0 / m)],
            m,
        )
        if all(v <= b for _, v, b in reg.constraints):
            out.append(reg)
        # the small-r statement refines the linear-in-log one on r <= r_0, so
        # the linear regime starts above r_0 to keep the classification a
        # partition (no point receives two structurally different forms)
        reg = Regime(
            "truncated-linear",
            [
                ("(r/t)/L", (r / t) / config.sub_L, 1.0 / m),
                ("t_f/(2t)", t_f / (2.0 * t), 1.0 / m),
                ("r_0/r", r0 / r, 1.0 / m),
            ],
            m,
        )
        if all(v <= b for _, v, b in reg.constraints):
            out.append(reg)
    return out


def lower_bound_universal(table, kernel, r, t, L):
    """Universal lower bound e^{-eL} r w(t), valid whenever r phi(1/t) <= L."""
    rp = r * table.phi(1.0 / t)
    if rp > L:
        raise RegimeError("universal lower bound needs r phi(1/t) = %g <= L = %g" % (rp, L))
    return math.exp(-math.e * L) * r * float(kernel.w(t))


def _form_value(tag, kernel, conditions, r, t, config):
    w_t = float(kernel.w(t))
    if tag in ("small-t-poly", "large-t-poly"):
        return {"tag": tag, "form": "r*w(t)", "value": r * w_t, "constant": 1.0}
    if tag == "subexp":
        beta, theta = conditions.sub["beta"], conditions.sub["theta"]
        val = r * math.exp(-0.5 * theta * t**beta)
        out = {"tag": tag, "form": "r*exp(-theta/2 t^beta)", "value": val, "constant": 1.0}
        if beta < 1.0:
            out["sharp_value"] = r * math.exp(-theta * t**beta + config.sub_k * r)
            out["sharp_form"] = "r*exp(-theta t^beta + k r)"
        return out
    if tag == "truncated-small-r":
        t_f = conditions.trunc["t_f"]
        n = math.floor(t / t_f) + 1
        val = (r + (n * t_f - t) ** n) * r**n * math.exp(-t * math.log(t))
        return {
            "tag": tag,
            "form": "[r+(n t_f - t)^n] r^n exp(-c t log t)",
            "value": val,
            "n_t": n,
            "constant": 1.0,
        }
    if tag == "truncated-linear":
        return {
            "tag": tag,
            "form": "exp(-c t log(t/r))",
            "value": math.exp(-t * math.log(t / r)),
            "constant": 1.0,
        }
    raise RegimeError("unknown regime tag %r" % tag)


def upper_bound_form(kernel, table, r, t, conditions=None, config=RegimeConfig()):
    """Structural upper bound for P(S_r >= t) at (r, t).

    Returns the form of the unique admissible regime (free constant left at
    1).  Points admitted by several regimes are fine only when the forms
    coincide structurally; otherwise the result is the tag "unclassified",
    never a guess.
    """
    if conditions is None:
        conditions = check_conditions(kernel)
    regs = classify(kernel, table, r, t, conditions=conditions, config=config)
    if not regs:
        return {"tag": "unclassified", "reason": "no regime admits (r=%g, t=%g)" % (r, t)}
    vals = [_form_value(reg.tag, kernel, conditions, r, t, config) for reg in regs]
    forms = {v["form"] for v in vals}
    if len(forms) > 1:
        return {
            "tag": "unclassified",
            "reason": "regimes %s disagree structurally" % sorted(v["tag"] for v in vals),
        }
    out = vals[0]
    out["regimes"] = [reg.tag for reg in regs]
    return out


@dataclass(frozen=True)
class LowerTailBounds:
    """Two-sided bounds for P(S_r <= t): exp(-exponent) above, and the same
    exponent with free (c1, c2) below (evaluated at c1 = c2 = 1)."""

    exponent: float
    upper: float
    lower: float


def lower_tail_bounds(table, r, t, N=1.0):
    """Jain-Pruitt lower-tail bounds at (r, t), valid for r >= N b^{-1}(t)."""
    binv = table.invert("b", t)
    if r < N * binv:
        raise RegimeError(
            "lower-tail bounds need r = %g >= N b^{-1}(t) = %g" % (r, N * binv)
        )
    lam = table.invert("phi_prime", t / r)
    expo = r * table.H(lam)
    up = math.exp(-expo)
    return LowerTailBounds(exponent=expo, upper=up, lower=math.exp(-expo))
