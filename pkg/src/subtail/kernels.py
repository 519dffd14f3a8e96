"""Tail kernels w and their Levy measures.

A tail kernel is a right-continuous non-increasing function
w : (0, inf) -> [0, inf) with w(0+) = inf, w(inf) = 0 (or w identically 0
past a finite support endpoint) and integrable min{1,s}-moment:

    int_0^inf min{1, s} (-dw(s)) < inf.

Such a w plays two roles at once: it is the convolution kernel of a
generalized fractional-time derivative, and -dw is the Levy measure of a
driftless subordinator.  The Caputo derivative of order beta corresponds to
w(s) = s^{-beta} / Gamma(1-beta).

Five kernel families are built in:

* ``Power``            w(s) = scale * s^{-beta},                 0 < beta < 1
* ``Truncated``        w(s) = scale * (s^{-beta} - delta^{-beta}) on (0, delta]
* ``Subexp``           power piece on (0, 1] joined continuously to
                       c0 * exp(-theta * s^beta) on [1, inf)
* ``DistributedOrder`` finite mixture of Caputo kernels
* ``Tabulated``        piecewise log-linear table with a declared tail class

Each family exposes, besides pointwise evaluation, the exact truncated
moments M_k(a) = int_0^a u^k w(u) du in closed form.  These drive the fast
Laplace-transform quadrature in :mod:`subtail.bernstein` and give exact
small-jump compensators for the simulator.

``check_conditions`` certifies, on a logarithmic grid, which of the
structural scaling conditions a kernel satisfies: small-time polynomial
decay, large-time polynomial decay, (sub)exponential decay, and finite
support with bi-Lipschitz behaviour near the endpoint.  All reported
exponents come with a witnessed ratio constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn, gammaincc

from .errors import AtomError, DomainError, RangeError

__all__ = [
    "Power",
    "Truncated",
    "Subexp",
    "DistributedOrder",
    "Tabulated",
    "caputo",
    "kernel_from_config",
    "eval_w",
    "levy_density",
    "inverse_w",
    "check_conditions",
    "ConditionReport",
]


def _as_positive_array(s):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0) or np.any(~np.isfinite(s)):
        raise DomainError("kernel argument must be a positive finite real, got %r" % (s,))
    return s


# ---------------------------------------------------------------------------
# Kernel variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Power:
    """w(s) = scale * s^{-beta}.  Caputo when scale = 1/Gamma(1-beta)."""

    beta: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError("Power kernel requires beta in (0,1)")
        if self.scale <= 0.0:
            raise DomainError("Power kernel requires scale > 0")

    support_end = math.inf

    @property
    def small_exponent(self):
        return self.beta

    def breakpoints(self):
        return ()

    def w(self, s):
        s = _as_positive_array(s)
        return self.scale * s ** (-self.beta)

    def nu(self, s):
        s = _as_positive_array(s)
        return self.scale * self.beta * s ** (-self.beta - 1.0)

    def moment(self, k, a):
        p = k + 1.0 - self.beta
        return self.scale * a**p / p

    def w_inv(self, y):
        return (self.scale / y) ** (1.0 / self.beta)

    def atoms(self):
        return ()


@dataclass(frozen=True)
class Truncated:
    """w(s) = scale * (s^{-beta} - delta^{-beta}) on (0, delta], zero after."""

    beta: float
    delta: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError("Truncated kernel requires beta in (0,1)")
        if self.delta <= 0.0 or self.scale <= 0.0:
            raise DomainError("Truncated kernel requires delta, scale > 0")

    @property
    def support_end(self):
        return self.delta

    @property
    def small_exponent(self):
        return self.beta

    def breakpoints(self):
        return (self.delta,)

    def w(self, s):
        s = _as_positive_array(s)
        out = self.scale * (s ** (-self.beta) - self.delta ** (-self.beta))
        return np.where(s < self.delta, out, 0.0)

    def nu(self, s):
        s = _as_positive_array(s)
        out = self.scale * self.beta * s ** (-self.beta - 1.0)
        return np.where(s < self.delta, out, 0.0)

    def moment(self, k, a):
        b = min(a, self.delta)
        p = k + 1.0 - self.beta
        return self.scale * (b**p / p - self.delta ** (-self.beta) * b ** (k + 1.0) / (k + 1.0))

    def w_inv(self, y):
        return (y / self.scale + self.delta ** (-self.beta)) ** (-1.0 / self.beta)

    def atoms(self):
        return ()


@dataclass(frozen=True)
class Subexp:
    """Sub- or plain exponential tail, c0*exp(-theta*s^beta) for s >= 1.

    The decay condition only constrains s >= 1; on (0, 1] we pin the power
    piece c * s^{-smallBeta} with c = c0*exp(-theta) chosen so the two
    pieces join continuously at s = 1.  That choice satisfies the kernel
    integrability condition and small-time polynomial scaling simultaneously.
    """

    beta: float
    theta: float
    c0: float = 1.0
    smallBeta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise DomainError("Subexp kernel requires beta in (0,1]")
        if not 0.0 < self.smallBeta < 1.0:
            raise DomainError("Subexp kernel requires smallBeta in (0,1)")
        if self.theta <= 0.0 or self.c0 <= 0.0:
            raise DomainError("Subexp kernel requires theta, c0 > 0")

    support_end = math.inf

    @property
    def small_exponent(self):
        return self.smallBeta

    @property
    def _c_small(self):
        return self.c0 * math.exp(-self.theta)

    def breakpoints(self):
        return (1.0,)

    def w(self, s):
        s = _as_positive_array(s)
        small = self._c_small * s ** (-self.smallBeta)
        # huge arguments underflow to exactly 0, which is the documented
        # behaviour (monotone tail limit), not an error
        large = self.c0 * np.exp(-self.theta * s**self.beta)
        return np.where(s <= 1.0, small, large)

    def nu(self, s):
        s = _as_positive_array(s)
        small = self._c_small * self.smallBeta * s ** (-self.smallBeta - 1.0)
        large = self.c0 * self.theta * self.beta * s ** (self.beta - 1.0) * np.exp(
            -self.theta * s**self.beta
        )
        return np.where(s <= 1.0, small, large)

    def moment(self, k, a):
        p = k + 1.0 - self.smallBeta
        head = self._c_small * min(a, 1.0) ** p / p
        if a <= 1.0:
            return head
        return head + self._tail_moment(k, 1.0) - self._tail_moment(k, a)

    def _tail_moment(self, k, a):
        # int_a^inf u^k c0 exp(-theta u^beta) du via the upper incomplete gamma
        q = (k + 1.0) / self.beta
        return (
            self.c0
            / self.beta
            * self.theta ** (-q)
            * gamma_fn(q)
            * gammaincc(q, self.theta * a**self.beta)
        )

    def w_inv(self, y):
        w1 = self._c_small
        if y >= w1:
            return (w1 / y) ** (1.0 / self.smallBeta)
        return (math.log(self.c0 / y) / self.theta) ** (1.0 / self.beta)

    def atoms(self):
        return ()


@dataclass(frozen=True)
class DistributedOrder:
    """w(s) = sum_i kappa_i s^{-beta_i} / Gamma(1-beta_i), a Caputo mixture."""

    weights: tuple  # of (beta_i, kappa_i)

    def __post_init__(self):
        ws = tuple((float(b), float(k)) for b, k in self.weights)
        object.__setattr__(self, "weights", ws)
        if not ws:
            raise DomainError("DistributedOrder kernel needs at least one weight")
        for b, k in ws:
            if not 0.0 < b < 1.0:
                raise DomainError("DistributedOrder exponents must lie in (0,1)")
            if k < 0.0:
                raise DomainError("DistributedOrder weights must be >= 0")
        if not any(k > 0.0 for _, k in ws):
            raise DomainError("DistributedOrder needs one strictly positive weight")

    support_end = math.inf

    @property
    def small_exponent(self):
        return max(b for b, k in self.weights if k > 0.0)

    def breakpoints(self):
        return ()

    def w(self, s):
        s = _as_positive_array(s)
        out = np.zeros_like(s)
        for b, k in self.weights:
            if k > 0.0:
                out += k / gamma_fn(1.0 - b) * s ** (-b)
        return out

    def nu(self, s):
        s = _as_positive_array(s)
        out = np.zeros_like(s)
        for b, k in self.weights:
            if k > 0.0:
                out += k * b / gamma_fn(1.0 - b) * s ** (-b - 1.0)
        return out

    def moment(self, k, a):
        tot = 0.0
        for b, kap in self.weights:
            if kap > 0.0:
                p = k + 1.0 - b
                tot += kap / gamma_fn(1.0 - b) * a**p / p
        return tot

    w_inv = None

    def atoms(self):
        return ()


@dataclass(frozen=True)
class Tabulated:
    """Piecewise log-linear kernel through strictly decreasing knots.

    ``knots`` is a sequence of (s, w(s)) pairs with strictly increasing s and
    strictly decreasing positive w; between knots the kernel is a power law
    (linear in log-log), which preserves monotonicity.  Below the first knot
    the first segment's power law is extended (so w blows up at 0).  The
    declared ``tail`` class governs s beyond the last knot:

    * ``"power"`` - extend the last segment's power law to infinity;
    * ``"zero"``  - w drops to 0 at the last knot, leaving a Levy atom there.
    """

    knots: tuple
    tail: str = "power"

    def __post_init__(self):
        kn = tuple((float(s), float(v)) for s, v in self.knots)
        object.__setattr__(self, "knots", kn)
        if len(kn) < 2:
            raise DomainError("Tabulated kernel needs at least two knots")
        s = np.array([p[0] for p in kn])
        v = np.array([p[1] for p in kn])
        if np.any(s[1:] <= s[:-1]) or np.any(s <= 0.0):
            raise DomainError("Tabulated knots need strictly increasing positive s")
        if np.any(v[1:] >= v[:-1]) or np.any(v <= 0.0):
            raise DomainError("Tabulated knot values must be strictly decreasing and positive")
        if self.tail not in ("power", "zero"):
            raise DomainError("Tabulated tail class must be 'power' or 'zero'")
        q = np.log(v[:-1] / v[1:]) / np.log(s[1:] / s[:-1])
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_q", q)
        if q[0] >= 1.0:
            raise DomainError(
                "first-segment slope %.3f >= 1 violates the min{1,s} integrability condition"
                % q[0]
            )

    @property
    def support_end(self):
        return self._s[-1] if self.tail == "zero" else math.inf

    @property
    def small_exponent(self):
        return float(self._q[0])

    def breakpoints(self):
        return tuple(self._s)

    def _segment(self, s):
        # index i such that the power law of segment i applies at s;
        # clipped so the first/last segment extrapolates
        idx = np.searchsorted(self._s, s, side="right") - 1
        return np.clip(idx, 0, len(self._q) - 1)

    def w(self, s):
        s = _as_positive_array(s)
        i = self._segment(s)
        out = self._v[i] * (s / self._s[i]) ** (-self._q[i])
        if self.tail == "zero":
            out = np.where(s >= self._s[-1], 0.0, out)
        return out

    def nu(self, s):
        s = _as_positive_array(s)
        if np.any(np.isin(s, self._s)):
            raise AtomError("atom here: Levy density requested exactly at a tabulated knot")
        i = self._segment(s)
        out = self._q[i] * self._v[i] * self._s[i] ** self._q[i] * s ** (-self._q[i] - 1.0)
        if self.tail == "zero":
            out = np.where(s > self._s[-1], 0.0, out)
        return out

    def atoms(self):
        if self.tail == "zero":
            return ((float(self._s[-1]), float(self._v[-1])),)
        return ()

    def _piece_moment(self, k, lo, hi, i):
        # int_lo^hi u^k v_i (u/s_i)^(-q_i) du on one power-law piece
        c = self._v[i] * self._s[i] ** self._q[i]
        p = k + 1.0 - self._q[i]
        if abs(p) < 1e-12:
            return c * math.log(hi / lo)
        return c * (hi**p - lo**p) / p

    def moment(self, k, a):
        s = self._s
        # head below the first knot: extrapolated power law, finite since q0 < k+1
        if self._q[0] >= k + 1.0:
            return math.inf
        tot = self._piece_moment(k, 0.0, min(a, s[0]), 0)
        if a <= s[0]:
            return tot
        for i in range(len(self._q)):
            lo, hi = s[i], s[i + 1]
            if a <= lo:
                break
            tot += self._piece_moment(k, lo, min(a, hi), i)
        if a > s[-1] and self.tail == "power":
            tot += self._piece_moment(k, s[-1], a, len(self._q) - 1)
        return tot


def caputo(beta):
    """Caputo kernel of order beta: w(s) = s^{-beta} / Gamma(1-beta)."""
    return Power(beta=beta, scale=1.0 / gamma_fn(1.0 - beta))


def kernel_from_config(cfg):
    """Build a kernel from its JSON dict form: {"kind": ..., parameters...}."""
    kind = cfg.get("kind")
    if kind == "power":
        return Power(beta=cfg["beta"], scale=cfg.get("scale", 1.0))
    if kind == "truncated":
        return Truncated(beta=cfg["beta"], delta=cfg.get("delta", 1.0), scale=cfg.get("scale", 1.0))
    if kind == "subexp":
        return Subexp(
            beta=cfg["beta"],
            theta=cfg["theta"],
            c0=cfg.get("c0", 1.0),
            smallBeta=cfg.get("smallBeta", 0.5),
        )
    if kind == "distributed":
        return DistributedOrder(weights=tuple((b, k) for b, k in cfg["weights"]))
    if kind == "tabulated":
        return Tabulated(knots=tuple((s, v) for s, v in cfg["knots"]), tail=cfg.get("tail", "power"))
    raise DomainError("unknown kernel kind %r" % (kind,))


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def eval_w(kernel, s):
    """Evaluate the tail kernel; exactly 0 beyond the support for Truncated."""
    out = kernel.w(s)
    return float(out) if np.isscalar(s) or np.ndim(s) == 0 else out


def levy_density(kernel, s):
    """Levy density nu(s) = -w'(s) at interior points of an a.c. piece.

    For Tabulated kernels the density is undefined exactly at knots/atoms and
    an AtomError is raised there; the atom list is available via
    ``kernel.atoms()``.
    """
    out = kernel.nu(s)
    return float(out) if np.isscalar(s) or np.ndim(s) == 0 else out


def inverse_w(kernel, y, rtol=1e-12):
    """Solve w(s) = y on the strictly-decreasing part of the kernel.

    Bracketed bisection on the monotone kernel, with closed forms where the
    variant admits them.  RangeError outside the range of w.
    """
    y = float(y)
    if not (y > 0.0) or not math.isfinite(y):
        raise RangeError("inverse_w target must be a positive finite real", bracket=None)
    winv = getattr(kernel, "w_inv", None)
    if winv is not None:
        s = winv(y)
        if not np.isscalar(s):
            s = float(s)
        end = kernel.support_end
        if math.isfinite(end) and s > end:
            raise RangeError(
                "y=%g below inf of w on its support" % y, bracket=(kernel.w(end * 0.5), math.inf)
            )
        return s
    # generic: bracket by geometric expansion, then bisect in log s
    lo = hi = 1.0
    end = kernel.support_end
    if math.isfinite(end):
        hi = end * (1.0 - 1e-14)
        lo = min(lo, hi)
    for _ in range(200):
        if kernel.w(lo) >= y:
            break
        lo /= 8.0
    else:
        raise RangeError("y=%g above sup w" % y, bracket=(float(kernel.w(lo)), math.inf))
    if not math.isfinite(end):
        for _ in range(200):
            if kernel.w(hi) <= y:
                break
            hi *= 8.0
        else:
            raise RangeError("y=%g below inf w" % y, bracket=(0.0, float(kernel.w(hi))))
    elif kernel.w(hi) > y:
        raise RangeError("y=%g below inf of w on its support" % y, bracket=(float(kernel.w(hi)), math.inf))
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if kernel.w(mid) >= y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * lo:
            break
    return math.sqrt(lo * hi)


def inverse_w_vec(kernel, y):
    """Vectorized inverse_w for jump-size sampling (fixed 60-step bisection)."""
    y = np.asarray(y, dtype=float)
    winv = getattr(kernel, "w_inv", None)
    if winv is not None:
        if isinstance(kernel, Subexp):
            w1 = kernel._c_small
            small = (w1 / np.maximum(y, 1e-300)) ** (1.0 / kernel.smallBeta)
            yc = np.minimum(y, w1)
            large = (np.log(kernel.c0 / yc) / kernel.theta) ** (1.0 / kernel.beta)
            return np.where(y >= w1, small, large)
        return winv(y)
    end = kernel.support_end
    hi0 = end * (1.0 - 1e-14) if math.isfinite(end) else None
    lo = np.full(y.shape, 1e-18)
    hi = np.full(y.shape, hi0 if hi0 is not None else 1e18)
    for _ in range(60):
        mid = np.sqrt(lo * hi)
        w = kernel.w(mid)
        take_lo = w >= y
        lo = np.where(take_lo, mid, lo)
        hi = np.where(take_lo, hi, mid)
    return np.sqrt(lo * hi)


# ---------------------------------------------------------------------------
# Structural condition certification
# ---------------------------------------------------------------------------


@dataclass
class ConditionReport:
    """Grid-certified structural conditions of a kernel.

    Every reported exponent delta is witnessed: the grid of ratio tests
    w(R)/w(r) >= c (R/r)^{-delta} passed with the recorded c.
    """

    ker_ok: bool
    ker_integral: float
    spoly: dict | None = None
    lpoly: dict | None = None
    sub: dict | None = None
    trunc: dict | None = None
    evidence: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)


def _ratio_constant(logs, logw, delta, upto):
    """min over pairs r<=R (both <= grid[upto]) of log[w(R)/w(r) (R/r)^delta].

    One O(n) pass: y_j = log w_j + delta log s_j; the pair minimum equals
    min_j (y_j - running_max_{i<=j} y_i).
    """
    y = logw[: upto + 1] + delta * logs[: upto + 1]
    runmax = np.maximum.accumulate(y)
    return float(np.min(y - runmax))


def check_conditions(kernel, points_per_decade=64, lo=1e-6, hi=1e6, c_floor=0.25):
    """Certify (S.Poly.), (L.Poly.), (Sub.) and (Trunc.) on a log grid.

    The grid has >= ``points_per_decade`` points per decade on [lo, hi]
    clipped to the kernel support.  Exponents are taken from the variant's
    structure and verified; t_s is the largest grid point whose ratio
    constant stays above ``c_floor`` (capped at t_f/2 for truncated kernels,
    where that value is structural rather than empirical).
    """
    report = ConditionReport(ker_ok=True, ker_integral=float(kernel.moment(0, 1.0)))
    end = kernel.support_end
    top = min(hi, end * (1.0 - 1e-9)) if math.isfinite(end) else hi
    n = max(8, int(round(points_per_decade * math.log10(top / lo))))
    grid = np.geomspace(lo, top, n + 1)
    w = kernel.w(grid)

    if isinstance(kernel, Tabulated) and len(kernel.knots) < 8:
        report.diagnostics.append(
            "insufficient resolution: tabulated kernel has only %d knots" % len(kernel.knots)
        )

    # (Ker.): monotone, divergent at 0, vanishing at infinity, finite moment
    mono_ok = bool(np.all(np.diff(w) <= 1e-12 * np.maximum(w[:-1], 1e-300)))
    limits_ok = w[0] > 1e3 * max(w[-1], 1e-300) and (
        w[-1] < 1e-3 * w[0] or math.isfinite(end)
    )
    report.ker_ok = mono_ok and limits_ok and math.isfinite(report.ker_integral)
    report.evidence["grid"] = {"lo": float(grid[0]), "hi": float(grid[-1]), "n": int(n + 1)}

    logs, logw = np.log(grid), np.log(np.maximum(w, 1e-300))

    # ---- (S.Poly.)(t_s): LS^0(-delta1, t_s) --------------------------------
    delta1 = float(kernel.small_exponent)
    c_log = np.array([_ratio_constant(logs, logw, delta1, j) for j in range(len(grid))])
    ok = c_log >= math.log(c_floor)
    if ok[0]:
        j_star = len(grid) - 1 if ok.all() else max(0, int(np.nonzero(~ok)[0][0]) - 1)
        t_s = float(grid[j_star])
        empirical = True
        if isinstance(kernel, Truncated) or (
            isinstance(kernel, Tabulated) and kernel.tail == "zero"
        ):
            t_f = end
            if t_s > t_f / 2.0:
                t_s, empirical = t_f / 2.0, False
                j_star = int(np.searchsorted(grid, t_s, side="right") - 1)
        report.spoly = {
            "t_s": t_s,
            "delta1": delta1,
            "c": math.exp(_ratio_constant(logs, logw, delta1, j_star)),
            "empirical": empirical,
        }

    # ---- (L.Poly.): LS^inf(-delta2, 1) -------------------------------------
    i1 = int(np.searchsorted(grid, 1.0))
    if i1 < len(grid) - 4 and np.all(w[i1:] > 0.0):
        slopes = -np.diff(logw[i1:]) / np.diff(logs[i1:])
        delta2 = float(np.max(slopes))
        if 0.0 < delta2 <= 25.0:
            y = logw[i1:] + delta2 * logs[i1:]
            c2 = float(np.exp(np.min(y - np.maximum.accumulate(y))))
            if c2 >= c_floor:
                report.lpoly = {"delta2": delta2, "c": c2}

    # ---- (Sub.)(beta, theta) ------------------------------------------------
    if isinstance(kernel, Subexp):
        tgrid = grid[grid >= 1.0]
        wt = kernel.w(tgrid)
        pos = wt > 0.0
        # compared in log space so that underflowed tail values pass trivially
        lhs = np.log(wt[pos])
        rhs = math.log(kernel.c0) - kernel.theta * tgrid[pos] ** kernel.beta
        if np.all(lhs <= rhs + 1e-9):
            report.sub = {"beta": kernel.beta, "theta": kernel.theta, "c0": kernel.c0}

    # ---- (Trunc.)(t_f) -------------------------------------------------------
    if math.isfinite(end):
        t_f = float(end)
        pts = np.linspace(t_f / 4.0, t_f, 33)[:-1]
        try:
            sec = kernel.w(pts) / (t_f - pts)  # secants anchored at (t_f, 0)
            k_lo, k_hi = float(np.min(sec)), float(np.max(sec))
            report.trunc = {"t_f": t_f, "K_lo": k_lo, "K_hi": k_hi}
            if report.spoly is not None:
                report.trunc["delta3"] = report.spoly["delta1"]
            report.evidence["trunc_secants"] = {"n": len(pts)}
        except AtomError:
            report.diagnostics.append(
                "insufficient resolution: cannot probe bi-Lipschitz window of tabulated kernel"
            )

    return report
