"""Convergence rules for series with recursively defined terms.

Each criterion is an explicit rule producing a Verdict that names the rule
and its numeric witnesses. The `analyze` pipeline wires them together:
hypothesis validation, the derivative rule, the limit-exponent rule for the
boundary derivative case, majorant comparison when the derivative does not
stabilize, the signed-mode rules, and an empirical orbit cross-check.

Numeric limits are declared by a fixed-window stabilization rule: the tail
of a sample sequence on the geometric grid counts as a limit when its
spread is below tolerance; a one-directional tail is extrapolated with a
single Richardson-style step; anything else counts as oscillation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import mpmath

from .estimate import (
    AsymptoticFit,
    MIN_WINDOW_TERMS,
    SumEstimate,
    fit_power_law,
    sum_estimate,
)
from .expr import (
    DEFAULT_PRECISION,
    EvalDomainError,
    FunctionDef,
    TaylorDef,
    context,
    evaluator,
    parse,
    taylor_polynomial,
)
from .grids import GridSpec, PROBE_GRID, validation_grid
from .orbit import (
    HYPOTHESIS_VIOLATION,
    HypothesisReport,
    Mode,
    Orbit,
    iterate,
    validate_hypotheses,
    validated_region,
)

# stabilization rule constants
STABLE_WINDOW = 8
REL_TOL = "1e-6"
ABS_TOL = "1e-30"
ZERO_FRACTION = "0.3"  # extrapolated limit below this share of the tail value counts as zero

# rule margins
DERIVATIVE_MARGIN = "1e-4"
EXPONENT_MARGIN = "1e-4"
ABS_BOUND_MARGIN = "1e-4"

# exponent search
SEARCH_RANGE = ("0.01", "4")
BISECT_ITERATIONS = 40
CONFIRM_REL_TOL = "1e-3"
CANCELLATION_HEADROOM = 12

# built-in majorant search grids
LINEAR_C_GRID = [
    "0.1", "0.15", "0.2", "0.25", "0.3", "0.35", "0.4", "0.45", "0.5",
    "0.55", "0.6", "0.65", "0.7", "0.75", "0.8", "0.85", "0.9", "0.95",
]
POWERLAW_A_GRID = ["0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"]
POWERLAW_C_GRID = ["0.25", "0.5", "1", "2", "4"]
SNAP_MAX_DENOMINATOR = 24
SNAP_SLACK = "0.05"

CONVERGENT = "convergent"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"

DERIVATIVE_RULE = "DerivativeRule"
LIMIT_EXPONENT_RULE = "LimitExponentRule"
ANALYTIC_RULE = "AnalyticRule"
MAJORANT_RULE = "MajorantRule"
ALTERNATING_RULE = "AlternatingRule"
ABSOLUTE_BOUND_RULE = "AbsoluteBoundRule"

VALUE = "value"
DNE = "dne"
OUT_OF_RANGE = "out_of_range"

FINITE_NONZERO = "finite_nonzero"
TENDS_TO_ZERO = "tends_to_zero"
TENDS_TO_INFINITY = "tends_to_infinity"
OSCILLATES = "oscillates"


class PrecisionGuardError(ArithmeticError):
    """Raised instead of returning noise when cancellation eats the digits."""


class AnalyticRuleError(ValueError):
    """A hypothesis of the analytic divergence rule fails."""


class AnalysisError(ValueError):
    """The pipeline cannot proceed (bad seed, failed hypotheses, ...)."""


@dataclass
class Verdict:
    conclusion: str
    rule: Optional[str]
    witnesses: dict
    notes: List[str]

    def __post_init__(self):
        if (self.conclusion == INCONCLUSIVE) != (self.rule is None):
            raise ValueError("inconclusive verdicts carry no rule, decisive ones must")


@dataclass
class DerivativeEstimate:
    """Estimate of f'(0) from samples of f(x)/x on a descending grid.

    kind is "value" when the sample tail stabilizes, "dne" with the observed
    band [band_low, band_high] when it does not, or "out_of_range" when a
    stable value contradicts the decay hypotheses.
    """

    kind: str
    c: Optional[object]
    band: Optional[Tuple]
    samples: List[Tuple]
    grid: GridSpec


@dataclass
class LimitProbe:
    """Samples of the quotient (x^a - f(x)^a) / (x^a * f(x)^a) and their
    classified tail behavior; L is set for the finite_nonzero verdict and
    `stabilized` records whether it came from a stable window rather than
    extrapolation."""

    a: object
    samples: List[Tuple]
    verdict: str
    L: Optional[object]
    stabilized: bool


@dataclass
class ExponentSearchResult:
    found: bool
    fit: Optional[AsymptoticFit]
    probe: Optional[LimitProbe]
    note: str


@dataclass(frozen=True)
class MajorantSpec:
    """A candidate dominating function m with a known-convergent series.

    family "linear" is c*x with 0 < c < 1; family "powerlaw" is
    x / (1 + c*x^a)^(1/a) with 0 < a < 1, c > 0; family "user" wraps an
    arbitrary expression and needs a monotonicity check plus a separate
    convergence certificate before it can be used.
    """

    family: str
    label: str
    fn: FunctionDef
    c_text: Optional[str] = None
    a_text: Optional[str] = None
    monotone_delta: Optional[object] = None  # None means unchecked

    @staticmethod
    def linear(c_text: str, ctx) -> "MajorantSpec":
        from .expr import parse_constant

        c = parse_constant(c_text, ctx)
        if not 0 < c < 1:
            raise ValueError("linear majorant needs c in (0, 1)")
        return MajorantSpec("linear", f"linear:{c_text}", parse(f"({c_text}) * x"), c_text=c_text)

    @staticmethod
    def powerlaw(a_text: str, c_text: str, ctx) -> "MajorantSpec":
        from .expr import parse_constant

        a = parse_constant(a_text, ctx)
        c = parse_constant(c_text, ctx)
        if not 0 < a < 1:
            raise ValueError("powerlaw majorant needs a in (0, 1)")
        if not c > 0:
            raise ValueError("powerlaw majorant needs c > 0")
        fn = parse(f"x / (1 + ({c_text}) * x ^ ({a_text})) ^ (1 / ({a_text}))")
        return MajorantSpec(
            "powerlaw", f"powerlaw:a={a_text},c={c_text}", fn, c_text=c_text, a_text=a_text
        )

    @staticmethod
    def user(fdef: FunctionDef) -> "MajorantSpec":
        return MajorantSpec("user", f"fn:{fdef.source_text}", fdef)

    @property
    def known_convergent(self) -> bool:
        # linear is geometric; the powerlaw family converges for a < 1
        return self.family in ("linear", "powerlaw")


def _classify_tail(values, ctx, rel_tol, abs_tol, window=STABLE_WINDOW):
    """Classify the tail of a sample sequence ordered toward the limit.

    Returns (kind, value): ("stable", median), ("stable_zero", median)
    when only the absolute tolerance holds (the window sits at zero scale),
    ("finite", extrapolated), ("to_zero", None), ("to_infinity", None), or
    ("oscillates", None).
    """
    if len(values) < 2 * window:
        raise ValueError(f"need at least {2 * window} samples for the stabilization rule")
    tail = values[-window:]
    median = sorted(tail)[window // 2]
    spread = max(tail) - min(tail)
    if spread < rel_tol * abs(median):
        return "stable", median
    if spread < abs_tol:
        return "stable_zero", median
    t2 = values[-2 * window:]
    steps = [b - a for a, b in zip(t2, t2[1:])]
    increasing = all(s > 0 for s in steps)
    decreasing = all(s < 0 for s in steps)
    if not (increasing or decreasing):
        return "oscillates", None
    rho = steps[-1] / steps[-2]
    if rho >= 1:
        if increasing:
            return "to_infinity", None
        return "oscillates", None
    limit = t2[-1] + steps[-1] * rho / (1 - rho)
    if decreasing and limit < ctx.mpf(ZERO_FRACTION) * t2[-1]:
        return "to_zero", None
    return "finite", limit


def estimate_derivative_at_zero(
    f: FunctionDef,
    grid: Optional[GridSpec] = None,
    mode: Mode = Mode.POSITIVE,
    precision: int = DEFAULT_PRECISION,
) -> DerivativeEstimate:
    """Sample f(x)/x on a geometric grid descending toward zero.

    A stable tail gives Value(c); anything else gives the observed band
    over all samples, which is always reportable. A stable c outside the
    admissible range (0 <= c < 1 in positive mode, |c| < 1 in signed mode,
    up to margin) is flagged out_of_range.
    """
    grid = grid or PROBE_GRID
    ctx = context(precision)
    fn = evaluator(f, ctx)
    margin = ctx.mpf(DERIVATIVE_MARGIN)
    samples = [(x, fn(x) / x) for x in grid.points(ctx)]
    values = [v for _, v in samples]
    kind, value = _classify_tail(values, ctx, ctx.mpf(REL_TOL), ctx.mpf(ABS_TOL))
    if kind in ("stable", "stable_zero"):
        c = value
        if mode is Mode.POSITIVE:
            bad = c < -margin or c > 1 + margin
        else:
            bad = abs(c) > 1 + margin
        if bad:
            return DerivativeEstimate(OUT_OF_RANGE, c, None, samples, grid)
        return DerivativeEstimate(VALUE, c, None, samples, grid)
    return DerivativeEstimate(DNE, None, (min(values), max(values)), samples, grid)


def derivative_rule(est: DerivativeEstimate, margin=None) -> Verdict:
    """Convergent when f'(0) = c is clearly below 1; route onward otherwise.

    This rule never concludes divergence: c = 1 is exactly the regime the
    limit-exponent rule decides, and an unstable derivative leaves the
    majorant comparison as the remaining tool.
    """
    margin = mpmath.mpf(DERIVATIVE_MARGIN if margin is None else margin)
    if est.kind == OUT_OF_RANGE:
        return Verdict(
            INCONCLUSIVE,
            None,
            {},
            [
                f"estimated derivative c = {mpmath.nstr(est.c, 12)} contradicts the"
                " decay hypotheses (expected 0 <= c < 1); check the function"
            ],
        )
    if est.kind == DNE:
        lo, hi = est.band
        return Verdict(
            INCONCLUSIVE,
            None,
            {},
            [
                "derivative at zero does not stabilize; observed band"
                f" [{mpmath.nstr(lo, 12)}, {mpmath.nstr(hi, 12)}]",
                "route: majorant comparison",
            ],
        )
    c = est.c
    if c < -margin:
        return Verdict(
            INCONCLUSIVE,
            None,
            {},
            ["negative derivative at zero; use the signed-mode analysis"],
        )
    if abs(c - 1) <= margin:
        return Verdict(
            INCONCLUSIVE,
            None,
            {},
            [
                f"derivative at zero is 1 within margin {mpmath.nstr(margin, 6)}",
                "route: limit-exponent rule",
            ],
        )
    if c > 1:
        return Verdict(
            INCONCLUSIVE,
            None,
            {},
            [
                f"estimated derivative c = {mpmath.nstr(c, 12)} exceeds 1;"
                " the terms cannot decay, check the function"
            ],
        )
    return Verdict(
        CONVERGENT,
        DERIVATIVE_RULE,
        {"c": c},
        [f"f'(0) = {mpmath.nstr(c, 12)} < 1 gives eventual geometric decay"],
    )


def probe_limit(
    f: FunctionDef,
    a,
    grid: Optional[GridSpec] = None,
    precision: int = DEFAULT_PRECISION,
    rel_tol: Optional[str] = None,
) -> LimitProbe:
    """Sample L_a(x) = (x^a - f(x)^a) / (x^a * f(x)^a) toward zero.

    Guards against catastrophic cancellation: when x^a and f(x)^a agree in
    more digits than the working precision can spare, the probe raises
    rather than classifying noise.
    """
    grid = grid or PROBE_GRID
    ctx = context(precision)
    a = ctx.convert(a)
    if not a > 0:
        raise ValueError("exponent a must be positive")
    fn = evaluator(f, ctx)
    # evaluation runs at ctx.dps digits; the quotient must keep at least
    # CANCELLATION_HEADROOM trustworthy digits after the subtraction
    limit = ctx.dps - CANCELLATION_HEADROOM
    samples = []
    for x in grid.points(ctx):
        fx = fn(x)
        if not fx > 0:
            raise ValueError(
                f"f must be positive on the probe grid; f({mpmath.nstr(x, 12)})"
                f" = {mpmath.nstr(fx, 12)}"
            )
        xa = ctx.power(x, a)
        fa = ctx.power(fx, a)
        diff = xa - fa
        if diff == 0 or -ctx.log10(abs(diff) / xa) > limit:
            raise PrecisionGuardError(
                f"x^a and f(x)^a agree in more than {limit} digits at"
                f" x = {mpmath.nstr(x, 12)}, a = {mpmath.nstr(a, 12)};"
                f" rerun with precision above {precision}"
            )
        samples.append((x, diff / (xa * fa)))
    values = [v for _, v in samples]
    tol = ctx.mpf(REL_TOL if rel_tol is None else rel_tol)
    kind, value = _classify_tail(values, ctx, tol, ctx.mpf(ABS_TOL))
    if kind == "stable" and value > 0:
        return LimitProbe(a, samples, FINITE_NONZERO, value, True)
    if kind == "finite" and value > 0:
        return LimitProbe(a, samples, FINITE_NONZERO, value, False)
    if kind in ("stable_zero", "to_zero"):
        return LimitProbe(a, samples, TENDS_TO_ZERO, None, False)
    if kind == "to_infinity":
        return LimitProbe(a, samples, TENDS_TO_INFINITY, None, False)
    return LimitProbe(a, samples, OSCILLATES, None, False)


def _fit_from_probe(probe: LimitProbe, ctx) -> AsymptoticFit:
    a = probe.a
    L = probe.L
    k = ctx.power(L, -1 / a)
    tail = [v for _, v in probe.samples][-STABLE_WINDOW:]
    median = sorted(tail)[STABLE_WINDOW // 2]
    residual = (max(tail) - min(tail)) / abs(median)
    window = (len(probe.samples) - STABLE_WINDOW, len(probe.samples) - 1)
    return AsymptoticFit(a, k, residual, window)


def search_exponent(
    f: FunctionDef,
    a_range: Tuple[str, str] = SEARCH_RANGE,
    grid: Optional[GridSpec] = None,
    precision: int = DEFAULT_PRECISION,
) -> ExponentSearchResult:
    """Bisect for the exponent where the quotient probe turns finite.

    Below the true exponent the quotient tends to zero, above it to
    infinity; the verdict-valued bisection narrows the transition and a
    relaxed-tolerance probe confirms a finite nonzero limit there. The
    returned fit carries a and k = L^(-1/a) with the probe attached; the
    fit window refers to probe-grid indices. NotFound (found=False) means
    no transition lies in range or the probe oscillates near it.
    """
    ctx = context(precision)
    lo = ctx.mpf(a_range[0])
    hi = ctx.mpf(a_range[1])
    if not 0 < lo < hi:
        raise ValueError("need 0 < a_lo < a_hi")

    def probe(a, tol=None):
        return probe_limit(f, a, grid, precision, rel_tol=tol)

    def confirm(a):
        p = probe(a, CONFIRM_REL_TOL)
        if p.verdict == FINITE_NONZERO and p.stabilized:
            return ExponentSearchResult(True, _fit_from_probe(p, ctx), p, "")
        return ExponentSearchResult(
            False, None, p,
            f"confirmation probe did not stabilize at a = {mpmath.nstr(a, 12)}",
        )

    p_lo = probe(lo)
    if p_lo.verdict == OSCILLATES:
        return ExponentSearchResult(
            False, None, p_lo, "quotient oscillates at the smallest exponent in range"
        )
    if p_lo.verdict == TENDS_TO_INFINITY:
        return ExponentSearchResult(
            False, None, p_lo,
            "quotient blows up at every exponent in range;"
            " the terms decay faster than any power law here",
        )
    if p_lo.verdict == FINITE_NONZERO:
        return confirm(lo)

    p_hi = probe(hi)
    if p_hi.verdict == OSCILLATES:
        return ExponentSearchResult(
            False, None, p_hi, "quotient oscillates at the largest exponent in range"
        )
    if p_hi.verdict == TENDS_TO_ZERO:
        return ExponentSearchResult(
            False, None, p_hi,
            "no transition in range; the decay exponent, if any, lies above it",
        )
    if p_hi.verdict == FINITE_NONZERO:
        return confirm(hi)

    mid = (lo + hi) / 2
    for _ in range(BISECT_ITERATIONS):
        mid = (lo + hi) / 2
        p = probe(mid)
        if p.verdict == TENDS_TO_ZERO:
            lo = mid
        elif p.verdict == TENDS_TO_INFINITY:
            hi = mid
        elif p.verdict == OSCILLATES:
            return ExponentSearchResult(
                False, None, p, "quotient oscillates near the transition exponent"
            )
        else:
            if p.stabilized:
                return ExponentSearchResult(True, _fit_from_probe(p, ctx), p, "")
            break
    return confirm((lo + hi) / 2)


def limit_exponent_rule(fit: AsymptoticFit, margin=None) -> Verdict:
    """Divergent when the decay exponent a is at least 1, convergent below.

    The boundary case within margin of 1 is reported divergent with a note,
    since a = 1 itself diverges.
    """
    margin = mpmath.mpf(EXPONENT_MARGIN if margin is None else margin)
    witnesses = {"a": fit.a, "k": fit.k}
    a_text = mpmath.nstr(fit.a, 12)
    if fit.a >= 1 + margin:
        return Verdict(
            DIVERGENT, LIMIT_EXPONENT_RULE, witnesses,
            [f"terms decay like n^(-1/a) with a = {a_text} >= 1"],
        )
    if fit.a <= 1 - margin:
        return Verdict(
            CONVERGENT, LIMIT_EXPONENT_RULE, witnesses,
            [f"terms decay like n^(-1/a) with a = {a_text} < 1"],
        )
    return Verdict(
        DIVERGENT, LIMIT_EXPONENT_RULE, witnesses,
        [
            f"a = {a_text} is within margin {mpmath.nstr(margin, 6)} of the boundary;"
            " the boundary exponent a = 1 diverges"
        ],
    )


def analytic_rule(t: TaylorDef) -> Verdict:
    """Divergence from Taylor data a1 = 1 with the first nonzero higher
    coefficient negative (so that f(x) < x holds near zero).

    Raises AnalyticRuleError when a hypothesis fails; a1 != 1 routes to the
    derivative rule with c = a1 instead.
    """
    ctx = context(DEFAULT_PRECISION)
    coeffs = [c if hasattr(c, "_mpf_") else ctx.convert(c) for c in t.coefficients]
    a1 = coeffs[0]
    if a1 != 1:
        raise AnalyticRuleError(
            f"leading coefficient a1 = {mpmath.nstr(a1, 12)} is not 1; the analytic"
            " divergence rule does not apply, use the derivative rule with c = a1"
        )
    for index, c in enumerate(coeffs[1:], start=2):
        if c == 0:
            continue
        if c > 0:
            raise AnalyticRuleError(
                f"first nonzero higher coefficient a{index} = {mpmath.nstr(c, 12)}"
                " is positive, so f(x) < x fails near zero"
            )
        return Verdict(
            DIVERGENT,
            ANALYTIC_RULE,
            {"coefficient_index": index, "coefficient_value": c},
            [
                f"a1 = 1 and the first nonzero higher coefficient a{index} ="
                f" {mpmath.nstr(c, 12)} is negative; the generated series diverges"
            ],
        )
    raise AnalyticRuleError(
        "all higher coefficients are zero; f is the identity and violates f(x) < x"
    )


def check_monotone(
    f: FunctionDef,
    interval: Optional[Tuple] = None,
    grid: Optional[GridSpec] = None,
    precision: int = DEFAULT_PRECISION,
) -> Tuple[bool, object]:
    """Sample consecutive grid pairs for monotonicity near zero.

    Returns (monotone, delta) where delta is the largest sampled point
    below every violation, so f is grid-certified nondecreasing on
    (0, delta]. Sampling only; a pass is evidence, not proof.
    """
    ctx = context(precision)
    fn = evaluator(f, ctx)
    points = sorted((grid or validation_grid()).points(ctx))
    if interval is not None:
        lo, hi = ctx.convert(interval[0]), ctx.convert(interval[1])
        points = [p for p in points if lo <= p <= hi]
    if len(points) < 2:
        raise ValueError("interval contains fewer than two grid points")
    values = [fn(p) for p in points]
    delta = points[0]
    for i in range(len(points) - 1):
        if values[i + 1] < values[i]:
            return False, delta
        delta = points[i + 1]
    return True, delta


def majorant_rule(
    g: FunctionDef,
    m: MajorantSpec,
    grid: Optional[GridSpec] = None,
    precision: int = DEFAULT_PRECISION,
    x0=None,
    user_certified: bool = False,
) -> Verdict:
    """Convergence by comparison: 0 < g(x) <= m(x) < x on the grid with m
    monotone and m's own series convergent.

    The built-in families are monotone by construction; a user majorant is
    checked for monotonicity (delta must cover x0 when given) and needs
    user_certified=True, meaning its series was analyzed separately. A
    domination failure yields Inconclusive with the witness point, never
    Divergent: comparison gives one-sided information.
    """
    ctx = context(precision)
    grid = grid or validation_grid()
    notes = []
    monotone, delta = check_monotone(m.fn, grid=grid, precision=precision)
    witnesses = {"majorant": m.label, "delta": delta}
    if m.family == "user":
        required = abs(ctx.convert(x0)) if x0 is not None else None
        if not monotone and (required is None or delta < required):
            return Verdict(
                INCONCLUSIVE, None, {},
                [
                    "majorant is not monotone on the required region;"
                    f" certified only on (0, {mpmath.nstr(delta, 12)}]"
                ],
            )
        if not user_certified:
            return Verdict(
                INCONCLUSIVE, None, {},
                [
                    "the majorant's own series has no convergence certificate;"
                    " analyze the majorant first"
                ],
            )
        notes.append(
            f"user majorant monotone on (0, {mpmath.nstr(delta, 12)}] by sampling"
        )
    gf = evaluator(g, ctx)
    mf = evaluator(m.fn, ctx)
    margin = None
    for x in grid.points(ctx):
        try:
            gx = gf(x)
            mx = mf(x)
        except EvalDomainError as err:
            return Verdict(
                INCONCLUSIVE, None, {},
                [f"evaluation failed during the comparison scan: {err}"],
            )
        if not (0 < gx <= mx < x):
            return Verdict(
                INCONCLUSIVE, None, {},
                [
                    f"domination fails at x = {mpmath.nstr(x, 12)}:"
                    f" g(x) = {mpmath.nstr(gx, 12)}, m(x) = {mpmath.nstr(mx, 12)}"
                ],
            )
        gap = mx - gx
        if margin is None or gap < margin:
            margin = gap
    witnesses["margin"] = margin
    if m.family == "linear":
        notes.append("majorant series is geometric, hence convergent")
    elif m.family == "powerlaw":
        notes.append("majorant series converges (decay exponent below 1)")
    notes.append(f"grid domination margin min(m - g) = {mpmath.nstr(margin, 12)}")
    return Verdict(CONVERGENT, MAJORANT_RULE, witnesses, notes)


def signed_rule(
    f: FunctionDef,
    grid: Optional[GridSpec] = None,
    precision: int = DEFAULT_PRECISION,
    margin=None,
) -> Verdict:
    """Signed-mode criteria under 0 < |f(x)| < |x|.

    x * f(x) < 0 at every sampled point (both signs) forces alternating
    terms with decreasing magnitudes: convergent. Otherwise a uniform bound
    sup |f(x)| / |x| <= c < 1 gives absolute convergence. Anything else is
    inconclusive; nothing general holds in the open signed regime.
    """
    ctx = context(precision)
    margin = ctx.mpf(ABS_BOUND_MARGIN if margin is None else margin)
    fn = evaluator(f, ctx)
    points = []
    for p in (grid or validation_grid()).points(ctx):
        points.extend((p, -p))
    alternating = True
    sup = None
    for x in points:
        y = fn(x)
        if not x * y < 0:
            alternating = False
        ratio = abs(y) / abs(x)
        if sup is None or ratio > sup:
            sup = ratio
    if alternating:
        return Verdict(
            CONVERGENT,
            ALTERNATING_RULE,
            {"sign_pattern": "x*f(x) < 0 at every sampled point"},
            ["terms alternate in sign with decreasing magnitudes"],
        )
    if sup <= 1 - margin:
        return Verdict(
            CONVERGENT,
            ABSOLUTE_BOUND_RULE,
            {"c": sup},
            [f"sup |f(x)|/|x| = {mpmath.nstr(sup, 12)} < 1 on the grid:"
             " absolutely convergent"],
        )
    return Verdict(
        INCONCLUSIVE, None, {},
        [
            "mixed signs without a uniform contraction bound"
            f" (grid sup |f(x)|/|x| = {mpmath.nstr(sup, 12)});"
            " nothing further can be concluded in the signed regime"
        ],
    )


def _snap_rational(band_hi, ctx):
    """Smallest-denominator fraction p/q in [band_hi, band_hi + slack) with
    p/q < 1; gives a clean linear ratio just above the observed band."""
    slack = ctx.mpf(SNAP_SLACK)
    for q in range(1, SNAP_MAX_DENOMINATOR + 1):
        p = int(ctx.ceil(band_hi * q))
        if p < 1 or p >= q:
            continue
        value = ctx.mpf(p) / q
        if value <= band_hi + slack:
            return p, q
    return None


def _majorant_candidates(ctx, band_hi=None):
    linear = [(ctx.mpf(c), c) for c in LINEAR_C_GRID]
    if band_hi is not None and band_hi < 1:
        snap = _snap_rational(band_hi, ctx)
        if snap is not None:
            p, q = snap
            text = f"{p}/{q}"
            value = ctx.mpf(p) / q
            if all(v != value for v, _ in linear):
                linear.append((value, text))
    specs = []
    for _, text in sorted(linear, key=lambda item: item[0]):
        specs.append(MajorantSpec.linear(text, ctx))
    for c_text in POWERLAW_C_GRID:
        for a_text in POWERLAW_A_GRID:
            specs.append(MajorantSpec.powerlaw(a_text, c_text, ctx))
    return specs


@dataclass
class AnalyzerConfig:
    precision: int = DEFAULT_PRECISION
    mode: str = "auto"  # auto | positive | signed
    max_n: int = 10**6
    floor: str = "1e-40"
    probe_grid: GridSpec = field(default_factory=GridSpec)
    cross_check_n: int = 10**4  # cap for the empirical cross-check orbit


@dataclass
class AnalysisReport:
    function: FunctionDef
    source: str
    x0: object
    mode: Mode
    precision: int
    verdict: Verdict
    derivative: Optional[DerivativeEstimate]
    search: Optional[ExponentSearchResult]
    fit: Optional[AsymptoticFit]
    orbit_result: Optional[Orbit]
    sum: Optional[SumEstimate]
    hypothesis: HypothesisReport
    warnings: List[str]


def detect_mode(fn, points) -> Mode:
    """Signed when f goes negative anywhere on the sampled positive points."""
    for p in points:
        try:
            if fn(p) < 0:
                return Mode.SIGNED
        except EvalDomainError:
            continue
    return Mode.POSITIVE


def _violation_text(x, y) -> str:
    shown = "not evaluable" if y is None else f"f(x) = {mpmath.nstr(y, 12)}"
    return f"x = {mpmath.nstr(x, 12)}: {shown}"


def analyze(f, x0, config: Optional[AnalyzerConfig] = None) -> AnalysisReport:
    """Run the full decision pipeline on a FunctionDef or TaylorDef.

    Stages: hypothesis validation with mode detection, the signed rules or
    the derivative rule, routing to the limit-exponent or majorant rules,
    then an empirical orbit cross-check whose fit is compared against the
    verdict. Raises AnalysisError when the seed lies outside the region
    where the hypotheses hold.
    """
    cfg = config or AnalyzerConfig()
    ctx = context(cfg.precision)
    taylor = None
    if isinstance(f, TaylorDef):
        taylor = f
        fdef = taylor_polynomial(f, ctx)
    else:
        fdef = f
    x0 = ctx.convert(x0)
    if x0 == 0:
        raise AnalysisError("x0 must be nonzero")

    start_text = "1" if abs(x0) <= 1 else mpmath.nstr(abs(x0), cfg.precision)
    vgrid = validation_grid(start=start_text)
    fn = evaluator(fdef, ctx)
    if cfg.mode == "positive":
        mode = Mode.POSITIVE
    elif cfg.mode == "signed":
        mode = Mode.SIGNED
    else:
        mode = detect_mode(fn, vgrid.points(ctx))

    hypothesis = validate_hypotheses(fdef, mode, vgrid, cfg.precision)
    region = validated_region(hypothesis)
    if region is None:
        first = "; ".join(_violation_text(x, y) for x, y in hypothesis.violations[:3])
        raise AnalysisError(
            f"the decay hypothesis fails at every sampled scale ({first})"
        )
    if abs(x0) > region:
        raise AnalysisError(
            f"x0 = {mpmath.nstr(x0, 12)} lies outside the validated region"
            f" (0, {mpmath.nstr(region, 12)}]"
        )
    warnings = []
    work_grid = vgrid
    if not hypothesis.passed:
        shown = "; ".join(_violation_text(x, y) for x, y in hypothesis.violations[:3])
        more = len(hypothesis.violations) - 3
        suffix = f" (+{more} more)" if more > 0 else ""
        warnings.append(
            "hypothesis violations above the validated region"
            f" (0, {mpmath.nstr(region, 12)}]: {shown}{suffix}"
        )
        # rule scans must stay where the hypotheses hold
        work_grid = validation_grid(start=mpmath.nstr(region, cfg.precision))
    if region < ctx.mpf(cfg.probe_grid.start):
        warnings.append(
            "validated region is smaller than the probe grid start;"
            " derivative and limit probes may sample outside it"
        )

    derivative = estimate_derivative_at_zero(
        fdef, cfg.probe_grid, mode=mode, precision=cfg.precision
    )
    search = None
    verdict = None
    if mode is Mode.SIGNED:
        verdict = signed_rule(fdef, work_grid, cfg.precision)
    else:
        if taylor is not None and ctx.convert(taylor.coefficients[0]) == 1:
            try:
                verdict = analytic_rule(taylor)
            except AnalyticRuleError as err:
                warnings.append(f"analytic rule inapplicable: {err}")
        if verdict is None:
            verdict = derivative_rule(derivative)
            if verdict.conclusion == INCONCLUSIVE:
                routed = verdict.notes
                if derivative.kind == VALUE and abs(derivative.c - 1) <= ctx.mpf(
                    DERIVATIVE_MARGIN
                ):
                    search = search_exponent(
                        fdef, grid=cfg.probe_grid, precision=cfg.precision
                    )
                    if search.found:
                        verdict = limit_exponent_rule(search.fit)
                        verdict.notes = routed + verdict.notes
                    else:
                        verdict = Verdict(
                            INCONCLUSIVE, None, {},
                            routed + [f"exponent search: {search.note}"],
                        )
                elif derivative.kind == DNE:
                    band_hi = derivative.band[1]
                    for spec in _majorant_candidates(ctx, band_hi):
                        attempt = majorant_rule(
                            fdef, spec, work_grid, cfg.precision, x0=x0
                        )
                        if attempt.conclusion == CONVERGENT:
                            attempt.notes = routed + attempt.notes
                            verdict = attempt
                            break
                    else:
                        verdict = Verdict(
                            INCONCLUSIVE, None, {},
                            routed
                            + ["no built-in majorant dominates on the sampled grid"],
                        )

    orbit_result = iterate(
        fdef, x0, min(cfg.max_n, cfg.cross_check_n), cfg.floor, mode, cfg.precision
    )
    if orbit_result.status.kind == HYPOTHESIS_VIOLATION:
        warnings.append(f"orbit cross-check: {orbit_result.status.describe()}")
    fit = None
    if mode is Mode.POSITIVE and orbit_result.last_index >= 2 * MIN_WINDOW_TERMS:
        try:
            fit = fit_power_law(orbit_result)
        except ValueError:
            fit = None
    if fit is not None and fit.rejected:
        warnings.append(f"empirical fit: {fit.reason}")
    if fit is not None and not fit.rejected:
        a_text = mpmath.nstr(fit.a, 8)
        if verdict.conclusion == CONVERGENT and fit.a >= ctx.mpf("1.05"):
            warnings.append(
                f"empirical decay exponent a = {a_text} suggests divergence,"
                " conflicting with the rule verdict"
            )
        elif verdict.conclusion == DIVERGENT and fit.a <= ctx.mpf("0.95"):
            warnings.append(
                f"empirical decay exponent a = {a_text} suggests convergence,"
                " conflicting with the rule verdict"
            )
    sum_est = None
    if verdict.conclusion == CONVERGENT and mode is Mode.POSITIVE:
        try:
            sum_est = sum_estimate(
                orbit_result, fit if fit is not None and not fit.rejected else None
            )
        except ValueError:
            sum_est = None

    return AnalysisReport(
        function=fdef,
        source=fdef.source_text,
        x0=x0,
        mode=mode,
        precision=cfg.precision,
        verdict=verdict,
        derivative=derivative,
        search=search,
        fit=fit,
        orbit_result=orbit_result,
        sum=sum_est,
        hypothesis=hypothesis,
        warnings=warnings,
    )
