import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from recurseries.classify import (
    ABSOLUTE_BOUND_RULE,
    ALTERNATING_RULE,
    ANALYTIC_RULE,
    AnalysisError,
    AnalyticRuleError,
    AnalyzerConfig,
    CONVERGENT,
    DERIVATIVE_MARGIN,
    DERIVATIVE_RULE,
    DIVERGENT,
    DNE,
    DerivativeEstimate,
    INCONCLUSIVE,
    LIMIT_EXPONENT_RULE,
    MAJORANT_RULE,
    MajorantSpec,
    OUT_OF_RANGE,
    PrecisionGuardError,
    VALUE,
    Verdict,
    _majorant_candidates,
    _snap_rational,
    analytic_rule,
    analyze,
    check_monotone,
    derivative_rule,
    detect_mode,
    estimate_derivative_at_zero,
    limit_exponent_rule,
    majorant_rule,
    probe_limit,
    search_exponent,
    signed_rule,
)
from recurseries.estimate import AsymptoticFit
from recurseries.expr import TaylorDef, context, evaluator, parse, parse_constant
from recurseries.grids import GridSpec, PROBE_GRID, validation_grid
from recurseries.orbit import Mode

from corpus import ALL, DECISIVE

CTX = context(64)
MARGIN = CTX.mpf(DERIVATIVE_MARGIN)

OSCILLATORY = "x*(1/2 + 1/3*sin(1/x))"


def test_verdict_shape_is_enforced():
    with pytest.raises(ValueError):
        Verdict(INCONCLUSIVE, DERIVATIVE_RULE, {}, [])
    with pytest.raises(ValueError):
        Verdict(CONVERGENT, None, {}, [])
    Verdict(INCONCLUSIVE, None, {}, [])  # fine
    Verdict(DIVERGENT, LIMIT_EXPONENT_RULE, {}, [])  # fine


def test_derivative_estimate_stable_values():
    est = estimate_derivative_at_zero(parse("x/2"))
    assert est.kind == VALUE
    assert est.c == CTX.mpf("0.5")

    est = estimate_derivative_at_zero(parse("x/(1+x)"))
    assert est.kind == VALUE
    assert abs(est.c - 1) < CTX.mpf("1e-8")

    est = estimate_derivative_at_zero(parse("0.9*(x/(1+x))"))
    assert est.kind == VALUE
    assert abs(est.c - CTX.mpf("0.9")) < CTX.mpf("1e-8")


def test_derivative_estimate_band():
    est = estimate_derivative_at_zero(parse(OSCILLATORY))
    assert est.kind == DNE
    lo, hi = est.band
    assert abs(lo - CTX.mpf(1) / 6) < CTX.mpf("0.02")
    assert abs(hi - CTX.mpf(5) / 6) < CTX.mpf("0.02")


def test_derivative_estimate_out_of_range():
    est = estimate_derivative_at_zero(parse("2*x"))
    assert est.kind == OUT_OF_RANGE
    assert est.c == 2

    # a stable negative quotient is out of range in positive mode only
    est = estimate_derivative_at_zero(parse("-x/2"))
    assert est.kind == OUT_OF_RANGE
    est = estimate_derivative_at_zero(parse("-x/2"), mode=Mode.SIGNED)
    assert est.kind == VALUE
    assert est.c == CTX.mpf("-0.5")


def synth_estimate(kind, c=None, band=None):
    return DerivativeEstimate(kind, c, band, [], PROBE_GRID)


def test_derivative_rule_branches():
    v = derivative_rule(synth_estimate(VALUE, CTX.mpf("0.5")))
    assert (v.conclusion, v.rule) == (CONVERGENT, DERIVATIVE_RULE)
    assert v.witnesses == {"c": CTX.mpf("0.5")}

    v = derivative_rule(synth_estimate(VALUE, CTX.mpf("1.00005")))
    assert v.conclusion == INCONCLUSIVE
    assert any("route: limit-exponent rule" in n for n in v.notes)

    v = derivative_rule(synth_estimate(DNE, band=(CTX.mpf("0.2"), CTX.mpf("0.8"))))
    assert v.conclusion == INCONCLUSIVE
    assert any("route: majorant comparison" in n for n in v.notes)

    v = derivative_rule(synth_estimate(OUT_OF_RANGE, CTX.mpf(2)))
    assert v.conclusion == INCONCLUSIVE
    assert any("contradicts" in n for n in v.notes)

    v = derivative_rule(synth_estimate(VALUE, CTX.mpf("-0.5")))
    assert v.conclusion == INCONCLUSIVE
    assert any("signed-mode" in n for n in v.notes)


@settings(max_examples=200, deadline=None)
@given(c=st.floats(min_value=-2, max_value=3, allow_nan=False))
def test_derivative_rule_never_divergent(c):
    # this rule can only certify convergence; c >= 1 - margin never decides
    cm = CTX.mpf(repr(c))
    v = derivative_rule(synth_estimate(VALUE, cm))
    assert v.conclusion != DIVERGENT
    if v.conclusion == CONVERGENT:
        assert cm < 1 - MARGIN
        assert cm >= -MARGIN
    else:
        assert v.rule is None


IDENTITY_PAIRS = [(a, c) for a in ("0.25", "0.5", "0.75") for c in ("0.5", "1", "2")]


@pytest.mark.parametrize("a_text,c_text", IDENTITY_PAIRS)
def test_probe_limit_exact_on_family_members(a_text, c_text):
    # f = x/(1+c*x^a)^(1/a) makes the probed quotient identically c
    spec = MajorantSpec.powerlaw(a_text, c_text, CTX) if CTX.mpf(c_text) > 0 else None
    probe = probe_limit(spec.fn, a_text)
    c = CTX.mpf(c_text)
    assert probe.verdict == "finite_nonzero"
    assert probe.stabilized
    assert abs(probe.L / c - 1) < CTX.mpf("1e-20")
    for _, v in probe.samples:
        assert abs(v / c - 1) < CTX.mpf("1e-30")


def test_probe_limit_verdicts():
    # x/(1+x) probes exactly 1 at the true exponent, up to rounding
    probe = probe_limit(parse("x/(1+x)"), 1)
    assert probe.verdict == "finite_nonzero"
    assert probe.stabilized
    # the subtraction loses up to 30 digits at the grid bottom (x = 1e-30)
    assert all(abs(v - 1) < CTX.mpf("1e-40") for _, v in probe.samples)
    assert probe_limit(parse("x/(1+x)"), "0.5").verdict == "tends_to_zero"
    assert probe_limit(parse("x/(1+x)"), 2).verdict == "tends_to_infinity"
    assert probe_limit(parse("x/2"), 1).verdict == "tends_to_infinity"


def test_probe_limit_validation():
    with pytest.raises(ValueError):
        probe_limit(parse("x/(1+x)"), 0)
    with pytest.raises(ValueError):
        probe_limit(parse("-x/2"), 1)  # not positive on the grid


def test_probe_limit_cancellation_guard():
    # x - x^9 leaves x^a and f^a agreeing in far more digits than 64 can spare
    with pytest.raises(PrecisionGuardError, match="rerun with precision"):
        probe_limit(parse("x - x^9"), 1)


def test_search_exponent_sine():
    result = search_exponent(parse("sin(x)"))
    assert result.found
    assert abs(result.fit.a - 2) <= CTX.mpf("0.01")
    root3 = CTX.sqrt(3)
    assert abs(result.fit.k / root3 - 1) < CTX.mpf("0.02")


def test_search_exponent_harmonic_boundary():
    result = search_exponent(parse("x/(1+x)"))
    assert result.found
    assert abs(result.fit.a - 1) < CTX.mpf("1e-6")
    assert abs(result.fit.k - 1) < CTX.mpf("1e-4")
    verdict = limit_exponent_rule(result.fit)
    assert (verdict.conclusion, verdict.rule) == (DIVERGENT, LIMIT_EXPONENT_RULE)
    assert any("boundary" in n for n in verdict.notes)


def test_search_exponent_below_one():
    result = search_exponent(parse("x/(1+x^(1/2))^2"))
    assert result.found
    assert abs(result.fit.a - CTX.mpf("0.5")) < CTX.mpf("1e-6")
    verdict = limit_exponent_rule(result.fit)
    assert verdict.conclusion == CONVERGENT


def test_search_exponent_not_found():
    # geometric decay beats every power law: quotient blows up everywhere
    result = search_exponent(parse("x/2"))
    assert not result.found
    assert "blows up at every exponent" in result.note

    result = search_exponent(parse("0.9*(x/(1+x))"))
    assert not result.found
    assert "blows up at every exponent" in result.note

    # true exponent 5 sits above the scanned range
    shallow = GridSpec(start="1e-1", floor="1e-8", step_log10="-0.25")
    result = search_exponent(
        parse("x/(1+x^5)^(1/5)"), a_range=("1", "4"), grid=shallow
    )
    assert not result.found
    assert "no transition in range" in result.note


def test_search_exponent_range_validation():
    with pytest.raises(ValueError):
        search_exponent(parse("sin(x)"), a_range=("2", "1"))


def synth_fit(a_text):
    return AsymptoticFit(CTX.mpf(a_text), CTX.mpf(1), CTX.mpf("1e-9"), (0, 10))


def test_limit_exponent_rule_branches():
    v = limit_exponent_rule(synth_fit("1.5"))
    assert (v.conclusion, v.rule) == (DIVERGENT, LIMIT_EXPONENT_RULE)
    assert set(v.witnesses) == {"a", "k"}

    v = limit_exponent_rule(synth_fit("0.5"))
    assert v.conclusion == CONVERGENT

    v = limit_exponent_rule(synth_fit("1.00005"))
    assert v.conclusion == DIVERGENT
    assert any("boundary" in n for n in v.notes)


def test_analytic_rule_divergent():
    v = analytic_rule(TaylorDef((1, -1)))
    assert (v.conclusion, v.rule) == (DIVERGENT, ANALYTIC_RULE)
    assert v.witnesses["coefficient_index"] == 2
    assert v.witnesses["coefficient_value"] == -1

    coeffs = tuple(parse_constant(t, CTX) for t in ("1", "0", "-1/6"))
    v = analytic_rule(TaylorDef(coeffs))
    assert v.conclusion == DIVERGENT
    assert v.witnesses["coefficient_index"] == 3
    assert abs(v.witnesses["coefficient_value"] + CTX.mpf(1) / 6) < CTX.mpf("1e-60")


def test_analytic_rule_rejections():
    with pytest.raises(AnalyticRuleError, match="derivative rule"):
        analytic_rule(TaylorDef(("0.5", "-1")))
    with pytest.raises(AnalyticRuleError, match="positive"):
        analytic_rule(TaylorDef((1, 1)))
    with pytest.raises(AnalyticRuleError, match="identity"):
        analytic_rule(TaylorDef((1,)))
    with pytest.raises(AnalyticRuleError, match="identity"):
        analytic_rule(TaylorDef((1, 0, 0)))


def test_check_monotone():
    monotone, delta = check_monotone(parse("x/2"))
    assert monotone
    assert delta == 1

    monotone, delta = check_monotone(parse(OSCILLATORY))
    assert not monotone
    assert delta < CTX.mpf("1e-6")  # no useful certified region

    # x - x^2 increases only below 1/2
    monotone, _ = check_monotone(parse("x - x^2"), interval=("1e-6", "0.5"))
    assert monotone
    monotone, _ = check_monotone(parse("x - x^2"))
    assert not monotone

    with pytest.raises(ValueError):
        check_monotone(parse("x/2"), interval=("0.3", "0.30001"))


def test_majorant_rule_oscillatory():
    g = parse(OSCILLATORY)
    m = MajorantSpec.linear("5/6", CTX)
    v = majorant_rule(g, m)
    assert (v.conclusion, v.rule) == (CONVERGENT, MAJORANT_RULE)
    assert v.witnesses["majorant"] == "linear:5/6"
    assert v.witnesses["delta"] > 0
    assert 0 < v.witnesses["margin"] < CTX.mpf("1e-30")

    # 0.8 < 5/6 cannot dominate; the witness point is reported
    v = majorant_rule(g, MajorantSpec.linear("0.8", CTX))
    assert v.conclusion == INCONCLUSIVE
    assert "domination fails at x = 0.56234132519" in v.notes[0]


def test_majorant_rule_equality_is_allowed():
    v = majorant_rule(parse("x/2"), MajorantSpec.linear("0.5", CTX))
    assert v.conclusion == CONVERGENT
    assert v.witnesses["margin"] == 0


def test_majorant_rule_positive_margin():
    v = majorant_rule(parse("x/3"), MajorantSpec.linear("0.5", CTX))
    assert v.conclusion == CONVERGENT
    assert v.witnesses["margin"] > 0


def test_majorant_rule_powerlaw_cannot_cover_slower_decay():
    # near zero f/x -> 1, so every strict linear contraction fails
    g = parse("x/(1+x^(1/2))^2")
    v = majorant_rule(g, MajorantSpec.linear("0.9", CTX))
    assert v.conclusion == INCONCLUSIVE
    assert "domination fails" in v.notes[0]

    # a powerlaw family member dominates it (itself, slightly lifted)
    m = MajorantSpec.powerlaw("0.5", "0.5", CTX)
    v = majorant_rule(g, m)
    assert v.conclusion == CONVERGENT
    assert v.witnesses["majorant"] == "powerlaw:a=0.5,c=0.5"


def test_majorant_rule_rejects_faster_decay_claim():
    # m = powerlaw decays like a power, g = x/2 geometrically: m < g near 1
    v = majorant_rule(parse("x/2"), MajorantSpec.powerlaw("0.5", "1", CTX))
    assert v.conclusion == INCONCLUSIVE
    assert "domination fails at x = 1.0" in v.notes[0]


def test_majorant_rule_user_certification():
    g = parse(OSCILLATORY)
    m = MajorantSpec.user(parse("5/6 * x"))
    v = majorant_rule(g, m, x0="0.3")
    assert v.conclusion == INCONCLUSIVE
    assert any("certificate" in n for n in v.notes)

    v = majorant_rule(g, m, x0="0.3", user_certified=True)
    assert v.conclusion == CONVERGENT
    assert any("user majorant monotone" in n for n in v.notes)


def test_majorant_rule_evaluation_failure():
    # ln(1) = 0 turns the first comparison point into a division by zero
    v = majorant_rule(parse("x / ln(x)"), MajorantSpec.linear("0.5", CTX))
    assert v.conclusion == INCONCLUSIVE
    assert any("evaluation failed" in n for n in v.notes)


def test_snap_rational():
    assert _snap_rational(CTX.mpf("0.83164396"), CTX) == (5, 6)
    assert _snap_rational(CTX.mpf("0.45"), CTX) == (1, 2)
    assert _snap_rational(CTX.mpf("0.99"), CTX) is None


def test_majorant_candidates_ordering():
    specs = _majorant_candidates(CTX, CTX.mpf("0.83164396"))
    labels = [s.label for s in specs]
    assert "linear:5/6" in labels
    # linear candidates come first, sorted by ratio; 5/6 lands before 0.85
    assert labels.index("linear:5/6") == labels.index("linear:0.85") - 1
    first_powerlaw = next(i for i, s in enumerate(specs) if s.family == "powerlaw")
    assert all(s.family == "linear" for s in specs[:first_powerlaw])


def test_signed_rule_outcomes():
    v = signed_rule(parse("-x/2"))
    assert (v.conclusion, v.rule) == (CONVERGENT, ALTERNATING_RULE)
    assert "sign_pattern" in v.witnesses

    v = signed_rule(parse("x*sin(1/x)*(1/2)"))
    assert (v.conclusion, v.rule) == (CONVERGENT, ABSOLUTE_BOUND_RULE)
    assert abs(v.witnesses["c"] - CTX.mpf("0.5")) < CTX.mpf("0.01")

    v = signed_rule(parse("x*sin(1/x)"))
    assert v.conclusion == INCONCLUSIVE
    assert any("sup" in n for n in v.notes)


def test_detect_mode():
    points = validation_grid().points(CTX)
    assert detect_mode(evaluator(parse("sin(x)"), CTX), points) is Mode.POSITIVE
    assert detect_mode(evaluator(parse("-x/2"), CTX), points) is Mode.SIGNED
    # evaluation errors at some points do not flip the mode
    assert detect_mode(evaluator(parse("ln(x - 1)"), CTX), points) is Mode.POSITIVE


def corpus_target(entry):
    if entry.taylor is not None:
        parts = entry.taylor.split(",")
        return TaylorDef(tuple(parse_constant(p, CTX) for p in parts))
    return parse(entry.function)


@pytest.mark.parametrize("entry", ALL, ids=lambda e: e.name)
def test_analyze_corpus(entry):
    report = analyze(corpus_target(entry), entry.x0, AnalyzerConfig(max_n=entry.max_n))
    assert report.verdict.conclusion == entry.verdict
    assert report.verdict.rule == entry.rule
    assert report.mode.value == entry.mode


def test_analyze_geometric_report_details():
    report = analyze(parse("x/2"), 1)
    assert report.verdict.witnesses["c"] == CTX.mpf("0.5")
    assert report.orbit_result.status.kind == "reached_floor"
    assert report.sum is not None
    assert abs(report.sum.total - 2) < CTX.mpf("1e-12")
    assert report.fit is None  # orbit too short for a power-law window


def test_analyze_oscillatory_uses_snapped_majorant():
    report = analyze(parse(OSCILLATORY), "0.3")
    assert report.verdict.rule == MAJORANT_RULE
    assert report.verdict.witnesses["majorant"] == "linear:5/6"
    assert any("route: majorant comparison" in n for n in report.verdict.notes)


def test_analyze_routing_notes_are_preserved():
    report = analyze(parse("x/(1+x)"), 1, AnalyzerConfig(max_n=2000))
    assert report.verdict.conclusion == DIVERGENT
    assert any("route: limit-exponent rule" in n for n in report.verdict.notes)
    assert report.search is not None and report.search.found


def test_analyze_error_paths():
    with pytest.raises(AnalysisError, match="nonzero"):
        analyze(parse("x/2"), 0)
    # f(2) < 0 would auto-detect signed mode, where every scale fails;
    # in positive mode the seed simply lies outside the validated region
    with pytest.raises(AnalysisError, match="outside the validated region"):
        analyze(parse("x - x^2"), 2, AnalyzerConfig(mode="positive"))
    with pytest.raises(AnalysisError, match="every sampled scale"):
        analyze(parse("x - x^2"), 2)
    with pytest.raises(AnalysisError, match="every sampled scale"):
        analyze(parse("2*x"), 1)


def test_analyze_warnings():
    report = analyze(parse("x - x^2"), "0.5", AnalyzerConfig(max_n=2000))
    assert any("hypothesis violations above the validated region" in w
               for w in report.warnings)

    # geometric decay never fits a power law; the pipeline says so
    report = analyze(parse("0.9*(x/(1+x))"), 1, AnalyzerConfig(max_n=2000))
    assert report.verdict.conclusion == CONVERGENT
    assert any(w.startswith("empirical fit: no power law") for w in report.warnings)


def test_analyze_inconclusive_has_reasons():
    report = analyze(parse("x*(0.55 + 0.44*sin(1/x))"), "0.3",
                     AnalyzerConfig(max_n=2000))
    assert report.verdict.conclusion == INCONCLUSIVE
    assert report.verdict.rule is None
    assert any("no built-in majorant dominates" in n for n in report.verdict.notes)


@pytest.mark.parametrize("fn_text", ["sin(x)", "x/(1+x)", "x/(1+x^(1/2))^2"])
def test_search_success_implies_unit_derivative(fn_text):
    # a finite quotient limit at some exponent forces f'(0) = 1
    f = parse(fn_text)
    result = search_exponent(f)
    assert result.found
    est = estimate_derivative_at_zero(f)
    assert est.kind == VALUE
    assert abs(est.c - 1) <= MARGIN


def test_majorant_verdict_implies_orbit_domination():
    # the comparison argument must hold on the actual computed orbits
    from recurseries.orbit import iterate

    report = analyze(parse(OSCILLATORY), "0.3")
    assert report.verdict.rule == MAJORANT_RULE
    g_orbit = iterate(parse(OSCILLATORY), "0.3")
    m_orbit = iterate(parse("5/6 * x"), "0.3")
    common = min(g_orbit.last_index, m_orbit.last_index)
    assert common > 100
    for n in range(common + 1):
        assert m_orbit.terms[n] >= g_orbit.terms[n]


def test_alternating_verdict_implies_alternating_orbit():
    report = analyze(parse("-x/2"), 1)
    assert report.verdict.rule == ALTERNATING_RULE
    terms = report.orbit_result.terms
    assert all(a * b < 0 for a, b in zip(terms, terms[1:]))
