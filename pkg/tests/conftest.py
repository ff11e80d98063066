"""Shared pytest hooks.

Prints one PASS/FAIL line per acceptance criterion at the end of a run so
the gate's verdicts are visible without scrolling through the full log.
"""

CRITERION_LABELS = {
    "test_criterion_1_bivariate_cdf_accuracy": "1 (bivariate normal cdf accuracy)",
    "test_criterion_2_parametric_design_1": "2 (parametric design 1 table)",
    "test_criterion_3_parametric_designs_2_and_3": "3 (parametric designs 2-3 tables)",
    "test_criterion_4_two_step_estimator_table": "4 (two-step estimator table)",
    "test_criterion_5_identification_ladder": "5 (identification ladder)",
    "test_criterion_6_property_suite": "6 (property suite)",
    "test_criterion_7_sieve_mle_properties": "7 (sieve mle properties)",
    "test_criterion_8_correlation_condition_flags": "8 (correlation condition flags)",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    verdicts = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = rep.nodeid.split("::")[-1]
            if name in CRITERION_LABELS and getattr(rep, "when", "call") == "call":
                verdicts[CRITERION_LABELS[name]] = "PASS" if rep.passed else "FAIL"
    if verdicts:
        terminalreporter.write_sep("-", "acceptance criteria")
        for label in sorted(verdicts):
            terminalreporter.write_line(f"criterion {label}: {verdicts[label]}")
