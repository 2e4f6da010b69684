# Standard Library Imports
from dataclasses import replace

# Third-Party Library Imports
import numpy as np
import pytest

# Local Application Imports
from src.network import (
    CaseSemanticError,
    CaseSyntaxError,
    InfeasibleCaseError,
    PreprocessError,
    aggregate_bus_generation,
    build_matrices,
    case_from_json,
    case_to_json,
    injection_oracle,
    objective_polynomial,
    parse_case,
    preprocess_low_impedance,
)

from .conftest import admittance_oracle, random_voltages

TWO_BUS = """function mpc = tiny
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	230	1	1.1	0.9;
	2	1	50	20	0	0	1	1	0	230	1	{vmax}	{vmin};
];
mpc.gen = [
	1	0	0	100	-100	1	100	1	200	0;
];
mpc.branch = [
	1	2	{r}	0.1	0	0	0	0	0	0	1	-360	360;
];
mpc.gencost = [
	2	0	0	3	0.01	10	0;
];
"""


def tiny(vmax: float = 1.1, vmin: float = 0.9, r: float = 0.01) -> str:
    return TWO_BUS.format(vmax=vmax, vmin=vmin, r=r)


def test_parse_converts_to_per_unit(case2):
    assert case2.n == 2
    assert case2.ref_bus == 0
    assert case2.buses[1].p_load == pytest.approx(0.5)
    assert case2.buses[1].q_load == pytest.approx(0.2)
    gen = case2.gens[0]
    assert gen.p_max == pytest.approx(2.0)
    assert gen.c2 == pytest.approx(0.01 * 100**2)
    assert gen.c1 == pytest.approx(10 * 100)


def test_bundled_cases_parse(bundled_cases):
    assert [case.n for case in bundled_cases] == [2, 2, 5, 9, 14]
    for case in bundled_cases:
        assert case.buses[case.ref_bus].bus_type == 3


def test_missing_table_reports_line():
    with pytest.raises(CaseSyntaxError) as info:
        parse_case("mpc.baseMVA = 100;\nmpc.bus = [\n1 3 0 0 0 0 1 1 0 1 1 1.1 0.9;\n];\n")
    assert "mpc.gen" in info.value.message


def test_unclosed_table_is_syntax_error():
    with pytest.raises(CaseSyntaxError) as info:
        parse_case("mpc.baseMVA = 100;\nmpc.bus = [\n1 3 0 0 0 0 1 1 0 1 1 1.1 0.9;\n")
    assert info.value.line_number == 2


def test_unknown_bus_reference():
    text = tiny().replace("\t1\t2\t0.01", "\t1\t7\t0.01")
    with pytest.raises(CaseSemanticError) as info:
        parse_case(text)
    assert "branch 1" in info.value.record


def test_inverted_voltage_limits_are_infeasible():
    with pytest.raises(InfeasibleCaseError):
        parse_case(tiny(vmax=0.9, vmin=1.0))


def test_json_round_trip(case14):
    again = case_from_json(case_to_json(case14))
    assert again == case14
    assert case_to_json(again) == case_to_json(case14)


def test_admittance_matches_independent_oracle(bundled_cases):
    for case in bundled_cases:
        np.testing.assert_allclose(build_matrices(case).admittance, admittance_oracle(case), atol=1e-12)


def test_injection_matrices_reproduce_power_flow(case14, rng):
    matrices = build_matrices(case14)
    v = random_voltages(case14, rng)
    s = v * np.conj(admittance_oracle(case14) @ v)
    for k in range(case14.n):
        p = np.real(np.conj(v) @ matrices.injection_p[k] @ v)
        q = np.real(np.conj(v) @ matrices.injection_q[k] @ v)
        assert p == pytest.approx(s[k].real, abs=1e-10)
        assert q == pytest.approx(s[k].imag, abs=1e-10)
    np.testing.assert_allclose(injection_oracle(matrices.admittance, v), s, atol=1e-10)


def test_flow_matrices_give_terminal_flows(case9, rng):
    matrices = build_matrices(case9)
    v = random_voltages(case9, rng)
    for flow in matrices.flows:
        line = case9.lines[flow.line]
        i, j = flow.bus, flow.other
        two_port = admittance_oracle(replace(case9, gens=(), lines=(line,)))
        two_port -= np.diag([complex(b.g_shunt, b.b_shunt) for b in case9.buses])
        current = two_port[i, i] * v[i] + two_port[i, j] * v[j]
        expected = v[i] * np.conj(current)
        assert np.real(np.conj(v) @ flow.p_matrix @ v) == pytest.approx(expected.real, abs=1e-10)
        assert np.real(np.conj(v) @ flow.q_matrix @ v) == pytest.approx(expected.imag, abs=1e-10)
    assert len(matrices.flows) == 2 * len(case9.lines)


def test_loss_objective_is_zero_without_resistance():
    case = parse_case(tiny(r=0.0))
    objective = objective_polynomial(case, "loss")
    v = np.array([1.0, 0.97 * np.exp(-0.1j)])
    assert objective.evaluate(v) == pytest.approx(0.0, abs=1e-12)


def test_cost_objective_counts_load(case2):
    objective = objective_polynomial(case2, "cost")
    v = np.array([1.0, 1.0 + 0j])
    generation = np.real(np.conj(v) @ build_matrices(case2).injection_p[0] @ v)
    gen = case2.gens[0]
    expected = gen.c2 * generation**2 + gen.c1 * generation + gen.c0
    assert objective.evaluate(v) == pytest.approx(expected)


def test_aggregation_shares_cost_equally(case5):
    generation = aggregate_bus_generation(case5)
    assert generation.has_gen[0]
    assert not generation.has_gen[1]
    assert generation.p_max[0] == pytest.approx(2.1)
    assert generation.c1[0] == pytest.approx((1400 + 1500) / 2)
    assert generation.p_min[1] == 0.0 and generation.p_max[1] == 0.0


def test_low_impedance_merge_is_idempotent():
    text = tiny().replace("];\nmpc.gencost", "\t2\t3\t0.0001\t0.0001\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n];\nmpc.gencost")
    text = text.replace(
        "\t2\t1\t50\t20\t0\t0\t1\t1\t0\t230\t1\t1.1\t0.9;\n",
        "\t2\t1\t50\t20\t0\t0\t1\t1\t0\t230\t1\t1.1\t0.9;\n\t3\t1\t10\t5\t0\t0\t1\t1\t0\t230\t1\t1.05\t0.95;\n",
    )
    case = parse_case(text)
    assert case.n == 3
    merged = preprocess_low_impedance(case, 1e-3)
    assert merged.case.n == 2
    assert merged.bus_map == (0, 1, 1)
    assert merged.case.buses[1].p_load == pytest.approx(0.6)
    assert merged.case.buses[1].v_max == pytest.approx(1.05)
    again = preprocess_low_impedance(merged.case, 1e-3)
    assert again.case == merged.case
    assert again.bus_map == (0, 1)


def test_merging_two_reference_buses_fails():
    text = tiny(r=0.0).replace("\t0.1\t0\t0\t0", "\t0.0001\t0\t0\t0").replace("\t2\t1\t50", "\t2\t3\t50")
    with pytest.raises(PreprocessError):
        preprocess_low_impedance(parse_case(text), 1e-3)
