import textwrap

import numpy as np
import pytest

from ptadaptive.backstepping import EpsilonSchedule
from ptadaptive.scenario import ScenarioError, build_scenario, bundled_names, load, load_spec, parse_scenario_text
from ptadaptive.sim import check_scenario

MINIMAL = textwrap.dedent("""\
    name: mini
    model:
      name: wing_rock
    controller: theorem2
    timescale:
      kind: prescribed_time
      T: 0.5
    gains:
      k: [3, 3]
    initial:
      x: [0.2, 0.0]
    """)


def test_bundled_names():
    assert bundled_names() == ["benchmark_asym", "benchmark_t1", "wingrock_asym", "wingrock_exp", "wingrock_pt",
                               "wingrock_pt_nonstop", "wingrock_superexp"]


@pytest.mark.parametrize("name", bundled_names())
def test_bundled_scenarios_validate(name):
    sc = load(name)
    assert check_scenario(sc) == []
    assert sc.name == name


class TestParsing:
    def test_defaults(self):
        sc = build_scenario(parse_scenario_text(MINIMAL))
        np.testing.assert_array_equal(sc.gains.Gamma, np.eye(2))
        np.testing.assert_array_equal(sc.a0.theta_hat, [0.0, 0.0])
        assert sc.a0.rho_hat == 1.0
        assert sc.eta == pytest.approx(5e-4)

    def test_epsilon_schedule(self):
        text = MINIMAL.replace("  k: [3, 3]\n", "  k: [3, 3]\n  epsilon: {scale: 2.0, rate: -0.5}\n")
        sc = build_scenario(parse_scenario_text(text))
        assert sc.gains.epsilon == EpsilonSchedule(2.0, -0.5)

    def test_gamma_matrix(self):
        text = MINIMAL.replace("  k: [3, 3]\n", "  k: [3, 3]\n  Gamma: [[2, 0], [0, 3]]\n")
        sc = build_scenario(parse_scenario_text(text))
        np.testing.assert_array_equal(sc.gains.Gamma, np.diag([2.0, 3.0]))

    def test_overrides(self):
        text = MINIMAL.replace("  name: wing_rock\n", "  name: wing_rock\n  overrides: {b_lower: 1.5}\n")
        assert build_scenario(parse_scenario_text(text)).model.b_lower == 1.5


class TestDiagnostics:
    def test_unknown_key_names_path_and_position(self):
        text = MINIMAL.replace("  k: [3, 3]\n", "  k: [3, 3]\n  gama_rho: 0.1\n")
        with pytest.raises(ScenarioError) as e:
            parse_scenario_text(text, "f.yaml")
        assert str(e.value) == "f.yaml:10:3: gains.gama_rho: unknown key"

    def test_unknown_nested_key_in_union(self):
        text = MINIMAL.replace("  k: [3, 3]\n", "  k: [3, 3]\n  epsilon: {scale: 1.0, rat: 0.1}\n")
        with pytest.raises(ScenarioError) as e:
            parse_scenario_text(text, "f.yaml")
        assert str(e.value).splitlines() == ["f.yaml:10:25: gains.epsilon.rat: unknown key"]

    def test_missing_field(self):
        text = MINIMAL.replace("initial:\n  x: [0.2, 0.0]\n", "")
        with pytest.raises(ScenarioError, match="initial: Field required"):
            parse_scenario_text(text)

    def test_wrong_type(self):
        with pytest.raises(ScenarioError, match=r"f.yaml:7:3: timescale.T: Input should be a valid number"):
            parse_scenario_text(MINIMAL.replace("T: 0.5", "T: soon"), "f.yaml")

    def test_yaml_syntax(self):
        with pytest.raises(ScenarioError, match=r"f.yaml:\d+:\d+: YAML error"):
            parse_scenario_text("name: [unclosed\n", "f.yaml")

    def test_unknown_controller(self):
        with pytest.raises(ScenarioError, match="unknown controller"):
            parse_scenario_text(MINIMAL.replace("theorem2", "theorem9"))

    def test_top_level_not_mapping(self):
        with pytest.raises(ScenarioError, match="mapping"):
            parse_scenario_text("- 1\n- 2\n")

    def test_semantic_error_is_scenario_error(self):
        with pytest.raises(ScenarioError, match="needs a prescribed_time"):
            build_scenario(parse_scenario_text(MINIMAL.replace("prescribed_time", "asymptotic").replace("  T: 0.5\n", "")))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="no scenario file"):
            load_spec(str(tmp_path / "none.yaml"))

    def test_file_path(self, tmp_path):
        p = tmp_path / "mini.yaml"
        p.write_text(MINIMAL)
        assert load_spec(str(p)).name == "mini"
