"""Configuration schema tests, including the published example files.

tests/listings/ holds the eight benchmark configuration files circulating
with the ecosystem this schema stays compatible with; each must either parse
(`from:` keys ignored) or fail with the placeholder-path ConfigError.
"""

from pathlib import Path

import pytest

from neuroidbench.config import BenchmarkConfig, emit_config, parse_config
from neuroidbench.errors import ConfigError

LISTINGS = Path(__file__).parent / "listings"


def load(name):
    return (LISTINGS / name).read_text()


MINIMAL = """
name: unit
datasets:
  - name: Synthetic
pipelines:
  "AR+LDA":
    - {name: AutoRegressive}
    - {name: LDA}
"""


# ---------------------------------------------------------------------------
# the published example files


def test_listing1_parses_to_ar_svm():
    config = parse_config(load("listing1.yml"))
    assert config.name == "BrainInvaders2015a"
    assert [d["name"] for d in config.datasets] == ["BrainInvaders2015a"]
    assert list(config.pipelines) == ["AR+SVM"]
    steps = config.pipelines["AR+SVM"]
    assert [s["name"] for s in steps] == ["AutoRegressive", "SVC"]
    assert steps[0]["parameters"]["order"] == 1  # default materialized
    assert steps[1]["parameters"]["kernel"] == "rbf"
    assert steps[1]["parameters"]["probability"] is True


def test_listing2_carries_dataset_parameters():
    config = parse_config(load("listing2.yml"))
    params = config.datasets[0]["parameters"]
    assert params["subjects"] == 10
    assert params["interval"] == [-0.1, 0.9]
    assert params["rejection_threshold"] == 200.0
    assert config.pipelines["AR+SVM"][0]["parameters"]["order"] == 5


def test_listing3_has_three_steps():
    config = parse_config(load("listing3.yml"))
    names = [s["name"] for s in config.pipelines["AR+PSD+SVM"]]
    assert names == ["AutoRegressive", "PowerSpectralDensity", "SVC"]


def test_listing4_twin_pipeline():
    config = parse_config(load("listing4.yml"))
    (step,) = config.pipelines["TNN"]
    assert step["name"] == "TwinNeuralNetwork"
    assert step["parameters"]["EPOCHS"] == 10
    assert step["parameters"]["batch_size"] == 256
    assert step["parameters"]["verbose"] == 1
    assert step["parameters"]["workers"] == 1


def test_listing5_two_pipelines():
    config = parse_config(load("listing5.yml"))
    assert set(config.pipelines) == {"TNN", "AR+PSD+SVM"}
    assert config.pipelines["AR+PSD+SVM"][0]["parameters"]["order"] == 6


def test_listing6_multi_session_dataset():
    config = parse_config(load("listing6.yml"))
    assert config.datasets[0]["name"] == "COGBCIFLANKER"
    assert set(config.pipelines) == {"TNN", "AR+PSD+SVM"}


def test_listing7_fails_on_path_placeholder():
    with pytest.raises(ConfigError, match="placeholder"):
        parse_config(load("listing7.yml"))


def test_listing8_fails_on_path_placeholder():
    with pytest.raises(ConfigError, match="placeholder"):
        parse_config(load("listing8.yml"))


def test_from_keys_never_reach_resolved_configs():
    for name in ("listing1.yml", "listing4.yml", "listing5.yml"):
        config = parse_config(load(name))
        for dataset in config.datasets:
            assert "from" not in dataset
            assert "from" not in dataset["parameters"]
        for steps in config.pipelines.values():
            for step in steps:
                assert "from" not in step
                assert "from" not in step["parameters"]


# ---------------------------------------------------------------------------
# defaults, aliases, round-trip


def test_minimal_config_materializes_defaults():
    config = parse_config(MINIMAL)
    params = config.datasets[0]["parameters"]
    assert params["interval"] == [-0.2, 0.8]
    assert params["rejection_threshold"] is None
    assert params["subjects"] == 10  # synthetic default population
    assert params["separability"] == 0.5
    assert config.evaluation == {
        "scheme": "single_session",
        "attacker": "unknown",
        "k_folds": 4,
        "min_samples_per_user": 4,
        "seed": 0,
    }
    assert config.sweeps == {"interval": [], "rejection_threshold": []}


def test_dataset_and_scheme_aliases():
    text = """
name: alias check
dataset:
  - name: BrainInvaders15a
pipelines:
  "AR+LDA":
    - {name: AutoRegressive}
    - {name: LDA}
evaluation: {scheme: multi}
"""
    config = parse_config(text)
    assert config.datasets[0]["name"] == "BrainInvaders2015a"
    assert config.evaluation["scheme"] == "multi_session"


def test_parse_emit_round_trip():
    sources = [MINIMAL, load("listing1.yml"), load("listing5.yml"), load("listing6.yml")]
    for text in sources:
        first = parse_config(text)
        again = parse_config(emit_config(first))
        assert again == first


def test_emit_output_is_plain_yaml():
    emitted = emit_config(parse_config(MINIMAL))
    assert "!!" not in emitted  # no python-specific tags
    assert isinstance(parse_config(emitted), BenchmarkConfig)


# ---------------------------------------------------------------------------
# schema rejections, with the YAML path in the message


def test_unknown_keys_are_path_qualified():
    cases = [
        (MINIMAL + "extra: 1\n", "<root>"),
        (MINIMAL.replace("- name: Synthetic", "- name: Synthetic\n    colour: red"), "datasets[0]"),
        (MINIMAL.replace("- name: Synthetic",
                         "- name: Synthetic\n    parameters: {subject: 3}"),
         "datasets[0].parameters"),
        (MINIMAL.replace("{name: AutoRegressive}",
                         "{name: AutoRegressive, parameters: {oder: 2}}"),
         "pipelines.AR+LDA[0].parameters"),
        (MINIMAL + "evaluation: {folds: 3}\n", "evaluation"),
    ]
    for text, path in cases:
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        assert path in str(err.value), text


def test_interval_order_is_checked():
    text = MINIMAL.replace(
        "- name: Synthetic",
        "- name: Synthetic\n    parameters: {interval: [0.9, -0.1]}",
    )
    with pytest.raises(ConfigError, match="tmin < tmax violated"):
        parse_config(text)


def test_pipeline_without_authenticator():
    text = """
name: x
datasets: [{name: Synthetic}]
pipelines:
  "AR only":
    - {name: AutoRegressive}
"""
    with pytest.raises(ConfigError, match="no authenticator"):
        parse_config(text)


def test_pipeline_with_bare_classifier():
    text = """
name: x
datasets: [{name: Synthetic}]
pipelines:
  "SVM only":
    - {name: SVC}
"""
    with pytest.raises(ConfigError, match="feature step"):
        parse_config(text)


def test_pipeline_with_two_authenticators():
    text = """
name: x
datasets: [{name: Synthetic}]
pipelines:
  "double":
    - {name: AutoRegressive}
    - {name: LDA}
    - {name: SVC}
"""
    with pytest.raises(ConfigError, match="more than one authenticator"):
        parse_config(text)


def test_authenticator_must_come_last():
    text = """
name: x
datasets: [{name: Synthetic}]
pipelines:
  "backwards":
    - {name: SVC}
    - {name: AutoRegressive}
"""
    with pytest.raises(ConfigError, match="last step"):
        parse_config(text)


def test_twin_cannot_follow_feature_steps():
    text = """
name: x
datasets: [{name: Synthetic}]
pipelines:
  "mixed":
    - {name: AutoRegressive}
    - {name: TwinNeuralNetwork}
"""
    with pytest.raises(ConfigError, match="raw epochs"):
        parse_config(text)


def test_duplicate_feature_step():
    text = """
name: x
datasets: [{name: Synthetic}]
pipelines:
  "twice":
    - {name: AutoRegressive}
    - {name: AutoRegressive}
    - {name: LDA}
"""
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(text)


def test_subject_count_checked_against_catalogue():
    text = """
name: x
datasets:
  - name: BrainInvaders2015a
    parameters: {subjects: 51}
pipelines:
  "AR+LDA":
    - {name: AutoRegressive}
    - {name: LDA}
"""
    with pytest.raises(ConfigError, match="50 subjects"):
        parse_config(text)


def test_unsupported_step_values():
    text = MINIMAL.replace(
        "- {name: LDA}",
        "- {name: SVC, parameters: {kernel: poly}}",
    )
    with pytest.raises(ConfigError, match="rbf"):
        parse_config(text)


def test_user_dataset_requires_path():
    text = """
name: x
datasets: [{name: UserDataset}]
pipelines:
  "AR+LDA":
    - {name: AutoRegressive}
    - {name: LDA}
"""
    with pytest.raises(ConfigError, match="dataset_path"):
        parse_config(text)


def test_unknown_dataset_and_step_names():
    with pytest.raises(ConfigError, match="unknown dataset"):
        parse_config(MINIMAL.replace("name: Synthetic", "name: Imagined"))
    with pytest.raises(ConfigError, match="unknown step"):
        parse_config(MINIMAL.replace("{name: AutoRegressive}", "{name: Wavelet}"))


def test_evaluation_value_errors():
    with pytest.raises(ConfigError, match="evaluation.scheme"):
        parse_config(MINIMAL + "evaluation: {scheme: both}\n")
    with pytest.raises(ConfigError, match="evaluation.attacker"):
        parse_config(MINIMAL + "evaluation: {attacker: anybody}\n")
    with pytest.raises(ConfigError, match="evaluation.k_folds"):
        parse_config(MINIMAL + "evaluation: {k_folds: 1}\n")


def test_sweeps_parse_and_validate():
    config = parse_config(
        MINIMAL + "sweeps: {interval: [[-0.1, 0.9], [0.0, 1.0]], rejection_threshold: [100, null]}\n"
    )
    assert config.sweeps["interval"] == [[-0.1, 0.9], [0.0, 1.0]]
    assert config.sweeps["rejection_threshold"] == [100.0, None]
    with pytest.raises(ConfigError, match="sweeps.interval"):
        parse_config(MINIMAL + "sweeps: {interval: [[0.9, -0.1]]}\n")


def test_degenerate_documents():
    with pytest.raises(ConfigError, match="empty"):
        parse_config("")
    with pytest.raises(ConfigError, match="not valid YAML"):
        parse_config("pipelines: [unclosed")
    with pytest.raises(ConfigError):
        parse_config("name: x\npipelines: {}\ndatasets: [{name: Synthetic}]")
    with pytest.raises(ConfigError, match="not both"):
        parse_config(MINIMAL + "dataset: [{name: Synthetic}]\n")
