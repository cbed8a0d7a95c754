import pytest

from askac.config import (
    ConfigError,
    ExperimentConfig,
    config_from_mapping,
    load_config_file,
    normalize_key,
    resolve,
)


def test_defaults_cartpole_ppo():
    cfg = resolve(ExperimentConfig(algorithm="ppo", env="cartpole", advisor="none"))
    assert cfg.timesteps_per_iteration == 2048
    assert cfg.learning_rate == 1e-3
    assert cfg.num_epochs == 10
    assert cfg.minibatch_size == 256
    assert cfg.gae_discount == 0.95
    assert cfg.anneal is True


def test_defaults_cartpole_a2c():
    cfg = resolve(ExperimentConfig(algorithm="aska2c", env="cartpole"))
    assert cfg.timesteps_per_iteration == 40
    assert cfg.learning_rate == 7e-4
    assert cfg.gae_discount == 1.0
    assert cfg.advisor == "scripted"
    assert cfg.backbone == "a2c"


def test_defaults_doorkey_ppo():
    cfg = resolve(ExperimentConfig(algorithm="askppo", env="doorkey"))
    assert cfg.timesteps_per_iteration == 1024
    assert cfg.learning_rate == 2.5e-4
    assert cfg.minibatch_size == 64
    assert cfg.anneal is False


def test_normalize_table_names():
    assert normalize_key("Learning rate") == "learning_rate"
    assert normalize_key("PPO clipping") == "ppo_clipping"
    assert normalize_key("VF coeff") == "vf_coeff"
    assert normalize_key("GAE discount") == "gae_discount"
    assert normalize_key("Exponential decay rate (Ask)") == "exponential_decay_rate"
    assert normalize_key("Max unstable rate (Ask)") == "max_unstable_rate"
    assert normalize_key("Advisor loss coeff (Ask)") == "advisor_loss_coeff"
    assert normalize_key("Ask loss coeff (Ask)") == "ask_loss_coeff"
    assert normalize_key("Policy network hidden layers") == "policy_hidden_layers"
    assert normalize_key("Number of epochs") == "num_epochs"
    assert normalize_key("Timesteps per iteration") == "timesteps_per_iteration"


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config key"):
        config_from_mapping({"algorithm": "ppo", "advisor": "none", "bogus_key": "1"})


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        config_from_mapping({"algorithm": "dqn"})
    with pytest.raises(ConfigError):
        config_from_mapping({"algorithm": "ppo", "advisor": "none", "discount_factor": "1.5"})
    with pytest.raises(ConfigError):
        config_from_mapping({"algorithm": "askppo", "advisor": "none"})  # needs advisor
    with pytest.raises(ConfigError):
        config_from_mapping({"algorithm": "ppo", "advisor": "none", "grid_size": "3"})


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        """
        # an experiment
        algorithm = askppo
        env = cartpole
        pole_length = 1.0
        Learning rate = 0.0005
        Timesteps per iteration = 1024
        Max unstable rate (Ask) = 0.2
        changepoints = 100000:1.0,200000:2.0
        seed = 4
        """
    )
    cfg = load_config_file(path)
    assert cfg.algorithm == "askppo"
    assert cfg.pole_length == 1.0
    assert cfg.learning_rate == 5e-4
    assert cfg.timesteps_per_iteration == 1024
    assert cfg.max_unstable_rate == 0.2
    assert cfg.changepoints == ((100000, 1.0), (200000, 2.0))
    assert cfg.seed == 4


def test_hidden_layer_parsing():
    cfg = config_from_mapping({
        "algorithm": "ppo", "advisor": "none",
        "policy_hidden_layers": "[32, 32]",
        "value_hidden_layers": "16,16",
    })
    assert cfg.policy_hidden_layers == (32, 32)
    assert cfg.value_hidden_layers == (16, 16)


def test_effective_steps_and_iterations():
    cfg = resolve(ExperimentConfig(algorithm="ppo", env="cartpole", advisor="none",
                                   total_steps=200_000))
    assert cfg.n_iterations == 97
    assert cfg.effective_steps == 97 * 2048 <= 200_000
