import pytest

from config import (
    DEFAULT_SEED,
    EXPERIMENTS,
    MARGINAL_TIMES,
    SEED_ENV_VAR,
    ExperimentConfig,
    build_config,
    env_seed,
)
from utils import InvalidArgumentError


def test_build_config_uses_catalog_defaults():
    config = build_config('decomposition-mc', environ={})
    defaults = EXPERIMENTS['decomposition-mc']
    assert config.grid == defaults['grid']
    assert config.replicas == defaults['replicas']
    assert config.lambdas == defaults['lambdas']
    assert config.t_grid == list(MARGINAL_TIMES)
    assert config.seed == DEFAULT_SEED


def test_overrides_win_over_file_values():
    config = build_config(
        'hull-mc',
        base={'grid': 1024, 'replicas': 50},
        overrides={'grid': 256, 'replicas': None},
        environ={},
    )
    assert config.grid == 256
    assert config.replicas == 50


def test_unknown_names_rejected():
    with pytest.raises(InvalidArgumentError):
        build_config('levy-mc', environ={})
    with pytest.raises(InvalidArgumentError):
        build_config('hull-mc', base={'grids': 64}, environ={})


def test_seed_env_var_overrides():
    assert build_config('moments-mc', overrides={'seed': 3}, environ={SEED_ENV_VAR: '11'}).seed == 11
    assert build_config('moments-mc', overrides={'seed': 3}, environ={SEED_ENV_VAR: ''}).seed == 3
    with pytest.raises(InvalidArgumentError):
        build_config('moments-mc', environ={SEED_ENV_VAR: 'abc'})


def test_env_seed():
    assert env_seed(5, {}) == 5
    assert env_seed(5, {SEED_ENV_VAR: '-2'}) == -2


@pytest.mark.parametrize('grid', [8, 100, 2 ** 17, 0, -16])
def test_grid_must_be_supported_power_of_two(grid):
    with pytest.raises(InvalidArgumentError):
        build_config('hull-mc', overrides={'grid': grid}, environ={})


@pytest.mark.parametrize('override', [
    {'replicas': 0},
    {'t_grid': [0.5, 1.0]},
    {'workers': 0},
])
def test_validate_rejects_bad_values(override):
    with pytest.raises(InvalidArgumentError):
        build_config('moments-mc', overrides=override, environ={})


def test_validate_lambda_requirement():
    config = ExperimentConfig('decomposition-mc', lambdas=[0.0], grid=64, replicas=1)
    assert config.validate() is config
    with pytest.raises(InvalidArgumentError):
        config.validate(require_lambda=True)


def test_tolerance_lookup():
    config = ExperimentConfig('hull-mc', tolerances={'slope': '0.05'})
    assert config.tolerance('slope', 0.02) == 0.05
    assert config.tolerance('segments', 0.01) == 0.01
    assert config.to_dict()['experiment'] == 'hull-mc'
