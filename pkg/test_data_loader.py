import json

import numpy as np
import pandas as pd
import pytest

from data_loader import load_experiment_config, load_paths_csv, path_columns
from output_handler import paths_to_frame, save_to_csv
from sampler import GridPath


def _write_json(tmp_path, data):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(data), encoding='utf-8')
    return str(path)


def test_load_flat_config(tmp_path):
    data = {'grid': 256, 'lambdas': [-1.0], 'tolerances': {'slope': 0.05}}
    assert load_experiment_config(_write_json(tmp_path, data)) == data


def test_nested_config_rejected(tmp_path):
    with pytest.raises(ValueError):
        load_experiment_config(_write_json(tmp_path, {'grid': {'n': 256}}))
    with pytest.raises(ValueError):
        load_experiment_config(_write_json(tmp_path, [1, 2]))


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_experiment_config(str(tmp_path / 'absent.json'))


def test_path_columns_in_grid_order():
    df = pd.DataFrame(columns=['t_10', 't_2', 'Z', 't_0', 'tail'])
    assert path_columns(df) == ['t_0', 't_2', 't_10']


def test_paths_round_trip(tmp_path):
    paths = [GridPath(1.0, [0.0, 0.25, -0.5]), GridPath(2.0, [0.0, 1.0, 0.125])]
    df = paths_to_frame(paths)
    df['Z'] = [0.5, 0.25]
    out = tmp_path / 'paths.csv'
    save_to_csv(df, str(out), verbose=False)

    loaded, metadata = load_paths_csv(str(out))
    assert loaded == paths
    assert list(metadata.columns) == ['Z']
    assert np.allclose(metadata['Z'], [0.5, 0.25])


def test_duration_defaults_to_one(tmp_path):
    out = tmp_path / 'paths.csv'
    pd.DataFrame({'t_0': [0.0], 't_1': [0.3]}).to_csv(out, index=False)
    loaded, _ = load_paths_csv(str(out))
    assert loaded[0].duration == 1.0


@pytest.mark.parametrize('columns', [['t_0'], ['t_0', 't_2'], ['x', 'y']])
def test_missing_path_columns(tmp_path, columns):
    out = tmp_path / 'paths.csv'
    pd.DataFrame({col: [0.0] for col in columns}).to_csv(out, index=False)
    with pytest.raises(ValueError, match='Missing required columns'):
        load_paths_csv(str(out))
