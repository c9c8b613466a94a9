"""
Data loading module for experiment configs and sampled path tables.
"""

import json
import re

import numpy as np
import pandas as pd

from config import DURATION_COLUMN, PATH_COLUMN_PREFIX
from sampler import GridPath


def load_experiment_config(file_path):
    """
    Load a flat JSON experiment config.

    Args:
        file_path (str): Path to the JSON file

    Returns:
        dict: Key-value pairs, merged later by config.build_config
    """
    with open(file_path, encoding='utf-8') as handle:
        data = json.load(handle)

    if not isinstance(data, dict):
        raise ValueError(f"Config file must hold a JSON object, got {type(data).__name__}")

    nested = [key for key, value in data.items() if isinstance(value, dict) and key != 'tolerances']
    if nested:
        raise ValueError(f"Config file must be flat; nested keys: {nested}")

    return data


def path_columns(df):
    """
    Names of the t_0..t_N columns in grid order.

    Args:
        df (pd.DataFrame): Path table

    Returns:
        list: Column names sorted by grid index
    """
    pattern = re.compile(rf'^{re.escape(PATH_COLUMN_PREFIX)}(\d+)$')
    indexed = [(int(m.group(1)), col) for col in df.columns if (m := pattern.match(str(col)))]
    indexed.sort()
    return [col for _, col in indexed]


def load_paths_csv(file_path):
    """
    Load sampled paths from CSV.

    Args:
        file_path (str): Path to a CSV with columns t_0..t_N, an optional
            duration column and any extra metadata columns

    Returns:
        tuple: (list of GridPath, pd.DataFrame of the metadata columns)
    """
    df = pd.read_csv(file_path)

    columns = path_columns(df)
    expected = [f'{PATH_COLUMN_PREFIX}{i}' for i in range(len(columns))]
    missing_columns = [col for col in expected if col not in columns]

    if len(columns) < 2:
        raise ValueError(f"Missing required columns: need at least {expected or ['t_0', 't_1']}")
    if missing_columns:
        raise ValueError(f"Missing required columns: {missing_columns}")

    if DURATION_COLUMN in df.columns:
        durations = df[DURATION_COLUMN].to_numpy(dtype=float)
    else:
        durations = np.ones(len(df))

    values = df[expected].to_numpy(dtype=float)
    paths = [GridPath(duration, row) for duration, row in zip(durations, values)]
    metadata = df.drop(columns=expected + ([DURATION_COLUMN] if DURATION_COLUMN in df.columns else []))

    return paths, metadata
