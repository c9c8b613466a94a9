"""
Plot data: CSV tables of sampled decomposition paths with their split markers.
"""

import logging
import os
from functools import partial

import numpy as np
import pandas as pd

from decomp import build_vervaat_bridge_neg, build_vervaat_bridge_pos, direct_vervaat_bridge
from hull import convex_minorant
from lattice import nearest_endpoint, sample_bridge_walk, vervaat_walk
from output_handler import paths_to_frame, save_to_csv
from sampler import as_generator, run_replicas
from utils import InvalidArgumentError

log = logging.getLogger(__name__)

FIGURES = ('fig1', 'fig2', 'fig3', 'fig4')

# Lattice figure walk length
LATTICE_FIGURE_N = 50


def _negative_lambda(config):
    return next((lam for lam in config.lambdas if lam < 0), -1.0)


def _positive_lambda(config):
    return next((lam for lam in config.lambdas if lam > 0), abs(_negative_lambda(config)))


def _overlay_replica(stream, lam, N):
    sample = direct_vervaat_bridge(lam, N, stream)
    path = sample.path
    return path.times, path.values, convex_minorant(path).evaluate(path.times), sample.latent['Z']


def _lattice_frame(config):
    a = nearest_endpoint(LATTICE_FIGURE_N, _negative_lambda(config))
    walk = sample_bridge_walk(LATTICE_FIGURE_N, a, as_generator(config.seed))
    v, k = vervaat_walk(walk)
    return pd.DataFrame({
        'j': np.arange(LATTICE_FIGURE_N + 1),
        'walk': walk.positions,
        'vervaat': v.positions,
        'Z': v.first_hit(-1),
        'K': k,
    })


def _overlay_frame(config):
    lam = _negative_lambda(config)
    runs = run_replicas(partial(_overlay_replica, lam=lam, N=config.grid), config.replicas, config.seed, config.workers)
    frames = []
    for replica, (times, values, minorant, z) in enumerate(runs):
        frames.append(pd.DataFrame({
            'replica': replica,
            't': times,
            'path': values,
            'minorant': minorant,
            'chord': lam * times,
            'Z': z,
        }))
    return pd.concat(frames, ignore_index=True)


def figure_frame(figure, config):
    """
    Build the table behind one figure.

    fig1: negative-endpoint decompositions with a Z column; fig2: positive
    endpoint with Zhat; fig3: a lattice bridge and its Vervaat transform with
    the first -1 hit Z and helper K; fig4: direct samples overlaid with their
    convex minorant and the chord t -> lambda t.

    Args:
        figure (str): One of FIGURES
        config (ExperimentConfig): Supplies lambdas, grid, replicas and seed

    Returns:
        pd.DataFrame: Figure table
    """
    if figure == 'fig1':
        lam = _negative_lambda(config)
        fn = partial(build_vervaat_bridge_neg, lam, config.grid)
        return paths_to_frame(run_replicas(fn, config.replicas, config.seed, config.workers))
    if figure == 'fig2':
        fn = partial(build_vervaat_bridge_pos, _positive_lambda(config), config.grid)
        return paths_to_frame(run_replicas(fn, config.replicas, config.seed, config.workers))
    if figure == 'fig3':
        return _lattice_frame(config)
    if figure == 'fig4':
        return _overlay_frame(config)
    raise InvalidArgumentError(f"Unknown figure '{figure}'. Choose from: {list(FIGURES)}")


def emit_plot_data(figure, config, verbose=True):
    """
    Write <output_dir>/<figure>.csv for one figure or for all of them.

    Args:
        figure (str): One of FIGURES or 'all'
        config (ExperimentConfig): Validated configuration
        verbose (bool): Print the saved paths

    Returns:
        list: Written file paths
    """
    figures = FIGURES if figure == 'all' else (figure,)
    os.makedirs(config.output_dir, exist_ok=True)
    written = []
    for name in figures:
        frame = figure_frame(name, config)
        path = os.path.join(config.output_dir, f'{name}.csv')
        save_to_csv(frame, path, verbose)
        log.debug("%s: %d rows", name, len(frame))
        written.append(path)
    return written
