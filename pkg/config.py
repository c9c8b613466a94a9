"""
Configuration file for the Vervaat transform experiments.
"""

import os
from dataclasses import dataclass, field, asdict, fields

from utils import InvalidArgumentError

# Environment variable that overrides the master seed
SEED_ENV_VAR = 'VERVAAT_SEED'

DEFAULT_SEED = 20240607
DEFAULT_GRID = 2 ** 12
DEFAULT_REPLICAS = 10 ** 5

# Grid sizes accepted by the runner (powers of two)
MIN_GRID_EXPONENT = 4
MAX_GRID_EXPONENT = 16

# Numerical tolerances
QUAD_REL_TOL = 1e-8
QUAD_LIMIT = 200
PHI_BAR_TOL = 1e-6
JUNCTION_TOL = 1e-12
COLLINEAR_TOL = 1e-12
IDENTITY_REL_TOL = 1e-6
MOMENT_IDENTITY_TOL = 1e-10

# Guard bands for compensators: s <= 1 - GUARD_TIME and state >= GUARD_STATE
GUARD_TIME = 2.0 ** -6
GUARD_STATE = 1e-3

# Local time window is N ** LOCAL_TIME_EXPONENT
LOCAL_TIME_EXPONENT = -1.0 / 3.0

# Statistical thresholds
ALPHA = 1e-3
Z_THRESHOLD = 4.0
MIN_ACCEPTANCE_RATE = 1e-4

# Enumeration guards
MAX_ENUMERATION_N = 16
MAX_QV_ENUMERATION_N = 14

# Marginal times used by the law-equality tests
MARGINAL_TIMES = (0.25, 0.5, 0.75)

# Sampler laws exposed by `sample --law`
SAMPLE_LAWS = (
    'vbridge-neg',
    'vbridge-pos',
    'vb',
    'vb-direct',
    'vbridge-direct',
    'vbridge-cond',
)

# Laws exposed by `laws --name`
LAW_NAMES = (
    'fz',
    'fzhat',
    'fa',
    'fztilde',
    'meander',
    'end-given-t0',
    'arcsine',
    'rayleigh',
    'first-passage',
    'bessel',
)

# Column names
PATH_COLUMN_PREFIX = 't_'
DURATION_COLUMN = 'duration'
PMF_COLUMNS = ['l', 'numerator', 'denominator']
LAW_COLUMNS = ['t', 'pdf', 'cdf']
HULL_COLUMNS = ['a', 'empirical', 'closed_form']
REPORT_COLUMNS = ['name', 'n', 'statistic', 'p_value', 'threshold', 'pass', 'seed']

# Experiment catalog: name -> defaults (None means "not used")
EXPERIMENTS = {
    'exact-lattice': {
        'grid': None, 'replicas': None, 'lambdas': [], 'experimental': False,
    },
    'law-identities': {
        'grid': None, 'replicas': None, 'lambdas': [-0.5, -1.0, -2.0], 'experimental': False,
    },
    'drift-functions': {
        'grid': None, 'replicas': None, 'lambdas': [-1.0, 1.0], 'experimental': False,
    },
    'decomposition-mc': {
        'grid': 2 ** 12, 'replicas': 10 ** 5, 'lambdas': [-2.0, -1.0, -0.5], 'experimental': False,
    },
    'moments-mc': {
        'grid': 2 ** 12, 'replicas': 10 ** 5, 'lambdas': [], 'experimental': False,
    },
    'drift-mc': {
        'grid': 2 ** 12, 'replicas': 10 ** 3, 'lambdas': [-1.0, 1.0], 'experimental': False,
    },
    'hull-mc': {
        'grid': 2 ** 12, 'replicas': 2 * 10 ** 4, 'lambdas': [-1.0], 'experimental': False,
    },
    'discrete-limit': {
        'grid': None, 'replicas': None, 'lambdas': [-1.0], 'experimental': False,
    },
    'quantile-experimental': {
        'grid': 2 ** 14, 'replicas': 2000, 'lambdas': [], 'experimental': True,
    },
}

# Short suite names accepted by `verify --suite`
SUITE_ALIASES = {
    'lattice': 'exact-lattice',
    'laws': 'law-identities',
    'decomp': 'decomposition-mc',
    'moments': 'moments-mc',
    'drift': 'drift-mc',
    'hull': 'hull-mc',
    'limit': 'discrete-limit',
    'quantile': 'quantile-experimental',
}

# Exact lattice suite bounds
BIJECTION_MAX_N = 12
ZPMF_MAX_N = 14
QV_MAX_N = 10

# Discrete-limit experiment
DISCRETE_LIMIT_N = 2000
DISCRETE_LIMIT_TOL = 0.02

# Hull experiment
HULL_SLOPE_POINTS = (-0.75, -0.5, -0.25)
HULL_SLOPE_TOL = 0.02
HULL_SEGMENT_TOL = 0.01

# Compensator QV bands
QV_BAND = (0.95, 1.05)
QV_BAND_VB = (0.93, 1.07)

# Quantile transform experiment
QUANTILE_KS_TOL = 0.05

# Direct samplers in the Monte Carlo suites run on a grid this many times
# finer than the output grid, capped at 2^20 points
DIRECT_REFINE = 16
MAX_REFINED_GRID = 2 ** 20

# Decomposition suite
DUALITY_LAMBDAS = (1.0,)
MARTINGALE_TIME = 0.5
MARTINGALE_LAMBDAS = (0.5, 1.0, 2.0)
LAST_EXIT_LAMBDA = 1.0
LAST_EXIT_Y_OFFSETS = (0.0, 0.25, 0.5, 1.0, float('inf'))
LAST_EXIT_S_EDGES = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)

# V(B) suite: bins of the first zero time for the conditional endpoint law
T0_BINS = (0.0, 0.25, 0.5, 0.75, 1.0)

# Hull suite: grids of the segment-count stability report
SEGMENT_GRIDS = (2 ** 10, 2 ** 11, 2 ** 12, 2 ** 13)
SEGMENT_REPLICAS = 2000

# Replica streams of different samplers never overlap
STREAM_BLOCK = 10 ** 7


@dataclass
class ExperimentConfig:
    """Parameters of one runner invocation."""

    experiment: str
    lambdas: list = field(default_factory=list)
    grid: int = DEFAULT_GRID
    replicas: int = DEFAULT_REPLICAS
    t_grid: list = field(default_factory=lambda: list(MARGINAL_TIMES))
    seed: int = DEFAULT_SEED
    output_dir: str = 'results'
    tolerances: dict = field(default_factory=dict)
    workers: int = 1

    def tolerance(self, key, default):
        """Look up a tolerance override by name."""
        return float(self.tolerances.get(key, default))

    def validate(self, require_lambda=False):
        """
        Check the config invariants.

        Args:
            require_lambda (bool): Whether every lambda must be nonzero

        Raises:
            InvalidArgumentError: On any violated invariant
        """
        if self.replicas < 1:
            raise InvalidArgumentError(f"replicas must be >= 1, got {self.replicas}")
        grid_message = (
            f"grid must be a power of two between 2^{MIN_GRID_EXPONENT} "
            f"and 2^{MAX_GRID_EXPONENT}, got {self.grid}"
        )
        if self.grid <= 0:
            raise InvalidArgumentError(grid_message)
        exponent = self.grid.bit_length() - 1
        if self.grid != 2 ** exponent or not MIN_GRID_EXPONENT <= exponent <= MAX_GRID_EXPONENT:
            raise InvalidArgumentError(grid_message)
        if require_lambda and any(lam == 0 for lam in self.lambdas):
            raise InvalidArgumentError("lambda must be nonzero for this experiment")
        for t in self.t_grid:
            if not 0.0 < t < 1.0:
                raise InvalidArgumentError(f"t-grid points must lie in (0,1), got {t}")
        if self.workers < 1:
            raise InvalidArgumentError(f"workers must be >= 1, got {self.workers}")
        return self

    def to_dict(self):
        return asdict(self)


def env_seed(seed, environ=None):
    """Return the VERVAAT_SEED override when set, else seed."""
    env = os.environ if environ is None else environ
    if not env.get(SEED_ENV_VAR):
        return seed
    try:
        return int(env[SEED_ENV_VAR])
    except ValueError:
        raise InvalidArgumentError(
            f"{SEED_ENV_VAR} must be an integer, got '{env[SEED_ENV_VAR]}'"
        )


def build_config(experiment, base=None, overrides=None, environ=None):
    """
    Merge defaults, a flat config dict, command line overrides and the seed env var.

    Args:
        experiment (str): Experiment name from EXPERIMENTS
        base (dict): Values read from a config file
        overrides (dict): Command line values; None entries are ignored
        environ (dict): Environment mapping (defaults to os.environ)

    Returns:
        ExperimentConfig: Validated configuration
    """
    if experiment not in EXPERIMENTS:
        raise InvalidArgumentError(
            f"Unknown experiment '{experiment}'. Choose from: {sorted(EXPERIMENTS)}"
        )
    defaults = EXPERIMENTS[experiment]
    values = {'experiment': experiment, 'lambdas': list(defaults['lambdas'])}
    if defaults['grid'] is not None:
        values['grid'] = defaults['grid']
    if defaults['replicas'] is not None:
        values['replicas'] = defaults['replicas']

    known = {f.name for f in fields(ExperimentConfig)}
    for source in (base or {}, overrides or {}):
        for key, value in source.items():
            if value is None or key == 'experiment':
                continue
            if key not in known:
                raise InvalidArgumentError(f"Unknown config key '{key}'")
            values[key] = value

    values['seed'] = env_seed(values.get('seed', DEFAULT_SEED), environ)

    config = ExperimentConfig(**values)
    config.grid = int(config.grid)
    config.replicas = int(config.replicas)
    config.seed = int(config.seed)
    config.lambdas = [float(lam) for lam in config.lambdas]
    config.t_grid = [float(t) for t in config.t_grid]
    return config.validate()
