# problem.py constants
DEFAULT_LOWER = 0.0
DEFAULT_UPPER = 1.0
DEFAULT_CHANGE_FREQUENCY = 200
DEFAULT_CHANGE_SEVERITY = 0.1
DEFAULT_PENALTY_WEIGHT = 1e3

# de.py constants
MIN_POPULATION_SIZE = 4
POPULATION_PER_DIMENSION = 10
MAX_DEFAULT_POPULATION = 100
DEFAULT_MUTATION_FACTOR = 0.8
DEFAULT_CROSSOVER_RATE = 0.9
DEFAULT_MAX_GENERATIONS = 1000

# sensing.py constants
DEFAULT_SENSOR_TOLERANCE = 1e-12
DEFAULT_SENTINEL_COUNT = 3

# adaptation.py constants
DEFAULT_REINIT_FRACTION = 0.10
DEFAULT_LOCAL_SEARCH_BUDGET = 50
DEFAULT_DITHER = (0.7, 1.2)
MAX_DITHER = 2.0

# framework.py constants
DEFAULT_TOTAL_ITERATIONS = 1000
DEFAULT_RECOVERY_TARGET = 100
DEFAULT_RECOVERY_BAND = 1.5
DITHER_STEP = 0.1

# history.py / metrics.py constants
DEFAULT_SNAPSHOT_STRIDE = 10
DEFAULT_SMOOTHING_WINDOW = 21
DEFAULT_DENSITY_GRID = 20
DEFAULT_FITNESS_BINS = 30
FLOAT_FORMAT = "%.17g"

# baselines.py constants
DEFAULT_INITIAL_TEMPERATURE = 1.0
DEFAULT_COOLING_EXPONENT = 1.0
DEFAULT_ANNEAL_STEPS = 2000
DEFAULT_STEP_SCALE = 0.5
DEFAULT_HOPS = 50
DEFAULT_PERTURBATION_SCALE = 0.25
DEFAULT_SIMPLEX_ITERATIONS = 200
SIMPLEX_INITIAL_STEP = 0.05

# config.py / experiment.py constants
DEFAULT_OUTPUT_DIRECTORY = "results"
SUMMARY_CSV = "summary.csv"
RESOLVED_SPEC = "spec.yaml"
TRACE_CSV = "trace.csv"
TRAJECTORY_CSV = "trajectory.csv"
HEATMAP_CSV = "heatmap.csv"
DENSITY_CSV = "density.csv"
FITNESS_DISTRIBUTION_CSV = "fitness_distribution.csv"
SMOOTHED_CSV = "fitness_smoothed.csv"
KDE_CSV = "fitness_kde.csv"
