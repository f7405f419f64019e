"""
Centralized configuration for the GLA anomaly-detection pipeline.
All paths, pipeline defaults, numerical tolerances, and output settings in one place.
"""

from pathlib import Path

# === Paths ===
PROJECT_ROOT = Path(__file__).parent
OUTPUT_DIR = PROJECT_ROOT / "output"
LOG_DIR = PROJECT_ROOT / "logs"

# === Ingestion ===
INPUT_FORMATS = ("plain", "syslog")
UNPARSED_EVENT = "<unparsed>"
EMPTY_EVENT = "<empty>"
SYSLOG_WORDS_PER_EVENT = 3
SYSLOG_MIN_WORD_LENGTH = 3

# === Windows ===
WINDOW_SIZE = 20
SHIFT = None  # None means window_size // 2

# === HMM training ===
HIDDEN_STATES = 20
RESTARTS = 1
BW_MAX_ITERS = 100
BW_TOL = 1e-6
EMISSION_FLOOR = 1e-10  # added to re-estimated rows before renormalizing
RESTART_SEED_STRIDE = 1_000_003
ROW_SUM_TOL = 1e-12

# === Gauge features ===
GAUGE_MODES = ("random", "self")
GAUGE_MODE = "random"
GAUGE_COUNT = 10
LOGLIK_FLOOR = -1e4  # -inf gauge entries are clamped to this before embedding

# === t-SNE ===
PERPLEXITY = 30.0
TSNE_ITERS = 1000
TSNE_LEARNING_RATE = 200.0
EARLY_EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
INITIAL_MOMENTUM = 0.5
FINAL_MOMENTUM = 0.8
MOMENTUM_SWITCH_ITER = 250
INIT_STD = 1e-4
MIN_GAIN = 0.01
ENTROPY_TOL = 1e-5
PERPLEXITY_SEARCH_STEPS = 200

# === HDBSCAN ===
MIN_CLUSTER_SIZE = 20
MIN_SAMPLES = None  # None means min_cluster_size
ALLOW_SINGLE_CLUSTER = True  # the root may be the only cluster
CLUSTER_SELECTION_EPSILON = 0.0  # 0: only points leaving the root last stay clustered
DISTANCE_FLOOR = 1e-12  # lambda = 1 / max(distance, DISTANCE_FLOOR)

# === Reproducibility ===
SEED = 42
N_JOBS = 1

# === Report ===
REPORT_SCHEMA = "gla-report/1"
REPORT_FILE = "report.json"
TIMINGS_FILE = "timings.json"
EMBEDDING_FILE = "embedding.csv"
CLUSTERS_FILE = "clusters.csv"
FEATURES_FILE = "features.csv"
PLOT_FILE = "plot.svg"
SVG_HASH_SALT = "gla"

# Cluster colors for plot.svg; cycled when there are more clusters than colors
CLUSTER_COLORS = [
    "#4a90d9", "#5aae61", "#f1a340", "#8c6bb1", "#41b6c4",
    "#e7298a", "#a6761d", "#1b9e77", "#7570b3", "#66a61e",
]
NOISE_COLOR = "#d94a4a"

# === Exit Codes ===
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_BAD_CONFIG = 2
EXIT_INPUT_ERROR = 3
EXIT_NUMERICAL = 4

# === Experiments ===
EXPERIMENT_SEEDS = list(range(10))
EXPERIMENT_RESTARTS = 10
EXP1_STATES = 10
EXP1_SELECTION_EPSILON = 1.25  # in interquartile ranges of the embedding
EXP2_STATES = 4
EXP2_SELECTION_EPSILON = 0.0
