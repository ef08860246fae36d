# fmkinetics/config.py

# Time domain
T_MAX = 1.0 - 1e-3  # Upper clamp for t; the unregularized RF velocity blows up at t = 1

# Mixture weights
WEIGHT_FLUSH = 1e-300  # Normalized weights below this are set to exact 0

# Integration
DEFAULT_METHOD = "rk4"
DEFAULT_STEPS = 256
DEFAULT_T_END = 0.99
DIVERGENCE_LIMIT = 1e300  # Any |state coordinate| above this counts as divergence

# Row blocking. Block sizes are part of the determinism contract: changing them
# changes which rows share a vectorized evaluation but never the per-row stream.
BATCH_BLOCK_ROWS = 4096     # Trajectories integrated together by one worker task
SAMPLE_BLOCK_ROWS = 1024    # Source draws per counter-based RNG block
MAX_REJECTION_BLOCKS = 64   # Stream blocks scanned when a dataset generator rejects draws by norm

# Finite differences
FD_STEP_SCALE = 1e-5  # h = FD_STEP_SCALE * (1 + ||z||)

# Tail estimation
TAIL_QUANTILE = 0.95
MIN_TAIL_SAMPLES = 200
MIN_TAIL_POINTS = 50
MIN_SURVIVAL_SAMPLES = 100
MIN_SURVIVAL_COUNT = 10  # Thresholds with S(u) < MIN_SURVIVAL_COUNT / n are dropped from fits
DKW_DELTA = 1e-3

# Gaussian analytics
EIGEN_CLAMP = 1e-12   # Eigenvalues are clamped to this before square roots
EIGEN_REJECT = 1e-8   # Eigenvalues below this break the SPD contract
SYMMETRY_TOL = 1e-12
MGF_PROPOSAL_SCALE = 4.0  # Std of the N(0, s^2) proposal for Monte Carlo MGF estimates; finite variance needs s^2 > 1 / (2 (1 - 2b))

# Output
CSV_FLOAT_FORMAT = "%.17g"

# Logging configuration
LOG_LEVEL = "INFO"

# Environment
SEED_OVERRIDE_ENV = "FMK_SEED_OVERRIDE"
