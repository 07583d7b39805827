"""Default constants for simulation, reconstruction and experiment campaigns."""

# Reconstruction (reweighted inertial proximal alternating minimization)
REWEIGHT_ROUNDS = 6
IPALM_ITERATIONS = 50
REWEIGHT_SCALE = 0.1
REWEIGHT_FLOOR = 1e-12
INERTIA = 0.9
INITIAL_STEP = 1.0
STEP_GROWTH = 4.0
MAX_HALVINGS = 60
EARLY_STOP_TOLERANCE = 1e-10
EARLY_STOP_PATIENCE = 10
LOCATION_THRESHOLD = 0.5

# Sample generation
REJECTION_DRAW_CAP = 100_000

# Point-spread function
FD_STEP = 1e-6
PSF_TAIL_RATIO = 1e-3

# Diagnostics
CUTOFF_EPSILON = 0.01
SUPPORT_TOLERANCE = 1e-6

# Experiment campaigns
TRIALS_PER_CELL = 20
SUPPORT_TOLERANCE_PX = 1

# Environment
THREADS_ENV_VAR = "LSCS_THREADS"
