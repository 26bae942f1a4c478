DEFAULT_REL_TOL: float = 1e-10
MIN_REL_TOL: float = 1e-13
MAX_REL_TOL: float = 1e-2
EVAL_BUDGET: int = 1 << 20  # integrand evaluations per integral
MIN_LEVELS: int = 3  # trapezoid refinements before convergence is trusted

GAMMA_MAX_ARG: float = 171.62  # Gamma overflows float64 past this

MC_BLOCK: int = 1 << 13  # trials per RNG stream block
CI_ALPHA: float = 0.05
GATE_ALPHA: float = 1e-3
SWEEP_CAP: int = 10_000  # lattice points

ENTRYPOINT_GROUP: str = "exchangeable_tails.checks"

EXIT_OK: int = 0
EXIT_VERIFY_FAILED: int = 1
EXIT_CONFIG: int = 2
EXIT_NONCONVERGENCE: int = 3
