from exchangeable_tails.constants import DEFAULT_REL_TOL, GATE_ALPHA

CONFIG = {
    # Gaussian scale mixture: xi | Q ~ N(0, Q^2), mu with (gamma, kappa, c3) = (1, 2, 1/2)
    "mixing": {"gamma": 1.0, "kappa": 2.0, "c3": 0.5},
    "envelope": {"form": "InversePower", "c1": 0.5, "alpha": 2.0, "beta": 2.0},
    "law": {"family": "GaussianScale", "fixed_q": None},
    "grid": {"t_min": 1.0, "t_max": 3.0, "points": 3, "n_list": [1, 10, 100], "t_values": None},
    "mc": {"trials": 1_000_000, "seed": 20240607, "workers": 1, "gate_alpha": GATE_ALPHA},
    "tolerances": {"quadrature": DEFAULT_REL_TOL, "asym_match": 0.05},
    "asym": {"t_min": 100.0, "t_max": 10_000.0, "points": 9},
    "normalization": {
        "gamma": [0.0, 0.5, 2.0],
        "kappa": [0.5, 1.0, 2.0],
        "c3": [0.5, 1.0, 3.0],
    },
    "lemma": {"theta": [0.5, 1.0, 2.5], "p": [0.5, 2.0], "t": [10.0, 100.0, 1000.0, 10_000.0]},
    "exchangeability": {
        "n": 4,
        "edges": [-1.5, -0.75, -0.3, 0.0, 0.3, 0.75, 1.5],
        "trials": 1_000_000,
    },
    "empirical": {"interval": [1.0, None], "n": 100_000, "replications": 100},
    "sweep": {},
    "verify": {"checks": None},
    "out": None,
}

SECTIONS = tuple(k for k, v in CONFIG.items() if isinstance(v, dict))
SWEEPABLE = ("gamma", "kappa", "c3", "c1", "alpha", "beta")
