"""
Named parameter sets for the synthetic, chemotaxis and sweep experiments.
"""
from typing import Dict, List

import numpy as np

from dmaps.errors import InvalidParameter

STRIP_M = 2000
SWISS_ROLL_M = 1500
TORUS_M = 3000

# Strips, uniformly sampled unless stated otherwise
STRIP_PRESETS = {
    "strip-2x1": {
        "kind": "strip",
        "params": {"l1": 2.0, "l2": 1.0, "m": STRIP_M},
        "analysis": {"metric": "euclidean", "alpha": 1.0},
        "description": "Uniform strip, L1/L2 = 2 (expected length ratio about 2.2)",
    },
    "strip-4x1": {
        "kind": "strip",
        "params": {"l1": 4.0, "l2": 1.0, "m": STRIP_M},
        "analysis": {"metric": "euclidean", "alpha": 1.0},
        "description": "Uniform strip, L1/L2 = 4; phi_2 and phi_3 are harmonics of phi_1",
    },
    "strip-8x1": {
        "kind": "strip",
        "params": {"l1": 8.0, "l2": 1.0, "m": STRIP_M},
        "analysis": {"metric": "euclidean", "alpha": 1.0},
        "description": "Uniform strip, L1/L2 = 8 (expected length ratio about 8.7)",
    },
    "strip-gaussian-alpha0": {
        "kind": "strip",
        "params": {"l1": 4.0, "l2": 1.0, "m": STRIP_M, "density": "gaussian_in_z1"},
        "analysis": {"metric": "euclidean", "alpha": 0.0},
        "description": "Gaussian-in-z1 strip analysed with the graph Laplacian normalization",
    },
    "strip-gaussian-alpha1": {
        "kind": "strip",
        "params": {"l1": 4.0, "l2": 1.0, "m": STRIP_M, "density": "gaussian_in_z1"},
        "analysis": {"metric": "euclidean", "alpha": 1.0},
        "description": "Gaussian-in-z1 strip with the density factored out",
    },
}

MANIFOLD_PRESETS = {
    "swissroll-h40": {
        "kind": "swissroll",
        "params": {"h": 40.0, "m": SWISS_ROLL_M},
        "analysis": {"metric": "euclidean", "alpha": 1.0},
        "description": "Tall Swiss roll; unique directions {1, 2}",
    },
    "swissroll-h20": {
        "kind": "swissroll",
        "params": {"h": 20.0, "m": SWISS_ROLL_M},
        "analysis": {"metric": "euclidean", "alpha": 1.0},
        "description": "Short Swiss roll; height is captured by phi_5",
    },
    "torus-r3": {
        "kind": "torus",
        "params": {"r1": 3.0, "r2": 1.0, "m": TORUS_M},
        "analysis": {"metric": "euclidean", "alpha": 1.0},
        "description": "Torus r1 = 3; inner circle near components 7 and 8",
    },
    "torus-r5": {
        "kind": "torus",
        "params": {"r1": 5.0, "r2": 1.0, "m": TORUS_M},
        "analysis": {"metric": "euclidean", "alpha": 1.0},
        "description": "Torus r1 = 5; inner circle near components 11 and 12",
    },
    "torus-r10": {
        "kind": "torus",
        "params": {"r1": 10.0, "r2": 1.0, "m": TORUS_M},
        "analysis": {"metric": "euclidean", "alpha": 1.0},
        "description": "Torus r1 = 10; inner circle near components 15 and 16",
    },
}


def _chemotaxis(switch_rate: float, speed: float, description: str) -> Dict:
    return {
        "kind": "chemotaxis",
        "params": {"switch_rate": switch_rate, "speed": speed, "t_max": 10.0, "dt": 1.0,
                   "n_cells": 1000, "runs": 10, "n_bins": 32},
        "analysis": {"metric": "emd", "alpha": 1.0},
        "description": description,
    }


CHEMOTAXIS_PRESETS = {
    "chemotaxis-l1": _chemotaxis(1.0, 1.0, "Slow switching; embedding correlates with p and t"),
    "chemotaxis-l100": _chemotaxis(100.0, 10.0, "Unique directions {1, 2}"),
    "chemotaxis-l400": _chemotaxis(400.0, 20.0, "Fast switching; velocities equilibrate"),
    "chemotaxis-l1600": _chemotaxis(1600.0, 40.0, "Unique directions {1, 3}"),
    "chemotaxis-l6400": _chemotaxis(6400.0, 80.0, "Unique directions {1, 4}"),
}

SWEEP_PRESETS = {
    "sweep-desk": {
        "kind": "sweep",
        "params": {
            "lambdas": np.logspace(-1, 1, 4).tolist(),
            "t_obs_values": np.logspace(-2, 0, 4).tolist(),
            "replicates": 3,
            "n_cells": 1000,
            "runs": 10,
            "n_bins": 32,
        },
        "analysis": {"metric": "emd", "alpha": 1.0},
        "description": "4 x 4 (lambda, t_obs) grid around the t_obs = 1/lambda transition",
    },
}

PRESETS: Dict[str, Dict] = {**STRIP_PRESETS, **MANIFOLD_PRESETS, **CHEMOTAXIS_PRESETS, **SWEEP_PRESETS}


def get_preset(name: str) -> Dict:
    """Look up a preset by name"""
    if name not in PRESETS:
        raise InvalidParameter(f"Unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]


def list_presets() -> List[Dict]:
    """All presets with their names, in declaration order"""
    return [{"name": name, **preset} for name, preset in PRESETS.items()]


def dataset_presets() -> List[str]:
    """Names of presets that generate a single dataset"""
    return [name for name, preset in PRESETS.items() if preset["kind"] != "sweep"]
