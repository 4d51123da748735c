"""
Configuration file for dynmand.

This file contains all configurable parameters for the heights, Green's
function, root finding and rendering pipelines. Every value can be
overridden through an environment variable (or a .env file).
"""

import os
from typing import Dict, Any
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("true", "1", "t", "yes")


def validate_config(config: Dict[str, Any], section: str):
    """
    Validate a configuration dictionary.

    Args:
        config: The configuration dictionary to validate
        section: The name of the configuration section (for error messages)

    Raises:
        ValueError: If any required keys are missing or have invalid values
    """
    required_keys = {
        "NUMERIC_PARAMS": [
            "tol",
            "iter_cap",
            "escape_cycle_window",
            "cycle_tol",
            "trap_slack",
            "nonarch_iter_cap",
            "nonarch_work_digits",
        ],
        "ALGEBRA_PARAMS": [
            "degree_cap",
            "extra_bits",
        ],
        "ROOT_PARAMS": [
            "dps",
            "max_iter",
            "cert_tol",
            "dedup_factor",
        ],
        "PROBE_PARAMS": [
            "min_exp",
            "max_exp",
            "radii",
            "angles",
            "safety",
        ],
        "RENDER_PARAMS": [
            "g_cap",
            "threads",
        ],
        "EXPERIMENT_PARAMS": [
            "pairing_tol",
            "equidist_threshold",
            "growth_increments",
        ],
    }

    for key in required_keys[section]:
        if key not in config:
            raise ValueError(f"Missing required key '{key}' in {section} configuration")

    # Additional validation for specific keys
    if section == "NUMERIC_PARAMS":
        if config["tol"] <= 0:
            raise ValueError(f"tol must be positive (got {config['tol']})")

        if config["iter_cap"] < 1 or config["nonarch_iter_cap"] < 1:
            raise ValueError(f"iteration caps must be at least 1 (got {config['iter_cap']}, {config['nonarch_iter_cap']})")

        if config["trap_slack"] <= 0:
            raise ValueError(f"trap_slack must be positive (got {config['trap_slack']})")

    elif section == "ALGEBRA_PARAMS":
        if config["degree_cap"] < 1:
            raise ValueError(f"degree_cap must be at least 1 (got {config['degree_cap']})")

    elif section == "ROOT_PARAMS":
        if config["dps"] < 15:
            raise ValueError(f"dps must be at least 15 (got {config['dps']})")

        if config["cert_tol"] <= 0:
            raise ValueError(f"cert_tol must be positive (got {config['cert_tol']})")

    elif section == "PROBE_PARAMS":
        if config["max_exp"] <= config["min_exp"]:
            raise ValueError(f"max_exp must exceed min_exp (got {config['min_exp']}..{config['max_exp']})")

        if config["radii"] < 2 or config["angles"] < 1:
            raise ValueError(f"probe grid needs at least 2 radii and 1 angle (got {config['radii']}, {config['angles']})")

        if config["safety"] < 1:
            raise ValueError(f"safety must be at least 1 (got {config['safety']})")

    elif section == "RENDER_PARAMS":
        if config["g_cap"] <= 0:
            raise ValueError(f"g_cap must be positive (got {config['g_cap']})")

        if config["threads"] < 1:
            raise ValueError(f"threads must be at least 1 (got {config['threads']})")

    elif section == "EXPERIMENT_PARAMS":
        if config["pairing_tol"] <= 0:
            raise ValueError(f"pairing_tol must be positive (got {config['pairing_tol']})")


# Logging configuration
LOG_LEVEL = os.getenv("DYNMAND_LOG_LEVEL", "WARNING")
LOG_FILE = os.getenv("DYNMAND_LOG_FILE", "")
DEBUG_LOGS = _env_flag("DYNMAND_DEBUG_LOGS", "False")

# Numerical parameters for escape-rate and height computations
NUMERIC_PARAMS = {
    "tol": float(os.getenv("DYNMAND_TOL", "1e-8")),                        # Default error tolerance
    "iter_cap": int(os.getenv("DYNMAND_ITER_CAP", "10000")),              # Archimedean iteration cap
    "escape_cycle_window": int(os.getenv("DYNMAND_CYCLE_WINDOW", "256")),  # Extra iterations spent looking for a cycle
    "cycle_tol": float(os.getenv("DYNMAND_CYCLE_TOL", "1e-13")),          # Relative distance that counts as a revisit
    "trap_slack": float(os.getenv("DYNMAND_TRAP_SLACK", "1.0")),          # Multiplier on tol for trapped orbits
    "nonarch_iter_cap": int(os.getenv("DYNMAND_NONARCH_ITER_CAP", "64")),  # p-adic iteration cap
    "nonarch_work_digits": int(os.getenv("DYNMAND_NONARCH_DIGITS", "64")), # p-adic working precision
}

# Exact algebra parameters
ALGEBRA_PARAMS = {
    "degree_cap": int(os.getenv("DYNMAND_DEGREE_CAP", str(10**6))),  # Largest symbolic iterate degree
    "extra_bits": int(os.getenv("DYNMAND_EXTRA_BITS", "64")),        # Extra precision for inexact normalization
}

# Root refinement parameters
ROOT_PARAMS = {
    "dps": int(os.getenv("DYNMAND_ROOT_DPS", "50")),            # Working decimal digits
    "max_iter": int(os.getenv("DYNMAND_ROOT_MAX_ITER", "500")),  # Aberth sweeps before giving up
    "cert_tol": float(os.getenv("DYNMAND_CERT_TOL", "1e-20")),  # Relative residual accepted as certified
    "dedup_factor": float(os.getenv("DYNMAND_DEDUP_FACTOR", "10")),
}

# Analyticity probe grid
PROBE_PARAMS = {
    "min_exp": float(os.getenv("DYNMAND_PROBE_MIN_EXP", "0")),  # Smallest radius 10**min_exp
    "max_exp": float(os.getenv("DYNMAND_PROBE_MAX_EXP", "6")),  # Largest radius 10**max_exp
    "radii": int(os.getenv("DYNMAND_PROBE_RADII", "25")),
    "angles": int(os.getenv("DYNMAND_PROBE_ANGLES", "16")),
    "safety": float(os.getenv("DYNMAND_PROBE_SAFETY", "2.0")),  # Required |c(l)| / R_l
}

# Rendering parameters
RENDER_PARAMS = {
    "g_cap": float(os.getenv("DYNMAND_G_CAP", "4.0")),        # Green value mapped to white
    "threads": int(os.getenv("DYNMAND_THREADS", "1")),        # Worker processes
}

# Experiment parameters
EXPERIMENT_PARAMS = {
    "pairing_tol": float(os.getenv("DYNMAND_PAIRING_TOL", "1e-6")),
    "equidist_threshold": float(os.getenv("DYNMAND_EQUIDIST_THRESHOLD", "0.05")),
    "growth_increments": int(os.getenv("DYNMAND_GROWTH_INCREMENTS", "3")),
}

LOGGING_CONFIG = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "standard": {
            "format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
        },
    },
    "handlers": {
        "default": {
            "level": "DEBUG" if DEBUG_LOGS else LOG_LEVEL,
            "formatter": "standard",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "dynmand": {
            "handlers": ["default"],
            "level": "DEBUG" if DEBUG_LOGS else LOG_LEVEL,
            "propagate": False
        },
    }
}

if LOG_FILE:
    LOGGING_CONFIG["handlers"]["file"] = {
        "level": "DEBUG",
        "formatter": "standard",
        "class": "logging.FileHandler",
        "filename": LOG_FILE,
        "mode": "a",
    }
    LOGGING_CONFIG["loggers"]["dynmand"]["handlers"].append("file")

# Validate configurations
validate_config(NUMERIC_PARAMS, "NUMERIC_PARAMS")
validate_config(ALGEBRA_PARAMS, "ALGEBRA_PARAMS")
validate_config(ROOT_PARAMS, "ROOT_PARAMS")
validate_config(PROBE_PARAMS, "PROBE_PARAMS")
validate_config(RENDER_PARAMS, "RENDER_PARAMS")
validate_config(EXPERIMENT_PARAMS, "EXPERIMENT_PARAMS")
