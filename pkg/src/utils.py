"""
Shared utility functions for the GLA pipeline.
Provides logging setup, deterministic CSV/JSON writers, and artifact cleanup.
"""

import json
import logging
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd

import config


def setup_logging(script_name, log_dir=None):
    """Configure logging with console (INFO) and file (DEBUG) handlers.

    Handlers go on the ``src`` package logger so every module logging through
    ``logging.getLogger(__name__)`` ends up in the same console and file.
    """
    log_dir = Path(log_dir) if log_dir is not None else config.LOG_DIR
    log_dir.mkdir(parents=True, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = log_dir / f"{script_name}_{timestamp}.log"

    package_logger = logging.getLogger("src")
    package_logger.setLevel(logging.DEBUG)
    for handler in list(package_logger.handlers):
        package_logger.removeHandler(handler)
        handler.close()

    # Console handler
    console = logging.StreamHandler()
    console.setLevel(logging.INFO)
    console.setFormatter(logging.Formatter("%(levelname)s - %(message)s"))
    package_logger.addHandler(console)

    # File handler
    fh = logging.FileHandler(log_file)
    fh.setLevel(logging.DEBUG)
    fh.setFormatter(
        logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    )
    package_logger.addHandler(fh)

    logger = logging.getLogger(f"src.{script_name}")
    logger.info(f"Logging to {log_file}")
    return logger


def _to_builtin(value):
    """Convert numpy scalars/arrays so json can serialize them."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps_json(payload):
    """Serialize with sorted keys and fixed indentation so equal input gives equal bytes."""
    return json.dumps(payload, indent=2, sort_keys=True, default=_to_builtin) + "\n"


def write_json(payload, filepath):
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    filepath.write_text(dumps_json(payload), encoding="utf-8")
    return filepath


def write_csv(df, filepath, logger=None):
    """Write a DataFrame without the index; floats keep full round-trip precision."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(filepath, index=False, lineterminator="\n")
    if logger:
        logger.info(f"Saved {len(df)} rows to {filepath.name}")
    return filepath


def read_csv(filepath):
    return pd.read_csv(filepath, float_precision="round_trip")


def remove_artifacts(paths, logger=None):
    """Delete files written by a run that did not finish."""
    for path in paths:
        path = Path(path)
        if path.is_file():
            path.unlink()
            if logger:
                logger.debug(f"Removed partial artifact {path}")
        elif path.is_dir() and not any(path.iterdir()):
            path.rmdir()
