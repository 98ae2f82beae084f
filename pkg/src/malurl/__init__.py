"""Malicious-website detection with histogram gradient boosting."""
import os
import warnings

from numba import config as _numba_config

# workqueue aborts when grid-search threads call parallel kernels concurrently
if "NUMBA_THREADING_LAYER" not in os.environ:
    _numba_config.THREADING_LAYER = "threadsafe"
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

__version__ = "0.1.0"
