"""Numba setup shared by the compiled modules."""
from __future__ import annotations

import os

import numba

WORKERS_ENV = "DUALAPPROX_WORKERS"

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"


def set_workers(n):
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def workers_from_env():
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        return set_workers(int(raw))
    return None
