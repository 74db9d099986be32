"""Shared fixtures: reference system objects, small oracle-sized system."""

import numpy as np
import pytest

from cazacsync.frame import FrameConfig, assemble_frame, random_payload
from cazacsync.sequences import build_training_symbol, pn_sequence

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cfg():
    """Reference numerology: 512-point grid at 40 GSa/s, 412 subcarriers."""
    return FrameConfig()


@pytest.fixture(scope="session")
def pn(cfg):
    return pn_sequence(cfg.m, seed=7)


@pytest.fixture(scope="session")
def ts(cfg, pn):
    return build_training_symbol(cfg.n, cfg.n_sc, cfg.n_sc // 2 - 1, pn, cfg.n_cp)


@pytest.fixture(scope="session")
def short_frame(cfg, ts):
    """One SYN, one TS, ten data symbols."""
    return assemble_frame(ts, cfg, random_payload(cfg, 10, seed=33))


@pytest.fixture(scope="session")
def small_cfg():
    """Oracle-sized system for brute-force comparisons."""
    return FrameConfig(n=64, n_sc=52, n_cp=6, sample_rate=1e9)


@pytest.fixture(scope="session")
def small_ts(small_cfg):
    pn = pn_sequence(small_cfg.m, seed=3)
    return build_training_symbol(small_cfg.n, small_cfg.n_sc, 25, pn, small_cfg.n_cp)


def delayed_buffer(frame_samples, delay, tail=300):
    return np.concatenate(
        [np.zeros(delay, dtype=complex), frame_samples, np.zeros(tail, dtype=complex)]
    )
