"""Iodine-stabilized 501.7 nm laser chain simulator.

Thin wrapper over the C++ core: deterministic scenarios (lineshape scans,
LMS noise cancellation, locking, comb counting) plus the analysis helpers.
"""

import json as _json

from ._core import (
    ConfigError,
    __version__,
    allan_deviation,
    config_hash,
    default_config,
    fit_dispersion,
    fm_error_signal,
    khz_roundtrip,
    lms_notch,
    pressure_shift_hz,
    ram_lock_shift,
    reconstruct_khz,
    scenario_names,
    validate_config,
    welch_psd,
)
from . import _core as _core

__all__ = [
    "ConfigError",
    "__version__",
    "allan_deviation",
    "config_hash",
    "default_config",
    "fit_dispersion",
    "fm_error_signal",
    "khz_roundtrip",
    "lms_notch",
    "pressure_shift_hz",
    "ram_lock_shift",
    "reconstruct_khz",
    "run_scenario",
    "scenario_names",
    "validate_config",
    "welch_psd",
]


def run_scenario(name, out_dir, seed=1, overrides=None, config_file="", check=False):
    """Run one scenario; returns the decoded summary dict.

    The summary carries {scenario, seed, config_hash, version, results} and the
    same bytes are written to <out_dir>/summary.json. Raises RuntimeError if
    check=True and the scenario's pass predicate fails.
    """
    summary_json, check_passed, files = _core.run_scenario(
        name, str(out_dir), seed, overrides or {}, str(config_file), check
    )
    summary = _json.loads(summary_json)
    summary["files"] = files
    if check and not check_passed:
        raise RuntimeError(f"scenario {name} failed its check: {summary['results']}")
    return summary
