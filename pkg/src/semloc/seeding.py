"""Deterministic RNG derivation.

All randomness in a run flows from a single root seed. Sub-streams are
derived as PCG64(SeedSequence([seed, phase, *indices])) with the phase
constants below, so any component can be re-run in isolation with the exact
generator it saw inside the full pipeline. This rule is recorded in run
manifests and trajectory headers.
"""

from __future__ import annotations

import numpy as np

# filter phases
PH_INIT = 0
PH_PREDICT = 1
PH_RESAMPLE = 2
PH_INJECT = 3
# simulator streams
PH_SIM_ODOMETRY = 10
PH_SIM_SCAN = 11
PH_SIM_OBJECTS = 12
PH_SIM_TEXT = 13
PH_SIM_PERTURB = 14
PH_SIM_TEXTOBS = 15

SEED_RULE = "PCG64(SeedSequence([seed, phase, *indices]))"

_MASK = (1 << 64) - 1


def make_rng(seed: int, *path: int) -> np.random.Generator:
    entropy = [int(seed) & _MASK] + [int(p) & _MASK for p in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
