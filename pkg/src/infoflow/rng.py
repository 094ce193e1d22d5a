"""Counter-based per-trajectory random substreams.

Every random draw in the package flows from one master seed through
``substream(seed, trajectory_index, channel)``.  Trajectories therefore get
statistically independent streams that do not depend on evaluation order,
which makes ensemble results reproducible under any parallel schedule.
"""

import numpy as np

CHANNEL_DYNAMICS = 0   # dW, the dynamical Wiener noise
CHANNEL_OBSERVATION = 1  # dU, the observation Wiener noise
CHANNEL_INITIAL = 2    # initial-state sampling


def substream(seed: int, trajectory_index: int, channel: int) -> np.random.Generator:
    """Generator for one (trajectory, channel) pair.

    Identical arguments always yield an identical stream, on any platform
    supported by numpy's SeedSequence spawning.
    """
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(int(trajectory_index), int(channel)))
    return np.random.default_rng(ss)
