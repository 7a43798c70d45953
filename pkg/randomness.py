"""
Seeded random streams for burstsim.

Every stochastic draw in a run goes through a numpy PCG64 generator derived
from the scenario seed and a named stream, so that adding draws to one concern
(say, telemetry noise) never shifts the draws of another (workload generation).

Draw order inside each stream:
  workload   - one child per workload entry (index), then per job/vertex/task in
               declaration order: demand, then duration
  scheduler  - one permutation per random_order scheduling pass
  telemetry  - per actual sample and node, in node_id order: one normal draw for
               cpu credits (nodes with a cpu bucket only), then one for disk credits
"""

import numpy as np

STREAMS = {
    "workload": 1,
    "scheduler": 2,
    "telemetry": 3,
}


def make_rng(seed, stream, *extra):
    """
    Build an independent generator for one named stream.

    Args:
        seed: Scenario seed (unsigned 64-bit integer)
        stream: Name from STREAMS
        *extra: Further integer keys (e.g. the workload entry index)

    Returns:
        numpy.random.Generator backed by PCG64
    """
    if stream not in STREAMS:
        raise KeyError(f"Unknown random stream: {stream}")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(STREAMS[stream], *[int(k) for k in extra]))
    return np.random.Generator(np.random.PCG64(sequence))
