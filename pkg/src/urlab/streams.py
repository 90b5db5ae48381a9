"""Keyed random-number streams for reproducible parallel replication.

Every consumer of randomness addresses its stream by a (base_seed, role,
index, attempt) key instead of drawing from a shared generator.  The key
is hashed through SeedSequence, so replication ``index`` receives the
same draws no matter which worker runs it, in what order replications
finish, or how work is chunked.
"""

from numpy.random import Generator, PCG64DXSM, SeedSequence

# Series roles.  Keep values stable: they are part of the reproducibility
# contract (changing them reshuffles every seeded experiment).
ROLE_PATH = 0       # finite-n trajectory innovations, one stream per replication
ROLE_BM = 1         # Brownian increment batches for limit-law sampling
ROLE_CONSTANTS = 2  # Brownian increment batches for constant estimation


def substream(base_seed: int, role: int, index: int, attempt: int = 0) -> Generator:
    """Independent generator for one (role, index, attempt) cell.

    ``attempt`` > 0 tags resampled replacements for degenerate draws so
    that retries stay deterministic too.
    """
    seq = SeedSequence(entropy=base_seed, spawn_key=(role, index, attempt))
    return Generator(PCG64DXSM(seq))
