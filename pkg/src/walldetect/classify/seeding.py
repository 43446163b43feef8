import numpy as np


def derive_seed(*parts: int) -> int:
    """64-bit seed determined by the integer tuple ``parts``."""
    lo, hi = np.random.SeedSequence([int(p) for p in parts]).generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)
