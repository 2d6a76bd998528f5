"""Global enumeration budget.

Every word enumeration in the toolkit honours a hard cap: exceeding it
raises BudgetExceeded instead of silently truncating.  The default can be
overridden with the AFFINEDIM_WORD_CAP environment variable or per call.
"""

import os

DEFAULT_WORD_CAP = 5_000_000


def word_cap(override=None):
    if override is not None:
        return int(override)
    env = os.environ.get("AFFINEDIM_WORD_CAP")
    if env:
        return int(env)
    return DEFAULT_WORD_CAP
