#!/usr/bin/env python3
"""Run the lsi-forge verification toolkit.

Usage:
    python run_lsi_forge.py <command> [flags]

Commands:
    - verify-lsi     Sample and minimize f on the positive sphere
    - kkt-search     Search the absorbed stationary system
    - cascade        Verify the auxiliary chains h, h1..h8
    - pair-check     Pair condition and quadratic inequality (--tower for all pairs)
    - induction      Monte-Carlo check of the n -> 2n step
    - hyper-time     Optimal hypercontractive time by bisection
    - entropy-split  Entropy of an interleaved vector

Exit codes: 0 claim holds, 1 counterexample found, 2 bad input.
"""

import os
import sys

# Set default environment variables
os.environ.setdefault("LSI_FORGE_LOG_LEVEL", "INFO")

try:
    from lsi_forge.cli import main

    sys.exit(main())
except KeyboardInterrupt:
    print("\n\nInterrupted", file=sys.stderr)
    sys.exit(130)
