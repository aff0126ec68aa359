#!/usr/bin/env python3
"""
Run an nidc command from a source checkout without installing the package.

Usage:
    python3 scripts/run_nidc.py validate --config config/scenarios/wave_memory.yaml
    python3 scripts/run_nidc.py sweep --config config/scenarios/scalar_steering.yaml --eps 0.1,0.01,0.001
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from nidc.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
