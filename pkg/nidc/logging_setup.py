"""Run-log configuration shared by the CLI entry points."""

import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Optional, Tuple


def setup_logging(command: str, out_dir: Optional[Path] = None) -> Tuple[logging.Logger, str]:
    """Setup logging with a command-specific log file inside out_dir"""
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    level_name = os.getenv("NIDC_LOG_LEVEL", "INFO").upper()
    level = getattr(logging, level_name, logging.INFO)

    handlers: list = [logging.StreamHandler()]
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(out_dir / f'nidc_{command}_{timestamp}.log'))

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )
    return logging.getLogger("nidc"), timestamp
