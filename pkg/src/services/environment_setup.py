"""
Environment Setup Service

Handles logging configuration and worker-thread settings for a run.
"""

import logging
import sys
from typing import Optional

from config.settings import APP_NAME, DEFAULT_THREADS, LOG_LEVEL

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class EnvironmentSetup:
    """
    Manages environment setup and configuration for SocialForge.

    This class handles:
    - Configuring the root logger from SOCIALFORGE_LOG (or --verbose)
    - Resolving the worker-thread count used by interaction refinement
      and multi-graph metric comparison
    """

    def __init__(self, log_level: Optional[str] = None, threads: Optional[int] = None,
                 verbose: bool = False):
        """
        Initialize the EnvironmentSetup.

        Args:
            log_level: Logging level name (defaults to SOCIALFORGE_LOG, then INFO)
            threads: Worker threads (defaults to SOCIALFORGE_THREADS, then the CPU count)
            verbose: Force DEBUG logging
        """
        self.log_level = "DEBUG" if verbose else (log_level or LOG_LEVEL).upper()
        self.threads = threads if threads is not None else DEFAULT_THREADS
        self.verbose = verbose

    def setup(self) -> int:
        """
        Configure logging on stderr and validate the thread count.

        Returns:
            int: Resolved worker-thread count
        """
        level = logging.getLevelName(self.log_level)
        if not isinstance(level, int):
            print(f"⚠ Unknown log level {self.log_level!r}, using INFO", file=sys.stderr)
            level = logging.INFO
        logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)
        if self.threads < 1:
            raise ValueError(f"threads must be positive, got {self.threads}")
        logging.getLogger(__name__).debug("%s logging at %s with %d threads",
                                          APP_NAME, logging.getLevelName(level), self.threads)
        return self.threads
