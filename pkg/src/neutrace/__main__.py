"""Allow running the command line interface as ``python -m neutrace``."""

import sys

from .cli import main

sys.exit(main())
