"""Run the command-line interface via ``python -m lgs``."""

import sys

from lgs.cli import main

if __name__ == "__main__":
    sys.exit(main())
