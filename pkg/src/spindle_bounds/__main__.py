import sys

from spindle_bounds.cli import main

if __name__ == "__main__":
    sys.exit(main())
