# Copyright 2024
# Directory: fedgw-sim/main.py

"""
Root Entry Point.

Runs the command-line front end in app/main.py:
    python main.py run --config light10 --out runs/light10
"""

import sys

from app.main import main

if __name__ == "__main__":
    sys.exit(main())
