#!/usr/bin/env python3
"""
hetcell_cli.py - hetcell コマンドラインの入口

    python scripts/hetcell_cli.py --help
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from hetcell.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
