"""
Console entry point.

Installed as the ``qvote`` script; also runnable with ``python -m qvote.main``.
"""

import sys

from qvote.cli import main


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
