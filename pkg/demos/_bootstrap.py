"""Make the demos runnable from a fresh checkout without installing."""

import os
import sys

_SRC = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "src"))
if _SRC not in sys.path:
    sys.path.insert(0, _SRC)


def output_dir(name):
    out = os.path.join(os.path.dirname(__file__), "output", name)
    os.makedirs(out, exist_ok=True)
    return out
