"""Numerical checks of the ingredients behind the error bound.

Samples (g, h) pairs, keeps those inside the high-probability events and
confirms the deterministic comparison step never fails. Prints one CSV
row per check.
"""

import os
import sys

from lassogeom.cli import main

here = os.path.dirname(os.path.abspath(__file__))
sys.exit(main(["prove", "--config", os.path.join(here, "figure2.cfg")]))
