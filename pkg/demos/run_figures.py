"""Write both figures (CSV and SVG) for the configuration next to this file.

Equivalent to ``lassogeom figures --config demos/figure2.cfg``.
"""

import os
import sys

from lassogeom.cli import main

here = os.path.dirname(os.path.abspath(__file__))
sys.exit(main(["-v", "figures", "--config", os.path.join(here, "figure2.cfg")]))
