"""Exact jet calculus for gluing data of surface neighborhoods of a rational curve.

The package decides, order by order, whether a neighborhood germ presented
by a gluing jet admits a formal singular foliation with prescribed leading
data, and produces replayable certificates for the ranks and obstructions
it encounters along the way.
"""

__version__ = "0.1.0"
