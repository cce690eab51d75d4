"""Offline figure generation for mfac run outputs.

Stateless file-to-file transforms: read the solver's metrics CSV / summary
JSON / histogram JSON, draw one of the three standard figure layouts, write an
image. No solver math is recomputed here; every analytic curve is read from
the input files.
"""

__version__ = "0.1.0"
