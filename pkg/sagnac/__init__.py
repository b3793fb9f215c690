"""
Polarization-Sagnac entangled photon source: state synthesis, photon-counting
simulation and fringe/CHSH analysis.
"""

__version__ = "1.0.0"
