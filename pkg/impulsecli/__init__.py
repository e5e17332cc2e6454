"""
Impulse - quantum-limited impulse sensing calculator

Force noise spectra, squeezing strategies and momentum detection thresholds
for cavity and dielectric-slab optomechanical sensors.
"""

__version__ = "0.3.0"
__author__ = "Impulse Team"
