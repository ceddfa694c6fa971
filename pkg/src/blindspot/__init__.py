"""Blind-spot and coverage estimation for multi-sensor vehicle rigs.

Simulated LiDAR and depth-camera rigs are probed with a randomly re-posed
dense reference scanner; per-probe blind-spot radii are binned into
bird's-eye grids and summarized over regions of interest.
"""

__version__ = "0.1.0"
