"""Intelligent electrochromic rearview-mirror system.

Glare quantification, a stacking voltage predictor, a simulated edge-node
fleet, and a cloud service that federates node updates into successive
global model versions.
"""

__version__ = "0.1.0"
