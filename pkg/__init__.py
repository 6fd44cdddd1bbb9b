"""
Anisotropic Walk Lab
Simulation and verification of random walks on Z^2 with column-dependent step laws
"""
