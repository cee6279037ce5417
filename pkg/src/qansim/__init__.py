"""Simulator for multicore-fiber quantum access networks.

Models the optical loss and noise (spontaneous Raman scattering,
inter-core crosstalk) along integrated quantum/classical channels,
evaluates decoy-state BB84 error rates and secure key rates, validates
core/wavelength assignments, and plans wavelength-time-division
schedules that trade receiver count against splitter loss and per-user
clock rate.
"""

from . import cwas, physics, qkd, scenario, topology, wtdm

__all__ = ["cwas", "physics", "qkd", "scenario", "topology", "wtdm"]
__version__ = "0.1.0"
