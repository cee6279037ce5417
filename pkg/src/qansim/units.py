"""Unit conversions and physical constants.

All internal computation uses linear units (watts, dimensionless
transmittance); dB and dBm appear only at interfaces.
"""

import math

PLANCK_J_S = 6.62607015e-34  # J*s
LN10_OVER_10 = math.log(10.0) / 10.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    return 10.0 * math.log10(linear)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts / 1e-3)


def attenuation_db_per_km_to_linear(db_per_km: float) -> float:
    """Convert a dB/km attenuation coefficient to natural units (1/km)."""
    return db_per_km * LN10_OVER_10


def photon_energy_j(frequency_thz: float) -> float:
    """Energy of one photon at the given frequency (THz)."""
    return PLANCK_J_S * frequency_thz * 1e12
