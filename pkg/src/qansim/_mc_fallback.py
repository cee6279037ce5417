"""NumPy implementation of the Monte Carlo gate tally.

Consumes exactly the same pre-drawn random arrays as the compiled kernel
in qansim._mckernel, so both backends produce identical results.
"""

import numpy as np


def tally_gates(photons, u_photon, u_background, u_error, eta, y0, e_det):
    """Count clicks and errors for one chunk of detector gates.

    photons[g] photons arrive in gate g; photon j survives when
    u_photon[j] < eta (photon draws are laid out gate-major).  The
    background fires when u_background[g] < y0.  A signal click errs with
    probability e_det, a background-only click with probability 1/2.
    """
    n_gates = photons.shape[0]
    gate_ids = np.repeat(np.arange(n_gates), photons)
    survivors = np.bincount(
        gate_ids, weights=(u_photon < eta).astype(np.float64), minlength=n_gates
    )
    signal = survivors > 0
    background = u_background < y0
    click = signal | background
    p_err = np.where(signal, e_det, 0.5)
    error = click & (u_error < p_err)
    return int(np.count_nonzero(click)), int(np.count_nonzero(error))
