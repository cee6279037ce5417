# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo gate tally.

Mirrors qansim._mc_fallback.tally_gates over the same pre-drawn random
arrays; results are bit-identical between the two backends.
"""

import numpy as np

cimport numpy as cnp


def tally_gates(cnp.int64_t[::1] photons,
                cnp.float64_t[::1] u_photon,
                cnp.float64_t[::1] u_background,
                cnp.float64_t[::1] u_error,
                double eta, double y0, double e_det):
    cdef Py_ssize_t n_gates = photons.shape[0]
    cdef Py_ssize_t g, k, ptr = 0
    cdef long long clicks = 0, errors = 0
    cdef bint signal
    cdef double p_err
    for g in range(n_gates):
        signal = False
        for k in range(photons[g]):
            if u_photon[ptr] < eta:
                signal = True
            ptr += 1
        if signal or u_background[g] < y0:
            clicks += 1
            p_err = e_det if signal else 0.5
            if u_error[g] < p_err:
                errors += 1
    return int(clicks), int(errors)
