# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loop: advance a batch of chains over one block of steps.

Mirrors ``hrlopt.engine._advance_block_py`` operation for operation — same
expression grouping, same coordinate-ordered energy accumulation, separate
sin/cos calls — so both engines produce bit-identical trajectories (the
extension is built with -ffp-contract=off to keep fused multiply-adds out).
"""

from libc.math cimport cos, sin, M_PI

import numpy as np

cdef double TWO_PI = 2.0 * M_PI

# Kernel ids, kept in sync with hrlopt.potentials.
cdef int POT_RASTRIGIN = 1
cdef int POT_QUADRATIC = 2


def advance_block(int pot_id, double[::1] pot_params,
                  double[::1] grad_x, double[::1] vel, double[::1] decay,
                  double[::1] grad_y, double[::1] noise_xx, double[::1] noise_yx,
                  double[::1] noise_yy, int j0,
                  double[:, ::1] x, double[:, ::1] y,
                  double[:, :, :, ::1] noise, double[:, ::1] u_out,
                  double[::1] best_value, double[:, ::1] best_point):
    """Advance all chains through ``u_out.shape[1]`` steps, in place.

    ``u_out[c, j]`` receives the energy of chain ``c`` at the pre-step state
    of iteration ``j0 + j``; per-chain best energies and points are updated
    against those same states.
    """
    cdef Py_ssize_t n_chains = x.shape[0]
    cdef Py_ssize_t dim = x.shape[1]
    cdef Py_ssize_t n_block = u_out.shape[1]
    cdef Py_ssize_t c, i, j
    cdef int k
    cdef double u, gxk, vwk, edk, gyk, l11k, l21k, l22k, xn, xv, gi, mu, half_mu

    if pot_id != POT_RASTRIGIN and pot_id != POT_QUADRATIC:
        raise ValueError(f"unsupported kernel id {pot_id}")
    if pot_id == POT_QUADRATIC:
        if pot_params.shape[0] != 1 + dim:
            raise ValueError("quadratic kernel expects [curvature, center...] parameters")
        mu = pot_params[0]
        half_mu = 0.5 * mu

    grad = np.empty(dim)
    cdef double[::1] g = grad

    # Chains are independent, so the outer loop runs per chain: its state and
    # noise block stay cache-resident for the whole inner step loop.
    with nogil:
        for c in range(n_chains):
            for j in range(n_block):
                k = j0 + <int> j
                gxk = grad_x[k]
                vwk = vel[k]
                edk = decay[k]
                gyk = grad_y[k]
                l11k = noise_xx[k]
                l21k = noise_yx[k]
                l22k = noise_yy[k]
                # Gradient and energy at the pre-step state, one pass.
                if pot_id == POT_RASTRIGIN:
                    u = <double> dim
                    for i in range(dim):
                        xv = x[c, i]
                        g[i] = 2.0 * xv + TWO_PI * sin(TWO_PI * xv)
                        u = u + (xv * xv - cos(TWO_PI * xv))
                else:
                    u = 0.0
                    for i in range(dim):
                        xv = x[c, i] - pot_params[1 + i]
                        g[i] = mu * xv
                        if i == 0:
                            u = xv * xv
                        else:
                            u = u + xv * xv
                    u = half_mu * u
                u_out[c, j] = u
                if u < best_value[c]:
                    best_value[c] = u
                    for i in range(dim):
                        best_point[c, i] = x[c, i]
                for i in range(dim):
                    gi = g[i]
                    xn = (x[c, i] - gxk * gi + vwk * y[c, i]) + l11k * noise[c, j, 0, i]
                    y[c, i] = (edk * y[c, i] - gyk * gi + l21k * noise[c, j, 0, i]) \
                        + l22k * noise[c, j, 1, i]
                    x[c, i] = xn
