# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-step RK4 propagation of the linear matrix ODE X' = F(t) X."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _matmul(const double[:, ::1] a, double[:, ::1] b, double[:, ::1] out, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t i, j, l
    cdef double s
    for i in range(k):
        for j in range(k):
            s = 0.0
            for l in range(k):
                s += a[i, l] * b[l, j]
            out[i, j] = s


def rk4_propagate(const double[:, :, ::1] gen, double h, const double[:, ::1] x0, const cnp.int64_t[::1] record):
    cdef Py_ssize_t k = x0.shape[0]
    cdef Py_ssize_t nsteps = (gen.shape[0] - 1) // 2
    cdef Py_ssize_t nrec = record.shape[0]
    cdef Py_ssize_t s, i, j, r = 0
    cdef double h2 = 0.5 * h, h6 = h / 6.0

    x_arr = np.array(x0, dtype=np.float64, copy=True)
    rec_arr = np.empty((nrec, k, k), dtype=np.float64)
    cdef double[:, ::1] x = x_arr
    cdef double[:, :, ::1] rec = rec_arr
    cdef double[:, ::1] k1 = np.empty((k, k))
    cdef double[:, ::1] k2 = np.empty((k, k))
    cdef double[:, ::1] k3 = np.empty((k, k))
    cdef double[:, ::1] k4 = np.empty((k, k))
    cdef double[:, ::1] tmp = np.empty((k, k))

    with nogil:
        for s in range(nsteps):
            while r < nrec and record[r] == s:
                rec[r, :, :] = x
                r += 1
            _matmul(gen[2 * s], x, k1, k)
            for i in range(k):
                for j in range(k):
                    tmp[i, j] = x[i, j] + h2 * k1[i, j]
            _matmul(gen[2 * s + 1], tmp, k2, k)
            for i in range(k):
                for j in range(k):
                    tmp[i, j] = x[i, j] + h2 * k2[i, j]
            _matmul(gen[2 * s + 1], tmp, k3, k)
            for i in range(k):
                for j in range(k):
                    tmp[i, j] = x[i, j] + h * k3[i, j]
            _matmul(gen[2 * s + 2], tmp, k4, k)
            for i in range(k):
                for j in range(k):
                    x[i, j] = x[i, j] + h6 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
        while r < nrec and record[r] == nsteps:
            rec[r, :, :] = x
            r += 1
    return x_arr, rec_arr
