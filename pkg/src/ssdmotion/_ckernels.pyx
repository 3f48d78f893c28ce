# cython: language_level=3
"""Compiled twins of the kernels in ``_pykernels``."""

import numpy as np

from libc.math cimport sqrt, sin, cos

cdef double SMALL_ANGLE = 1e-6


cdef inline void _rodrigues(double x, double y, double z, double* R) noexcept nogil:
    cdef double t2 = x * x + y * y + z * z
    cdef double theta = sqrt(t2)
    cdef double a, b
    if theta < SMALL_ANGLE:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        a = sin(theta) / theta
        b = (1.0 - cos(theta)) / t2
    # R = I + a K + b K^2, K = [r]x, K^2 = r r^T - |r|^2 I
    R[0] = 1.0 + b * (x * x - t2)
    R[1] = -a * z + b * x * y
    R[2] = a * y + b * x * z
    R[3] = a * z + b * x * y
    R[4] = 1.0 + b * (y * y - t2)
    R[5] = -a * x + b * y * z
    R[6] = -a * y + b * x * z
    R[7] = a * x + b * y * z
    R[8] = 1.0 + b * (z * z - t2)


def fk_forward(double[:, ::1] root, double[:, :, ::1] rotvec,
               long[::1] parents, double[:, ::1] offsets):
    cdef Py_ssize_t n = rotvec.shape[0]
    cdef Py_ssize_t jc = rotvec.shape[1]
    pos_arr = np.empty((n, jc, 3))
    glob_arr = np.empty((n, jc, 3, 3))
    cdef double[:, :, ::1] pos = pos_arr
    cdef double[:, :, :, ::1] glob = glob_arr
    cdef double R[9]
    cdef Py_ssize_t f, j, p, r, c
    cdef double s
    with nogil:
        for f in range(n):
            _rodrigues(rotvec[f, 0, 0], rotvec[f, 0, 1], rotvec[f, 0, 2], R)
            for r in range(3):
                pos[f, 0, r] = root[f, r]
                for c in range(3):
                    glob[f, 0, r, c] = R[3 * r + c]
            for j in range(1, jc):
                p = parents[j]
                _rodrigues(rotvec[f, j, 0], rotvec[f, j, 1], rotvec[f, j, 2], R)
                for r in range(3):
                    s = 0.0
                    for c in range(3):
                        s = s + glob[f, p, r, c] * offsets[j, c]
                    pos[f, j, r] = pos[f, p, r] + s
                    for c in range(3):
                        glob[f, j, r, c] = (glob[f, p, r, 0] * R[c]
                                            + glob[f, p, r, 1] * R[3 + c]
                                            + glob[f, p, r, 2] * R[6 + c])
    return pos_arr, glob_arr


cdef inline void _adam_one(double* p, double* m, double* v, double g,
                           double lr, double beta1, double beta2, double eps,
                           double weight_decay, double bc1, double bc2) noexcept nogil:
    m[0] = beta1 * m[0] + (1.0 - beta1) * g
    v[0] = beta2 * v[0] + (1.0 - beta2) * g * g
    if weight_decay != 0.0:
        p[0] = p[0] * (1.0 - lr * weight_decay)
    p[0] = p[0] - lr * (m[0] / bc1) / (sqrt(v[0] / bc2) + eps)


def adamw_step(double[::1] param, double[::1] grad, double[::1] m, double[::1] v,
               double lr, double beta1, double beta2, double eps,
               double weight_decay, double bc1, double bc2):
    cdef Py_ssize_t i
    with nogil:
        for i in range(param.shape[0]):
            _adam_one(&param[i], &m[i], &v[i], grad[i],
                      lr, beta1, beta2, eps, weight_decay, bc1, bc2)


def masked_window_adamw_step(double[:, ::1] param, double[:, ::1] m, double[:, ::1] v,
                             double[:, ::1] grad_window, Py_ssize_t start,
                             double[::1] scale, bint scale_step,
                             double lr, double beta1, double beta2, double eps,
                             double weight_decay, double bc1, double bc2):
    cdef Py_ssize_t t_len = param.shape[0]
    cdef Py_ssize_t dim = param.shape[1]
    cdef Py_ssize_t width = grad_window.shape[0]
    cdef Py_ssize_t t, d
    cdef double rate
    cdef Py_ssize_t stop = min(start + width, t_len)
    with nogil:
        # rows outside the window see a zero gradient; the split keeps the
        # inner loops branch-free
        for t in range(t_len):
            rate = lr * scale[t] if scale_step else lr
            if start <= t < stop:
                if scale_step:
                    for d in range(dim):
                        _adam_one(&param[t, d], &m[t, d], &v[t, d], grad_window[t - start, d],
                                  rate, beta1, beta2, eps, weight_decay, bc1, bc2)
                else:
                    for d in range(dim):
                        _adam_one(&param[t, d], &m[t, d], &v[t, d], grad_window[t - start, d] * scale[t],
                                  rate, beta1, beta2, eps, weight_decay, bc1, bc2)
            else:
                for d in range(dim):
                    _adam_one(&param[t, d], &m[t, d], &v[t, d], 0.0,
                              rate, beta1, beta2, eps, weight_decay, bc1, bc2)
