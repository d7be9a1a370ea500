# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Mirrors ``_kernels_py``; see that module for the algebra.

Contractions against the structure constants run over the list of nonzero
``C[i, j, k]`` only. The one term that is dense in the metric adjoint is
handed to BLAS once the dimension reaches ``DENSE_Y_DIM``.
"""
import numpy as np

NAME = "cython"
DENSE_Y_DIM = 12


cdef _nonzeros(const double[:, :, ::1] C):
    cdef Py_ssize_t N = C.shape[0]
    cdef Py_ssize_t i, j, k, t = 0, nnz = 0
    for i in range(N):
        for j in range(N):
            for k in range(N):
                if C[i, j, k] != 0.0:
                    nnz += 1
    nz_idx = np.empty((nnz, 3), dtype=np.intp)
    nz_val = np.empty(nnz, dtype=np.float64)
    rowptr = np.zeros(N + 1, dtype=np.intp)
    cdef Py_ssize_t[:, ::1] idx = nz_idx
    cdef double[::1] val = nz_val
    cdef Py_ssize_t[::1] rp = rowptr
    for i in range(N):
        rp[i] = t
        for j in range(N):
            for k in range(N):
                if C[i, j, k] != 0.0:
                    idx[t, 0] = i
                    idx[t, 1] = j
                    idx[t, 2] = k
                    val[t] = C[i, j, k]
                    t += 1
    rp[N] = t
    return nz_idx, nz_val, rowptr


cdef void _adjoint(Py_ssize_t[:, ::1] idx, double[::1] val, const double[:, ::1] g,
                   const double[:, ::1] H, double[:, :, ::1] a) noexcept nogil:
    cdef Py_ssize_t N = g.shape[0]
    cdef Py_ssize_t t, i, l, m, j, k
    cdef double v, vg
    for i in range(N):
        for j in range(N):
            for k in range(N):
                a[i, j, k] = 0.0
    for t in range(idx.shape[0]):
        i = idx[t, 0]
        l = idx[t, 1]
        m = idx[t, 2]
        v = val[t]
        for j in range(N):
            vg = v * g[m, j]
            if vg == 0.0:
                continue
            for k in range(N):
                a[i, j, k] += vg * H[l, k]


def adjoint_constants(const double[:, :, ::1] C, const double[:, ::1] g, const double[:, ::1] H,
                      double[:, :, ::1] out):
    nz_idx, nz_val, _ = _nonzeros(C)
    cdef Py_ssize_t[:, ::1] idx = nz_idx
    cdef double[::1] val = nz_val
    with nogil:
        _adjoint(idx, val, g, H, out)
    return np.asarray(out)


def ricci_tensor(const double[:, :, ::1] C, const double[:, ::1] g, const double[:, ::1] H,
                 double[:, ::1] out):
    cdef Py_ssize_t N = C.shape[0]
    nz_idx, nz_val, rowptr = _nonzeros(C)
    cdef Py_ssize_t[:, ::1] idx = nz_idx
    cdef double[::1] val = nz_val
    cdef Py_ssize_t[::1] rp = rowptr
    cdef Py_ssize_t nnz = idx.shape[0]

    a_arr = np.empty((N, N, N))
    S_arr = np.empty((N, N, N))
    Cg_arr = np.zeros((N, N, N))
    Sg_arr = np.zeros((N, N, N))
    Z_arr = np.zeros((N, N, N))
    X_arr = np.zeros((N, N))
    K_arr = np.zeros((N, N))
    V_arr = np.zeros((N, N))
    Vg_arr = np.zeros((N, N))
    Y_arr = np.zeros((N, N))
    w_arr = np.zeros(N)
    u_arr = np.zeros(N)
    cdef double[:, :, ::1] a = a_arr
    cdef double[:, :, ::1] S = S_arr
    cdef double[:, :, ::1] Cg = Cg_arr
    cdef double[:, :, ::1] Sg = Sg_arr
    cdef double[:, :, ::1] Z = Z_arr
    cdef double[:, ::1] X = X_arr
    cdef double[:, ::1] K = K_arr
    cdef double[:, ::1] V = V_arr
    cdef double[:, ::1] Vg = Vg_arr
    cdef double[:, ::1] Y = Y_arr
    cdef double[::1] w = w_arr
    cdef double[::1] u = u_arr

    cdef Py_ssize_t t, t2, i, j, k, m, p, q
    cdef double v, v2, h, s, acc
    # the Y term is dense in S; past this size BLAS beats the plain loops
    cdef bint dense_y = N >= DENSE_Y_DIM

    with nogil:
        _adjoint(idx, val, g, H, a)
        for i in range(N):
            for j in range(N):
                for k in range(N):
                    S[i, j, k] = a[i, j, k] + a[j, i, k]

        # X_ij = H_km Cg_kiq C_jmq
        for t in range(nnz):
            k = idx[t, 0]
            i = idx[t, 1]
            p = idx[t, 2]
            v = val[t]
            for q in range(N):
                Cg[k, i, q] += v * g[p, q]
        for t in range(nnz):
            j = idx[t, 0]
            m = idx[t, 1]
            q = idx[t, 2]
            v = val[t]
            for k in range(N):
                h = H[k, m] * v
                if h == 0.0:
                    continue
                for i in range(N):
                    X[i, j] += h * Cg[k, i, q]

        # K_ij = C_ikp C_jpk
        for t in range(nnz):
            i = idx[t, 0]
            k = idx[t, 1]
            p = idx[t, 2]
            v = val[t]
            for j in range(N):
                v2 = C[j, p, k]
                if v2 != 0.0:
                    K[i, j] += v * v2

        # V_iq = H_km C_kip C_pmq
        for t in range(nnz):
            k = idx[t, 0]
            i = idx[t, 1]
            p = idx[t, 2]
            v = val[t]
            for t2 in range(rp[p], rp[p + 1]):
                m = idx[t2, 1]
                q = idx[t2, 2]
                V[i, q] += H[k, m] * v * val[t2]
        for i in range(N):
            for q in range(N):
                acc = 0.0
                for p in range(N):
                    acc += V[i, p] * g[p, q]
                Vg[i, q] = acc

        # Y_ij = H_km Sg_kiq S_jmq; large dims use BLAS after the nogil block
        if not dense_y:
            for k in range(N):
                for i in range(N):
                    for p in range(N):
                        s = S[k, i, p]
                        if s == 0.0:
                            continue
                        for q in range(N):
                            Sg[k, i, q] += s * g[p, q]
            for k in range(N):
                for m in range(N):
                    h = H[k, m]
                    if h == 0.0:
                        continue
                    for i in range(N):
                        for q in range(N):
                            Z[m, i, q] += h * Sg[k, i, q]
            for j in range(N):
                for m in range(N):
                    for q in range(N):
                        s = S[j, m, q]
                        if s == 0.0:
                            continue
                        for i in range(N):
                            Y[i, j] += Z[m, i, q] * s

        # u_q = H_km S_kmp g_pq
        for k in range(N):
            for m in range(N):
                h = H[k, m]
                if h == 0.0:
                    continue
                for p in range(N):
                    w[p] += h * S[k, m, p]
        for q in range(N):
            acc = 0.0
            for p in range(N):
                acc += w[p] * g[p, q]
            u[q] = acc

    if dense_y:
        Sg_arr = S_arr @ np.asarray(g)
        Z_arr = np.tensordot(np.asarray(H), Sg_arr, axes=(0, 0))
        Y_arr = np.ascontiguousarray(np.tensordot(Z_arr, S_arr, axes=([0, 2], [1, 2])))
        Y = Y_arr

    with nogil:
        for i in range(N):
            for j in range(i, N):
                acc = 0.0
                for q in range(N):
                    acc += S[i, j, q] * u[q]
                # S is symmetric in its first two slots, so acc serves both (i, j) and (j, i)
                v = (2.0 * X[i, j] + X[j, i] - K[i, j] - K[j, i] + Vg[i, j] + Vg[j, i]
                     + Y[j, i] - acc)
                v2 = (2.0 * X[j, i] + X[i, j] - K[j, i] - K[i, j] + Vg[j, i] + Vg[i, j]
                      + Y[i, j] - acc)
                out[i, j] = 0.125 * (v + v2)
                out[j, i] = out[i, j]
    return np.asarray(out)


def heisenberg_ricci_diag(Py_ssize_t n, const double[::1] g, double[::1] out):
    cdef Py_ssize_t N = 2 * n + 1
    cdef Py_ssize_t i
    cdef double gN = g[N - 1]
    cdef double sigma = 0.0
    for i in range(n):
        out[i] = -0.5 * gN / g[i + n]
        out[i + n] = -0.5 * gN / g[i]
        sigma += 1.0 / (g[i] * g[i + n])
    out[N - 1] = 0.5 * gN * gN * sigma
    return np.asarray(out)


def unitriangular_ricci_diag(const Py_ssize_t[:, ::1] idx, const double[::1] g, double[::1] out):
    cdef Py_ssize_t n = idx.shape[0] - 1
    cdef Py_ssize_t i, j, p, q, r
    cdef double s1, s2, s3, gij
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            gij = g[idx[i, j]]
            s1 = 0.0
            for p in range(1, i):
                s1 += g[idx[p, j]] / g[idx[p, i]]
            s2 = 0.0
            for q in range(i + 1, j):
                s2 += 1.0 / (g[idx[i, q]] * g[idx[q, j]])
            s3 = 0.0
            for r in range(j + 1, n + 1):
                s3 += g[idx[i, r]] / g[idx[j, r]]
            out[idx[i, j]] = 0.5 * (-s1 + gij * gij * s2 - s3)
    return np.asarray(out)
