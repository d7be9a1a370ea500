"""Pure-Python (numpy) kernels.

Same signatures as the compiled ``_kernels`` module. Every function writes
into ``out`` and returns it.

The Ricci contraction uses the regrouping

    4 R = 2X + X^T - K - K^T + V g + (V g)^T + Y - S.u

of the left-invariant Ricci formula, where
    X_ij = H_km (C g)_kiq C_jmq,     K_ij = C_ikp C_jpk,
    V_iq = H_km C_kip C_pmq,         Y_ij = H_km (S g)_kiq S_jmq,
    u_q  = H_km S_kmp g_pq,          S_ijk = a_ijk + a_jik,
with H = g^{-1}. The term c_km^p c_ij^q g_pq g^km drops out because H is
symmetric and c antisymmetric.
"""
import numpy as np

NAME = "python"


def adjoint_constants(C, g, H, out):
    # a_ij^k = c_il^m g_jm g^kl
    Cg = C @ g  # Cg[i, l, j] = c_il^m g_mj
    out[...] = np.tensordot(Cg, H, axes=([1], [0]))
    return out


def _x_term(T, g, H):
    Tg = T @ g
    Z = np.tensordot(H, Tg, axes=([0], [0]))  # Z[m, i, q]
    return np.tensordot(Z, T, axes=([0, 2], [1, 2]))


def ricci_tensor(C, g, H, out):
    a = adjoint_constants(C, g, H, np.empty_like(C))
    S = a + a.transpose(1, 0, 2)
    X = _x_term(C, g, H)
    K = np.tensordot(C, C, axes=([1, 2], [2, 1]))
    Z0 = np.tensordot(H, C, axes=([0], [0]))  # Z0[m, i, p] = H_km C_kip
    Vg = np.tensordot(Z0, C, axes=([0, 2], [1, 0])) @ g
    Y = _x_term(S, g, H)
    u = np.tensordot(H, S, axes=([0, 1], [0, 1])) @ g
    R4 = 2.0 * X + X.T - K - K.T + Vg + Vg.T + Y.T - S @ u
    out[...] = 0.125 * (R4 + R4.T)
    return out


def heisenberg_ricci_diag(n, g, out):
    N = 2 * n + 1
    gN = g[N - 1]
    lo = g[:n]
    hi = g[n:2 * n]
    out[:n] = -0.5 * gN / hi
    out[n:2 * n] = -0.5 * gN / lo
    out[N - 1] = 0.5 * gN * gN * np.sum(1.0 / (lo * hi))
    return out


def unitriangular_ricci_diag(idx, g, out):
    """``idx[i, j]`` is the flat position of pair (i, j), 1-based, -1 if absent."""
    n = idx.shape[0] - 1
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
    return out
