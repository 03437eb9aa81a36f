# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Cyclic Jacobi eigensolver kernel for complex Hermitian matrices.

The matrix is carried as separate real and imaginary float64 planes.
Every arithmetic expression here is mirrored token for token in
``_jacobi_fallback``; together with -ffp-contract=off this keeps the two
kernels bit-identical, which the rest of the package relies on for
reproducible output.
"""

from libc.math cimport sqrt


def jacobi_cycle(double[:, ::1] are, double[:, ::1] aim,
                 double[:, ::1] vre, double[:, ::1] vim,
                 double thr, int max_sweeps):
    """Diagonalize in place; return sweep count, or -1 if not converged.

    ``are + i*aim`` must be Hermitian with exact-zero imaginary diagonal;
    ``vre + i*vim`` must be the identity.  On return the diagonal of
    ``are`` holds eigenvalues (unsorted) and the columns of ``vre + i*vim``
    the matching eigenvectors.  Convergence: the off-diagonal Frobenius
    norm is at most ``thr``.
    """
    cdef Py_ssize_t n = are.shape[0]
    cdef Py_ssize_t p, q, r
    cdef int sweeps = 0
    cdef double thr2 = thr * thr
    cdef double off2, bre, bim, absb, app, aqq, tau, t, c, sig, sre, sim
    cdef double xre, xim, yre, yim, nre, nim, mre, mim

    while True:
        off2 = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off2 = off2 + (are[p, q] * are[p, q] + aim[p, q] * aim[p, q])
        off2 = 2.0 * off2
        if off2 <= thr2:
            return sweeps
        if sweeps == max_sweeps:
            return -1

        for p in range(n - 1):
            for q in range(p + 1, n):
                bre = are[p, q]
                bim = aim[p, q]
                absb = sqrt(bre * bre + bim * bim)
                if absb == 0.0:
                    continue
                app = are[p, p]
                aqq = are[q, q]
                tau = (aqq - app) / (2.0 * absb)
                if tau >= 0.0:
                    t = -1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (sqrt(1.0 + tau * tau) - tau)
                c = 1.0 / sqrt(1.0 + t * t)
                sig = t * c
                sre = sig * (bre / absb)
                sim = -sig * (bim / absb)

                for r in range(n):
                    if r == p or r == q:
                        continue
                    xre = are[r, p]
                    xim = aim[r, p]
                    yre = are[r, q]
                    yim = aim[r, q]
                    nre = c * xre + (sre * yre - sim * yim)
                    nim = c * xim + (sre * yim + sim * yre)
                    mre = c * yre - (sre * xre + sim * xim)
                    mim = c * yim - (sre * xim - sim * xre)
                    are[r, p] = nre
                    aim[r, p] = nim
                    are[r, q] = mre
                    aim[r, q] = mim
                    are[p, r] = nre
                    aim[p, r] = -nim
                    are[q, r] = mre
                    aim[q, r] = -mim

                are[p, p] = app + t * absb
                are[q, q] = aqq - t * absb
                aim[p, p] = 0.0
                aim[q, q] = 0.0
                are[p, q] = 0.0
                aim[p, q] = 0.0
                are[q, p] = 0.0
                aim[q, p] = 0.0

                for r in range(n):
                    xre = vre[r, p]
                    xim = vim[r, p]
                    yre = vre[r, q]
                    yim = vim[r, q]
                    vre[r, p] = c * xre + (sre * yre - sim * yim)
                    vim[r, p] = c * xim + (sre * yim + sim * yre)
                    vre[r, q] = c * yre - (sre * xre + sim * xim)
                    vim[r, q] = c * yim - (sre * xim - sim * xre)

        sweeps += 1
