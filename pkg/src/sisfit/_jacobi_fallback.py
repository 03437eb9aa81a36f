"""Pure NumPy twin of the compiled Jacobi kernel.

Column and row updates are vectorized, but every elementwise expression
matches ``_jacobi.pyx`` token for token, and the off-diagonal norm is
accumulated in the same sequential order the compiled loop uses.  The two
kernels therefore produce bit-identical results; a test asserts this.
"""

from __future__ import annotations

from math import sqrt

import numpy as np


def jacobi_cycle(are, aim, vre, vim, thr, max_sweeps):
    """Diagonalize in place; return sweep count, or -1 if not converged.

    Same contract as the compiled kernel: ``are + i*aim`` Hermitian with
    zero imaginary diagonal, ``vre + i*vim`` the identity on entry.
    """
    n = are.shape[0]
    thr2 = thr * thr
    iu = np.triu_indices(n, 1)
    sweeps = 0

    while True:
        # sequential sum matches the compiled kernel's accumulation order
        terms = are[iu] * are[iu] + aim[iu] * aim[iu]
        off2 = 0.0
        for x in terms.tolist():
            off2 = off2 + x
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

                xre = are[:, p].copy()
                xim = aim[:, p].copy()
                yre = are[:, q].copy()
                yim = aim[:, q].copy()
                nre = c * xre + (sre * yre - sim * yim)
                nim = c * xim + (sre * yim + sim * yre)
                mre = c * yre - (sre * xre + sim * xim)
                mim = c * yim - (sre * xim - sim * xre)
                are[:, p] = nre
                aim[:, p] = nim
                are[:, q] = mre
                aim[:, q] = mim
                are[p, :] = nre
                aim[p, :] = -nim
                are[q, :] = mre
                aim[q, :] = -mim

                are[p, p] = app + t * absb
                are[q, q] = aqq - t * absb
                aim[p, p] = 0.0
                aim[q, q] = 0.0
                are[p, q] = 0.0
                aim[p, q] = 0.0
                are[q, p] = 0.0
                aim[q, p] = 0.0

                xre = vre[:, p].copy()
                xim = vim[:, p].copy()
                yre = vre[:, q].copy()
                yim = vim[:, q].copy()
                vre[:, p] = c * xre + (sre * yre - sim * yim)
                vim[:, p] = c * xim + (sre * yim + sim * yre)
                vre[:, q] = c * yre - (sre * xre + sim * xim)
                vim[:, q] = c * yim - (sre * xim - sim * xre)

        sweeps += 1
