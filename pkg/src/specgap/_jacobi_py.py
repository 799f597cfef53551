"""Pure numpy cyclic Jacobi kernel (fallback for the compiled ``_jacobi``).

Rotations run pair by pair in Python but are vectorised across the batch,
which is the shape that matters here: many tiny symbol samples.
"""

import numpy as np


def _offnorm(a):
    n = a.shape[-1]
    iu = np.triu_indices(n, 1)
    upper = a[:, iu[0], iu[1]]
    return np.sqrt(2.0 * np.sum(upper.real**2 + upper.imag**2, axis=1))


# off-diagonal magnitude, relative to the convergence threshold, treated as zero
NEGLIGIBLE = 1e-100


def _sweep(a, v, thresh):
    n = a.shape[-1]
    drop = thresh * NEGLIGIBLE
    # entries this small cannot hold the off-norm above thresh; rotating them
    # inside near-degenerate clusters only slows convergence
    skip = thresh / n
    for p in range(n - 1):
        for q in range(p + 1, n):
            x = a[:, p, q]
            g = np.hypot(x.real, x.imag)
            # too small to give an accurate phase: zero it instead of rotating
            dead = g <= drop
            a[:, p, q] = np.where(dead, 0.0, x)
            a[:, q, p] = np.where(dead, 0.0, a[:, q, p])
            x = a[:, p, q]
            live = g > skip
            if not live.any():
                continue
            gs = np.where(live, g, 1.0)
            app = a[:, p, p].real.copy()
            aqq = a[:, q, q].real.copy()
            tau = (aqq - app) / (2.0 * gs)
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                root = np.sqrt(1.0 + tau * tau)
                big = np.abs(tau) > 1e150
                t = np.where(tau >= 0.0, 1.0 / (tau + root), -1.0 / (-tau + root))
                t = np.where(big, 0.5 / np.where(big, tau, 1.0), t)
            t = np.where(live, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            e = np.where(live, x.real / gs + 1j * (x.imag / gs), 1.0)
            ec = np.conj(e)
            ce = (c * e)[:, None]
            se = (s * e)[:, None]
            cec = (c * ec)[:, None]
            sec = (s * ec)[:, None]
            cc = c[:, None]
            ss = s[:, None]

            u = a[:, :, p].copy()
            w = a[:, :, q].copy()
            a[:, :, p] = ce * u - ss * w
            a[:, :, q] = se * u + cc * w
            u = a[:, p, :].copy()
            w = a[:, q, :].copy()
            a[:, p, :] = cec * u - ss * w
            a[:, q, :] = sec * u + cc * w
            a[:, p, p] = np.where(live, app - t * g, a[:, p, p])
            a[:, q, q] = np.where(live, aqq + t * g, a[:, q, q])
            a[:, p, q] = np.where(live, 0.0, a[:, p, q])
            a[:, q, p] = np.where(live, 0.0, a[:, q, p])

            u = v[:, :, p].copy()
            w = v[:, :, q].copy()
            v[:, :, p] = ce * u - ss * w
            v[:, :, q] = se * u + cc * w


def jacobi_batch(a, v, thresh, max_sweeps, offnorm, sweeps):
    """Same contract as the compiled kernel: in-place on ``a`` and ``v``."""
    off = _offnorm(a)
    done = np.zeros(a.shape[0], dtype=np.int32)
    active = off > thresh
    for _ in range(max_sweeps):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        sub_a = a[idx]
        sub_v = v[idx]
        _sweep(sub_a, sub_v, thresh[idx])
        a[idx] = sub_a
        v[idx] = sub_v
        done[idx] += 1
        off[idx] = _offnorm(sub_a)
        active = off > thresh
    offnorm[:] = off
    sweeps[:] = done
