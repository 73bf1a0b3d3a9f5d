"""Time-stepping kernels: numba @njit versions with a pure-numpy fallback.

Set ``ANYONSIM_DISABLE_NUMBA=1`` before import to force the numpy path.
Both paths share signatures; ``lindblad_rk4`` and ``unitary_steps`` are bound
to the selected implementation.
"""

from __future__ import annotations

import os

import numpy as np

STATUS_OK = 0
STATUS_TRACE_DRIFT = 1
TRACE_CHECK_EVERY = 64

_DISABLE = os.environ.get("ANYONSIM_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLE


# --------------------------------------------------------------------------
# numpy implementation
# --------------------------------------------------------------------------

def _apply_h_np(rho, u, cpl, lo, hi, csrc, cdst, camp):
    """``H rho`` for the interaction-picture Hamiltonian (no diagonal part)."""
    m = np.zeros_like(rho)
    for j in range(u.shape[0]):
        if u[j] != 0:
            m[hi[j]] += u[j] * rho[lo[j]]
            m[lo[j]] += np.conj(u[j]) * rho[hi[j]]
        if cpl[j] != 0 and csrc.shape[1]:
            w = (cpl[j] * camp[j])[:, None]
            m[cdst[j]] += w * rho[csrc[j]]
            m[csrc[j]] += np.conj(w) * rho[cdst[j]]
    return m


def _rhs_np(rho, u, cpl, lo, hi, csrc, cdst, camp, decay, gamma1, kappa, rsrc, rdst, ramp):
    m = _apply_h_np(rho, u, cpl, lo, hi, csrc, cdst, camp)
    out = -1j * (m - m.conj().T) + decay * rho
    for j in range(gamma1.shape[0]):
        if gamma1[j] != 0:
            out[np.ix_(lo[j], lo[j])] += gamma1[j] * rho[np.ix_(hi[j], hi[j])]
    if kappa != 0:
        out[np.ix_(rdst, rdst)] += kappa * np.outer(ramp, ramp) * rho[np.ix_(rsrc, rsrc)]
    return out


def lindblad_rk4_numpy(rho, dts, drv, cpl, lo, hi, csrc, cdst, camp,
                       decay, gamma1, kappa, rsrc, rdst, ramp):
    """Fixed-step RK4 in the interaction picture of the diagonal detunings.

    ``drv`` and ``cpl`` have shape (steps, 3, n_qubits): per-qubit drive and
    coupling coefficients at the start, middle and end of every step, with the
    detuning phases already folded in. Returns ``(rho, status, max_trace_drift)``.
    """
    rho = rho.copy()
    tr0 = np.trace(rho).real
    drift = 0.0
    args = (lo, hi, csrc, cdst, camp, decay, gamma1, kappa, rsrc, rdst, ramp)
    for s in range(dts.shape[0]):
        h = dts[s]
        k1 = _rhs_np(rho, drv[s, 0], cpl[s, 0], *args)
        k2 = _rhs_np(rho + 0.5 * h * k1, drv[s, 1], cpl[s, 1], *args)
        k3 = _rhs_np(rho + 0.5 * h * k2, drv[s, 1], cpl[s, 1], *args)
        k4 = _rhs_np(rho + h * k3, drv[s, 2], cpl[s, 2], *args)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if s % TRACE_CHECK_EVERY == 0:
            d = abs(np.trace(rho).real - tr0)
            drift = max(drift, d)
            if d > 1e-4 or not np.isfinite(d):
                return rho, STATUS_TRACE_DRIFT, d
    drift = max(drift, abs(np.trace(rho).real - tr0))
    return rho, STATUS_OK, drift


TAYLOR_TOL = 1e-17
TAYLOR_MAX = 40


def _apply_hvec_np(v, hd, u, lo, hi, csrc, cdst, wamp):
    out = hd * v
    for j in range(u.shape[0]):
        if u[j] != 0:
            out[hi[j]] += u[j] * v[lo[j]]
            out[lo[j]] += np.conj(u[j]) * v[hi[j]]
        out[cdst[j]] += wamp[j] * v[csrc[j]]
        out[csrc[j]] += wamp[j] * v[cdst[j]]
    return out


def unitary_steps_numpy(psi, dts, det, drv, exc, lo, hi, csrc, cdst, camp, g):
    """Piecewise-constant ``exp(-i H_k dt_k) psi`` with ``H_k`` sampled at step midpoints.

    Each exponential is summed as a Taylor series until the next term falls
    below ``TAYLOR_TOL`` in norm; ``||H dt||`` stays well below 1 for the
    supported step sizes. Returns ``(psi, max_terms)``.
    """
    psi = psi.copy()
    wamp = g * camp
    max_terms = 0
    for s in range(dts.shape[0]):
        hd = det[s] @ exc
        term = psi
        out = psi.copy()
        k = 0
        while k < TAYLOR_MAX:
            k += 1
            term = (-1j * dts[s] / k) * _apply_hvec_np(term, hd, drv[s], lo, hi, csrc, cdst, wamp)
            out += term
            if np.linalg.norm(term) < TAYLOR_TOL:
                break
        max_terms = max(max_terms, k)
        psi = out
    return psi, max_terms


# --------------------------------------------------------------------------
# numba implementation
# --------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _rhs_nb(rho, u, cpl, lo, hi, csrc, cdst, camp, decay, gamma1,
                kappa, rsrc, rdst, ramp, m, out):
        dim = rho.shape[0]
        nq = u.shape[0]
        m[:, :] = 0.0
        for j in range(nq):
            uj = u[j]
            if uj != 0:
                ujc = np.conj(uj)
                for p in range(lo.shape[1]):
                    a = lo[j, p]
                    b = hi[j, p]
                    for c in range(dim):
                        m[b, c] += uj * rho[a, c]
                        m[a, c] += ujc * rho[b, c]
            cj = cpl[j]
            if cj != 0:
                for p in range(csrc.shape[1]):
                    a = csrc[j, p]
                    b = cdst[j, p]
                    w = cj * camp[j, p]
                    wc = np.conj(w)
                    for c in range(dim):
                        m[b, c] += w * rho[a, c]
                        m[a, c] += wc * rho[b, c]
        for a in range(dim):
            for b in range(dim):
                out[a, b] = -1j * (m[a, b] - np.conj(m[b, a])) + decay[a, b] * rho[a, b]
        for j in range(gamma1.shape[0]):
            gj = gamma1[j]
            if gj != 0:
                for p in range(lo.shape[1]):
                    for q in range(lo.shape[1]):
                        out[lo[j, p], lo[j, q]] += gj * rho[hi[j, p], hi[j, q]]
        if kappa != 0:
            for p in range(rsrc.shape[0]):
                for q in range(rsrc.shape[0]):
                    out[rdst[p], rdst[q]] += kappa * ramp[p] * ramp[q] * rho[rsrc[p], rsrc[q]]

    @njit(cache=True)
    def lindblad_rk4_numba(rho, dts, drv, cpl, lo, hi, csrc, cdst, camp,
                           decay, gamma1, kappa, rsrc, rdst, ramp):
        rho = rho.copy()
        dim = rho.shape[0]
        m = np.empty_like(rho)
        k1 = np.empty_like(rho)
        k2 = np.empty_like(rho)
        k3 = np.empty_like(rho)
        k4 = np.empty_like(rho)
        tmp = np.empty_like(rho)
        tr0 = 0.0
        for a in range(dim):
            tr0 += rho[a, a].real
        drift = 0.0
        for s in range(dts.shape[0]):
            h = dts[s]
            _rhs_nb(rho, drv[s, 0], cpl[s, 0], lo, hi, csrc, cdst, camp,
                    decay, gamma1, kappa, rsrc, rdst, ramp, m, k1)
            for a in range(dim):
                for b in range(dim):
                    tmp[a, b] = rho[a, b] + 0.5 * h * k1[a, b]
            _rhs_nb(tmp, drv[s, 1], cpl[s, 1], lo, hi, csrc, cdst, camp,
                    decay, gamma1, kappa, rsrc, rdst, ramp, m, k2)
            for a in range(dim):
                for b in range(dim):
                    tmp[a, b] = rho[a, b] + 0.5 * h * k2[a, b]
            _rhs_nb(tmp, drv[s, 1], cpl[s, 1], lo, hi, csrc, cdst, camp,
                    decay, gamma1, kappa, rsrc, rdst, ramp, m, k3)
            for a in range(dim):
                for b in range(dim):
                    tmp[a, b] = rho[a, b] + h * k3[a, b]
            _rhs_nb(tmp, drv[s, 2], cpl[s, 2], lo, hi, csrc, cdst, camp,
                    decay, gamma1, kappa, rsrc, rdst, ramp, m, k4)
            for a in range(dim):
                for b in range(dim):
                    rho[a, b] += (h / 6.0) * (k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b])
            if s % TRACE_CHECK_EVERY == 0:
                tr = 0.0
                for a in range(dim):
                    tr += rho[a, a].real
                d = abs(tr - tr0)
                if d > drift:
                    drift = d
                if d > 1e-4 or not np.isfinite(d):
                    return rho, STATUS_TRACE_DRIFT, d
        tr = 0.0
        for a in range(dim):
            tr += rho[a, a].real
        if abs(tr - tr0) > drift:
            drift = abs(tr - tr0)
        return rho, STATUS_OK, drift

    @njit(cache=True)
    def _apply_hvec_nb(v, hd, u, lo, hi, csrc, cdst, camp, g, out):
        for i in range(v.shape[0]):
            out[i] = hd[i] * v[i]
        for j in range(u.shape[0]):
            uj = u[j]
            if uj != 0:
                ujc = np.conj(uj)
                for p in range(lo.shape[1]):
                    out[hi[j, p]] += uj * v[lo[j, p]]
                    out[lo[j, p]] += ujc * v[hi[j, p]]
            if g != 0:
                for p in range(csrc.shape[1]):
                    w = g * camp[j, p]
                    out[cdst[j, p]] += w * v[csrc[j, p]]
                    out[csrc[j, p]] += w * v[cdst[j, p]]

    @njit(cache=True)
    def unitary_steps_numba(psi, dts, det, drv, exc, lo, hi, csrc, cdst, camp, g):
        psi = psi.copy()
        dim = psi.shape[0]
        nq = det.shape[1]
        hd = np.empty(dim)
        term = np.empty(dim, dtype=np.complex128)
        nxt = np.empty(dim, dtype=np.complex128)
        max_terms = 0
        for s in range(dts.shape[0]):
            for i in range(dim):
                acc = 0.0
                for j in range(nq):
                    acc += det[s, j] * exc[j, i]
                hd[i] = acc
            term[:] = psi
            k = 0
            while k < TAYLOR_MAX:
                k += 1
                _apply_hvec_nb(term, hd, drv[s], lo, hi, csrc, cdst, camp, g, nxt)
                c = -1j * dts[s] / k
                nrm = 0.0
                for i in range(dim):
                    term[i] = c * nxt[i]
                    psi[i] += term[i]
                    nrm += term[i].real ** 2 + term[i].imag ** 2
                if nrm < TAYLOR_TOL ** 2:
                    break
            if k > max_terms:
                max_terms = k
        return psi, max_terms

else:  # pragma: no cover
    lindblad_rk4_numba = None
    unitary_steps_numba = None


if USE_NUMBA:
    lindblad_rk4 = lindblad_rk4_numba
    unitary_steps = unitary_steps_numba
    BACKEND = "numba"
else:
    lindblad_rk4 = lindblad_rk4_numpy
    unitary_steps = unitary_steps_numpy
    BACKEND = "numpy"
