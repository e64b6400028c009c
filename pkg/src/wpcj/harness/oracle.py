"""Brute-force grid oracles for tiny instances (M <= 2, N <= 2).

They share no code with the conic schemes.  They exist to cross-check those
schemes on desk-scale fixtures.

The search works in coordinates adapted to the channels.  Both coordinate
systems cover the whole feasible set.

- ``v = sqrt(rho P) (cos(a) e_0 + sin(a) e^{jb} e_1)``, where ``e_1`` lies
  along ``h_be`` and ``e_0`` is orthogonal to it.  ``sin(a)`` is gridded
  uniformly on ``[0, s_max]``.  ``s_max`` is the largest leakage any
  eavesdropper-feasible beam can have.
- ``Q = B X B^H``, where ``B`` has its first column orthogonal to ``h_cd``.
  ``X = [[x1, r sqrt(x1 x2) e^{jf}], [., x2]]`` with ``x1, x2 in [0, sum P_i]``.
  Points that break a per-node limit are discarded.

The lattices for ``grid = g`` are contained in those for ``grid = 2g``, so
refining never lowers the oracle value.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DimensionError
from ..model import ChannelSet, SystemConfig, gamma_d_from

_CHUNK = 1 << 20
_GAIN_FLOOR = 1e-20


def _orthobasis(h: np.ndarray, prefer: np.ndarray) -> np.ndarray:
    """Unitary columns ``[e0, e1]`` with ``e1`` along ``h`` (or ``prefer`` if ``h`` is zero)."""
    n = h.size
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    if np.linalg.norm(h) == 0:
        h = prefer if np.linalg.norm(prefer) > 0 else np.eye(n)[:, 0].astype(complex)
        e0 = h / np.linalg.norm(h)
        e1 = np.array([-np.conj(e0[1]), np.conj(e0[0])])
        return np.column_stack([e0, e1])
    e1 = h / np.linalg.norm(h)
    e0 = np.array([-np.conj(e1[1]), np.conj(e1[0])])
    return np.column_stack([e0, e1])


def _check_size(ch: ChannelSet, cfg: SystemConfig) -> None:
    ch.check(cfg)
    if cfg.M > 2 or cfg.N > 2:
        raise DimensionError(f"oracles are limited to M, N <= 2 (got M={cfg.M}, N={cfg.N})")


def _jam_grid(ch: ChannelSet, cfg: SystemConfig, grid: int):
    """Denominators ``(h_cd^H Q h_cd, h_ce^H Q h_ce)`` over the feasible Q lattice."""
    p = cfg.p_nodes
    if cfg.N == 1:
        x = np.linspace(0.0, p[0], grid + 1)
        return x * abs(ch.h_cd[0]) ** 2, x * abs(ch.h_ce[0]) ** 2
    # first column of B orthogonal to h_cd, second along it
    B = _orthobasis(ch.h_cd, ch.h_ce)
    g_d = B.conj().T @ ch.h_cd  # first entry is zero up to rounding
    g_e = B.conj().T @ ch.h_ce
    top = float(p.sum())
    x = np.linspace(0.0, top, grid + 1)
    r = np.linspace(0.0, 1.0, grid + 1)
    f = np.arange(grid) * (2.0 * np.pi / grid)
    X1, X2, R, F = np.meshgrid(x, x, r, f, indexing="ij", sparse=True)
    off = R * np.sqrt(X1 * X2) * np.exp(1j * F)  # X_12
    # Q = B X B^H; diagonal entries and the two quadratic forms
    b = B
    q11 = (abs(b[0, 0]) ** 2 * X1 + abs(b[0, 1]) ** 2 * X2
           + 2.0 * np.real(b[0, 0] * np.conj(b[0, 1]) * off))
    q22 = (abs(b[1, 0]) ** 2 * X1 + abs(b[1, 1]) ** 2 * X2
           + 2.0 * np.real(b[1, 0] * np.conj(b[1, 1]) * off))
    ok = (q11 <= p[0] * (1 + 1e-12)) & (q22 <= p[1] * (1 + 1e-12))

    def form(g):
        return (abs(g[0]) ** 2 * X1 + abs(g[1]) ** 2 * X2
                + 2.0 * np.real(np.conj(g[0]) * g[1] * off))

    dd = np.broadcast_to(form(g_d), ok.shape)[ok]
    de = np.broadcast_to(form(g_e), ok.shape)[ok]
    return np.maximum(dd, 0.0), np.maximum(de, 0.0)


def _beam_frontier(ch: ChannelSet, cfg: SystemConfig, p_bs: float, grid: int, cap_max: float):
    """Sorted leakages and the best destination gain achievable at or below each."""
    if cfg.M == 1:
        rho = np.arange(1, grid + 1) / grid
        sig = rho * p_bs * abs(ch.h_bd[0]) ** 2
        leak = rho * p_bs * abs(ch.h_be[0]) ** 2
    else:
        E = _orthobasis(ch.h_be, ch.h_bd)
        a0, a1 = E.conj().T @ ch.h_bd  # destination gains along e0, e1
        hb = float(np.linalg.norm(ch.h_be))
        s_max = 1.0 if hb == 0 else min(1.0, math.sqrt(cap_max / (p_bs * hb ** 2)))
        s = np.linspace(0.0, s_max, grid + 1)
        beta = np.arange(grid) * (2.0 * np.pi / grid)
        rho = np.arange(1, grid + 1) / grid
        S, Bt, Rh = np.meshgrid(s, beta, rho, indexing="ij", sparse=True)
        C = np.sqrt(1.0 - S ** 2)
        amp = np.conj(a0) * C + np.conj(a1) * S * np.exp(1j * Bt)
        sig = (Rh * p_bs * np.abs(amp) ** 2).ravel()
        leak = np.broadcast_to(Rh * p_bs * S ** 2 * hb ** 2, (s.size, beta.size, rho.size)).ravel()
    order = np.argsort(leak, kind="stable")
    leak = leak[order]
    best = np.maximum.accumulate(sig[order])
    return leak, best


def _best_sinr(ch: ChannelSet, cfg: SystemConfig, p_bs: float, grid: int) -> float:
    dd, de = _jam_grid(ch, cfg, grid)
    jam_max = float((np.sqrt(cfg.p_nodes) @ np.abs(ch.h_ce)) ** 2)
    cap_max = cfg.gamma_e * (jam_max + cfg.sigma2)
    leak, best = _beam_frontier(ch, cfg, p_bs, grid, cap_max)
    out = 0.0
    for lo in range(0, dd.size, _CHUNK):
        cap = cfg.gamma_e * (de[lo:lo + _CHUNK] + cfg.sigma2)
        idx = np.searchsorted(leak, cap * (1 + 1e-12), side="right") - 1
        ok = idx >= 0
        if not np.any(ok):
            continue
        val = best[idx[ok]] / (dd[lo:lo + _CHUNK][ok] + cfg.sigma2)
        out = max(out, float(val.max()))
    return out


def oracle_srm(ch: ChannelSet, cfg: SystemConfig, grid: int = 64) -> float:
    """Best eavesdropper-feasible destination SINR over the lattice."""
    _check_size(ch, cfg)
    if grid < 2:
        raise ValueError("grid must be at least 2")
    return _best_sinr(ch, cfg, cfg.p_bs_max, grid)


def _direction_frontier(ch: ChannelSet, cfg: SystemConfig, grid: int, kappa_max: float):
    """Unit-power beam directions sorted by leakage-to-gain ratio, with the
    best gain available at or below each ratio."""
    if cfg.M == 1:
        sig = np.array([abs(ch.h_bd[0]) ** 2])
        leak = np.array([abs(ch.h_be[0]) ** 2])
    else:
        E = _orthobasis(ch.h_be, ch.h_bd)
        a0, a1 = E.conj().T @ ch.h_bd
        hb = float(np.linalg.norm(ch.h_be))
        nb = float(np.linalg.norm(ch.h_bd))
        s_max = 1.0 if hb == 0 else min(1.0, math.sqrt(kappa_max) * nb / hb)
        s = np.linspace(0.0, s_max, grid + 1)[:, None]
        beta = (np.arange(grid) * (2.0 * np.pi / grid))[None, :]
        amp = np.conj(a0) * np.sqrt(1.0 - s ** 2) + np.conj(a1) * s * np.exp(1j * beta)
        sig = (np.abs(amp) ** 2).ravel()
        leak = np.broadcast_to(s ** 2 * hb ** 2, amp.shape).ravel()
    # gains at rounding level (a beam along h_be when h_bd is parallel) are zero
    keep = sig > _GAIN_FLOOR * float(np.linalg.norm(ch.h_bd)) ** 2
    ratio = leak[keep] / sig[keep]
    order = np.argsort(ratio, kind="stable")
    return ratio[order], np.maximum.accumulate(sig[keep][order])


def oracle_tpm(ch: ChannelSet, cfg: SystemConfig, grid: int = 64) -> float:
    """Smallest BS power reaching ``gamma_d`` under the eavesdropper cap on the lattice.

    Power enters both SINR constraints linearly.  For a beam direction ``w``
    and a lattice covariance ``Q``, the least power is therefore
    ``gamma_d (h_cd^H Q h_cd + sigma2) / |h_bd^H w|^2``.  It is admissible
    when the leakage-to-gain ratio of ``w`` stays within
    ``gamma_e (h_ce^H Q h_ce + sigma2) / (gamma_d (h_cd^H Q h_cd + sigma2))``.
    This is the limit of bisecting on ``||v||^2`` with the same lattice.
    Returns ``inf`` when no lattice point is admissible.
    """
    _check_size(ch, cfg)
    if grid < 2:
        raise ValueError("grid must be at least 2")
    gd = gamma_d_from(cfg.rs_min, cfg.gamma_e)
    dd, de = _jam_grid(ch, cfg, grid)
    jam_max = float((np.sqrt(cfg.p_nodes) @ np.abs(ch.h_ce)) ** 2)
    kappa_max = cfg.gamma_e * (jam_max + cfg.sigma2) / (gd * cfg.sigma2) if gd > 0 else math.inf
    ratio, best = _direction_frontier(ch, cfg, grid, kappa_max)
    if ratio.size == 0:
        return math.inf
    out = math.inf
    for lo in range(0, dd.size, _CHUNK):
        need = gd * (dd[lo:lo + _CHUNK] + cfg.sigma2)
        kappa = cfg.gamma_e * (de[lo:lo + _CHUNK] + cfg.sigma2) / need
        idx = np.searchsorted(ratio, kappa * (1 + 1e-12), side="right") - 1
        ok = idx >= 0
        if np.any(ok):
            out = min(out, float((need[ok] / best[idx[ok]]).min()))
    return out
