"""Zero-forcing comparison scheme.

The BS sends maximum-ratio transmission at full power and never adapts its
beam.  The jammers pick the covariance that puts the most power on the
eavesdropper while sending nothing toward the destination.  No eavesdropper
SINR cap is imposed.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import null_space

from .conic import ConeProgram, solve_with_retry
from .conic.solver import DEFAULT_TOL
from .errors import ConfigError
from .model import ChannelSet, SystemConfig, TransmitDesign


def build_zf_program(ch: ChannelSet, cfg: SystemConfig) -> ConeProgram:
    """Jamming covariance problem with the destination nulled by an equality.

    max Tr(H_ce Q)  s.t.  Tr(H_cd Q) = 0,  Q_ii <= P_i,  Q >= 0.
    The feasible set has an empty interior, so :func:`zero_forcing` solves
    the equivalent problem on the null space of ``h_cd^H`` instead.
    """
    ch.check(cfg)
    p = ConeProgram("zero_forcing")
    Q = p.hermitian("Q", cfg.N)
    p.maximize(Q.inner(ch.H_ce))
    p.add_eq(Q.inner(ch.H_cd), "destination_null", family="destination_null")
    for i, p_i in enumerate(cfg.p_harvested):
        p.add_le(Q.diag(i) - p_i, f"node_power_{i}", family="node_power")
    return p


def _reduced_program(ch: ChannelSet, cfg: SystemConfig, B: np.ndarray) -> ConeProgram:
    # Q = B X B^H with the columns of B spanning null(h_cd^H)
    p = ConeProgram("zero_forcing_reduced")
    X = p.hermitian("X", B.shape[1])
    g = B.conj().T @ ch.h_ce
    p.maximize(X.inner(np.outer(g, g.conj())))
    for i, p_i in enumerate(cfg.p_harvested):
        b = B[i, :].conj()  # (B X B^H)_ii = b^H X b
        p.add_le(X.inner(np.outer(b, b.conj())) - p_i, f"node_power_{i}", family="node_power")
    return p


def zero_forcing(ch: ChannelSet, cfg: SystemConfig, tol: float = DEFAULT_TOL) -> TransmitDesign:
    ch.check(cfg)
    if cfg.N < 2:
        raise ConfigError("zero forcing needs at least two jammers")
    nrm = np.linalg.norm(ch.h_bd)
    v = np.sqrt(cfg.p_bs_max) * ch.h_bd / nrm if nrm > 0 else np.zeros(cfg.M, dtype=complex)
    if not np.any(ch.h_cd):
        B = np.eye(cfg.N, dtype=complex)
    else:
        B = null_space(ch.h_cd.conj()[None, :])
    if not np.any(B.conj().T @ ch.h_ce):
        # aligned jamming channels: no useful jamming survives the null
        return TransmitDesign(v, np.zeros((cfg.N, cfg.N), dtype=complex))
    sol = solve_with_retry(_reduced_program(ch, cfg, B), tol).raise_for_status()
    X = sol.primal["X"]
    w, E = np.linalg.eigh(0.5 * (X + X.conj().T))
    X = (E * np.clip(w, 0.0, None)) @ E.conj().T
    Q = B @ X @ B.conj().T
    Q = 0.5 * (Q + Q.conj().T)
    # clip solver-level excess on the per-node limits
    d = np.real(np.diag(Q))
    s = np.where(d > cfg.p_nodes, np.sqrt(cfg.p_nodes / np.maximum(d, 1e-300)), 1.0)
    Q = (s[:, None] * Q) * s[None, :]
    return TransmitDesign(v, Q)
