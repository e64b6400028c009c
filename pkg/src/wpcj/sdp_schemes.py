"""Optimal SDP-based schemes: secrecy-rate maximization and power minimization.

Both schemes drop the rank-one constraint on ``V = v v^H``, solve the relaxed
SDP and then factor the optimal ``V``.  The relaxation is tight, so the factor
is exact up to solver accuracy; the KKT diagnostics below check that claim on
each solve.

Solving happens in a rotated basis.  A unitary ``U`` on the BS side puts
``h_bd`` and ``h_be`` in the first two coordinates, and a unitary ``W`` on the
jammer side does the same for ``h_cd`` and ``h_ce``.  The rotated SDP is the
same problem (``V = U V' U^H``, ``Q = W Q' W^H``), but interior-point
iterations are far better conditioned on it.  The per-node limits
``Q_ii <= P_i`` become ``w_i^H Q' w_i <= P_i`` with ``w_i = W^H e_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conic import FALLBACK_TOL, ConeProgram, ConeSolution, Status, solve_with_retry
from .conic.solver import DEFAULT_TOL
from .errors import AllZeroError, MissingDuals, Rank1ExtractionError
from .model import ChannelSet, SystemConfig, TransmitDesign, gamma_d_from, rates

RANK1_TOL = 1e-4
COMP_SLACK_TOL = 1e-5


@dataclass(frozen=True)
class SrmSolveReport:
    design: TransmitDesign
    t_star: float
    v_big: np.ndarray
    rank1_ratio: float
    sinr_d: float
    sinr_e: float
    r_s: float
    solver: dict
    objective: float = math.nan
    q_big: np.ndarray | None = field(default=None, repr=False)
    v_tilde: np.ndarray | None = field(default=None, repr=False)
    relaxed_sinr_d: float = math.nan

    @property
    def bs_power(self) -> float:
        return self.design.bs_power


@dataclass(frozen=True)
class KktReport:
    lambda1: float
    lambda2: float
    lambda3: float | None
    mu: np.ndarray
    comp_slack_residual: float
    stationarity_residual: float
    rank1_certified: bool
    dual_psd_min_eig: float = math.nan


# -- basis handling -------------------------------------------------------


def _basis(h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
    """Unitary whose first columns span ``{h1, h2}`` (Gram-Schmidt via QR)."""
    n = h1.size
    X = np.column_stack([h1, h2, np.eye(n)])
    U, R = np.linalg.qr(X)
    # QR of a rank-deficient leading block still yields a unitary U
    return U[:, :n]


@dataclass(frozen=True)
class _Frame:
    U: np.ndarray  # BS side, M x M
    W: np.ndarray  # jammer side, N x N

    @classmethod
    def identity(cls, M: int, N: int) -> "_Frame":
        return cls(np.eye(M, dtype=complex), np.eye(N, dtype=complex))

    @classmethod
    def for_channels(cls, ch: ChannelSet) -> "_Frame":
        return cls(_basis(ch.h_be, ch.h_bd), _basis(ch.h_cd, ch.h_ce))

    @property
    def is_identity(self) -> bool:
        return (np.array_equal(self.U, np.eye(self.U.shape[0]))
                and np.array_equal(self.W, np.eye(self.W.shape[0])))

    def gram_bs(self, h: np.ndarray) -> np.ndarray:
        g = self.U.conj().T @ h
        return np.outer(g, g.conj())

    def gram_jam(self, h: np.ndarray) -> np.ndarray:
        g = self.W.conj().T @ h
        return np.outer(g, g.conj())

    def bs_out(self, X: np.ndarray) -> np.ndarray:
        Y = self.U @ X @ self.U.conj().T
        return 0.5 * (Y + Y.conj().T)

    def jam_out(self, X: np.ndarray) -> np.ndarray:
        Y = self.W @ X @ self.W.conj().T
        return 0.5 * (Y + Y.conj().T)


def _node_power(Q, frame: _Frame, i: int):
    if frame.is_identity:
        return Q.diag(i)
    w = frame.W.conj()[i, :]  # W^H e_i
    return Q.inner(np.outer(w, w.conj()))


# -- secrecy-rate maximization -------------------------------------------------


def _srm_program(ch: ChannelSet, cfg: SystemConfig, frame: _Frame) -> ConeProgram:
    ch.check(cfg)
    p = ConeProgram("b_cj_srm")
    V = p.hermitian("V", cfg.M)
    Q = p.hermitian("Q", cfg.N)
    t = p.scalar("t")
    p.maximize(V.inner(frame.gram_bs(ch.h_bd)))
    p.add_le(V.trace() - cfg.p_bs_max * t.expr, "bs_power", family="bs_power")
    for i, p_i in enumerate(cfg.p_harvested):
        p.add_le(_node_power(Q, frame, i) - p_i * t.expr, f"node_power_{i}", family="node_power")
    eve = V.inner(frame.gram_bs(ch.h_be)) - cfg.gamma_e * (Q.inner(frame.gram_jam(ch.h_ce))
                                                           + cfg.sigma2 * t.expr)
    p.add_le(eve, "eavesdropper", family="eavesdropper")
    p.add_eq(Q.inner(frame.gram_jam(ch.h_cd)) + cfg.sigma2 * t.expr - 1.0, "normalization",
             family="normalization")
    return p


def build_srm_sdp(ch: ChannelSet, cfg: SystemConfig) -> ConeProgram:
    """Charnes-Cooper form of the relaxed secrecy-rate problem.

    Variables ``V~ = t V``, ``Q~ = t Q`` and the slack ``t``; the objective
    ``Tr(H_bd V~)`` is the destination SINR because the denominator is
    normalized to one.
    """
    return _srm_program(ch, cfg, _Frame.identity(cfg.M, cfg.N))


def _solve_robust(p: ConeProgram, tol: float) -> ConeSolution:
    return solve_with_retry(p, tol, FALLBACK_TOL)


def extract_rank_one(V: np.ndarray) -> tuple[np.ndarray, float]:
    """Dominant-eigenpair factor ``v = sqrt(l1) u1`` and the ratio ``l2/l1``.

    The phase of ``u1`` is fixed so its largest-magnitude entry is real and
    positive.
    """
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ValueError("V must be square")
    scale = max(1.0, float(np.abs(V).max()))
    if not np.allclose(V, V.conj().T, rtol=0.0, atol=1e-9 * scale):
        raise ValueError("V is not Hermitian")
    V = 0.5 * (V + V.conj().T)
    tr = float(np.trace(V).real)
    if tr <= 1e-12:
        raise AllZeroError(f"trace {tr:.3e} is numerically zero")
    w, U = np.linalg.eigh(V)
    if w[0] < -1e-9 * max(w[-1], 0.0) - 1e-15:
        raise ValueError(f"V is not PSD (min eigenvalue {w[0]:.3e})")
    l1 = float(w[-1])
    u = U[:, -1]
    k = int(np.argmax(np.abs(u)))
    u = u * (abs(u[k]) / u[k])
    u[k] = abs(u[k])  # exactly real, not just up to rounding
    ratio = 0.0 if V.shape[0] == 1 else max(float(w[-2]), 0.0) / l1
    return np.sqrt(l1) * u, ratio


def _polish(v: np.ndarray, Q: np.ndarray, ch: ChannelSet, cfg: SystemConfig):
    """Pull a solver-accurate design onto the feasible set.

    Interior-point output can exceed a budget or the eavesdropper cap by a
    relative amount of order the solver tolerance.  Clip the per-node powers
    and shrink ``v`` so every constraint holds exactly.
    """
    d = np.real(np.diag(Q))
    over = d > cfg.p_nodes
    if np.any(over):
        s = np.ones(cfg.N)
        s[over] = np.sqrt(cfg.p_nodes[over] / d[over])
        Q = (s[:, None] * Q) * s[None, :]
    Q = 0.5 * (Q + Q.conj().T)
    w, E = np.linalg.eigh(Q)
    if w[0] < 0:
        Q = (E * np.clip(w, 0.0, None)) @ E.conj().T
    pw = float(np.vdot(v, v).real)
    if pw > cfg.p_bs_max:
        v = v * np.sqrt(cfg.p_bs_max / pw)
    eve_sig = abs(np.vdot(ch.h_be, v)) ** 2
    cap = cfg.gamma_e * (float(np.real(np.vdot(ch.h_ce, Q @ ch.h_ce))) + cfg.sigma2)
    if eve_sig > cap:
        v = v * np.sqrt(cap / eve_sig)
    return v, Q


def _report(sol: ConeSolution, v_big, q_big, t_star, ch, cfg, v_tilde=None) -> SrmSolveReport:
    v, ratio = extract_rank_one(v_big)
    if ratio > RANK1_TOL:
        raise Rank1ExtractionError(f"relaxed beamformer has eigenvalue ratio {ratio:.3e}", ratio)
    denom = float(np.real(np.vdot(ch.h_cd, q_big @ ch.h_cd))) + cfg.sigma2
    relaxed = float(np.real(np.vdot(ch.h_bd, v_big @ ch.h_bd))) / denom
    v, q_big = _polish(v, q_big, ch, cfg)
    design = TransmitDesign(v, q_big)
    r = rates(design, ch, cfg.sigma2)
    return SrmSolveReport(
        design=design,
        t_star=float(t_star),
        v_big=v_big,
        rank1_ratio=ratio,
        sinr_d=r.sinr_d,
        sinr_e=r.sinr_e,
        r_s=r.r_s,
        solver=sol.summary(),
        objective=sol.objective_value,
        q_big=q_big,
        v_tilde=v_tilde,
        relaxed_sinr_d=relaxed,
    )


def _psd_part(X: np.ndarray) -> np.ndarray:
    # the primal iterate may sit outside the cone by the primal residual
    w, E = np.linalg.eigh(0.5 * (X + X.conj().T))
    if w[0] >= 0:
        return 0.5 * (X + X.conj().T)
    return (E * np.clip(w, 0.0, None)) @ E.conj().T


def _solve_srm(ch: ChannelSet, cfg: SystemConfig, tol: float):
    frame = _Frame.for_channels(ch)
    p = _srm_program(ch, cfg, frame)
    sol = _solve_robust(p, tol).raise_for_status()
    t = float(sol.primal["t"])
    v_tilde = _psd_part(frame.bs_out(sol.primal["V"]))
    q_tilde = _psd_part(frame.jam_out(sol.primal["Q"]))
    return frame, sol, t, v_tilde, q_tilde


def solve_b_cj_srm(ch: ChannelSet, cfg: SystemConfig, tol: float = DEFAULT_TOL,
                   return_solution: bool = False):
    """Maximize the secrecy rate subject to the eavesdropper SINR cap ``gamma_e``.

    Returns an :class:`SrmSolveReport`; with ``return_solution`` also the raw
    :class:`ConeSolution` in original coordinates (needed by
    :func:`verify_kkt_rank_one`).
    """
    frame, sol, t, v_tilde, q_tilde = _solve_srm(ch, cfg, tol)
    report = _report(sol, v_tilde / t, q_tilde / t, t, ch, cfg, v_tilde=v_tilde)
    if return_solution:
        return report, _to_original(sol, frame)
    return report


def _to_original(sol: ConeSolution, frame: _Frame) -> ConeSolution:
    primal = dict(sol.primal)
    dual = dict(sol.dual)
    for name, out in (("V", frame.bs_out), ("Q", frame.jam_out)):
        if name in primal:
            primal[name] = out(primal[name])
        if name in dual:
            dual[name] = out(dual[name])
    return ConeSolution(sol.status, primal, dual, sol.objective_value, sol.iterations,
                        sol.residuals, dual_bound=sol.dual_bound, solver_status=sol.solver_status,
                        solve_time=sol.solve_time)


# -- transmit power minimization -------------------------------------------------


def _tpm_program(ch: ChannelSet, cfg: SystemConfig, frame: _Frame, unit: float = 1.0) -> ConeProgram:
    # variables are V / unit and Q / unit; unit = sigma2 measures powers in
    # noise units so the solver's absolute gap test is meaningful
    ch.check(cfg)
    gd = gamma_d_from(cfg.rs_min, cfg.gamma_e)
    noise = cfg.sigma2 / unit
    p = ConeProgram("b_cj_tpm")
    V = p.hermitian("V", cfg.M)
    Q = p.hermitian("Q", cfg.N)
    p.minimize(V.trace())
    dest = gd * (Q.inner(frame.gram_jam(ch.h_cd)) + noise) - V.inner(frame.gram_bs(ch.h_bd))
    p.add_le(dest, "destination", family="destination")
    eve = V.inner(frame.gram_bs(ch.h_be)) - cfg.gamma_e * (Q.inner(frame.gram_jam(ch.h_ce)) + noise)
    p.add_le(eve, "eavesdropper", family="eavesdropper")
    for i, p_i in enumerate(cfg.p_harvested):
        p.add_le(_node_power(Q, frame, i) - p_i / unit, f"node_power_{i}", family="node_power")
    return p


def build_tpm_sdp(ch: ChannelSet, cfg: SystemConfig) -> ConeProgram:
    """Relaxed minimum-power problem meeting the secrecy-rate target ``rs_min``."""
    return _tpm_program(ch, cfg, _Frame.identity(cfg.M, cfg.N))


def solve_b_cj_tpm(ch: ChannelSet, cfg: SystemConfig, tol: float = DEFAULT_TOL,
                   return_solution: bool = False):
    """Minimum BS power with ``r_s >= rs_min`` and eavesdropper SINR at most ``gamma_e``.

    Raises :class:`~wpcj.errors.InfeasibleProblem` when the node powers
    cannot support the target.  ``p_bs_max`` is not a constraint here.
    """
    frame = _Frame.for_channels(ch)
    unit = cfg.sigma2
    p = _tpm_program(ch, cfg, frame, unit)
    sol = _solve_robust(p, tol).raise_for_status()
    sol = _rescaled(sol, unit)
    V = _psd_part(frame.bs_out(sol.primal["V"]))
    Q = _psd_part(frame.jam_out(sol.primal["Q"]))
    v, ratio = extract_rank_one(V)
    if ratio > RANK1_TOL:
        raise Rank1ExtractionError(f"relaxed beamformer has eigenvalue ratio {ratio:.3e}", ratio)
    denom = float(np.real(np.vdot(ch.h_cd, Q @ ch.h_cd))) + cfg.sigma2
    relaxed = float(np.real(np.vdot(ch.h_bd, V @ ch.h_bd))) / denom
    v, Q = _polish_tpm(v, Q, ch, cfg)
    design = TransmitDesign(v, Q)
    r = rates(design, ch, cfg.sigma2)
    report = SrmSolveReport(
        design=design, t_star=1.0, v_big=V, rank1_ratio=ratio, sinr_d=r.sinr_d, sinr_e=r.sinr_e,
        r_s=r.r_s, solver=sol.summary(), objective=sol.objective_value, q_big=Q,
        relaxed_sinr_d=relaxed,
    )
    if return_solution:
        return report, _to_original(sol, frame)
    return report


def _rescaled(sol: ConeSolution, unit: float) -> ConeSolution:
    # multipliers are unit-free: every row and the objective scale by 1/unit
    primal = {k: unit * val for k, val in sol.primal.items()}
    return ConeSolution(sol.status, primal, dict(sol.dual), unit * sol.objective_value,
                        sol.iterations, sol.residuals, dual_bound=unit * sol.dual_bound,
                        solver_status=sol.solver_status, solve_time=sol.solve_time)


def _polish_tpm(v, Q, ch: ChannelSet, cfg: SystemConfig):
    # node limits and PSD as for SRM, then meet the destination target from
    # above while keeping the eavesdropper cap; the budget is not binding here
    big = cfg.replace(p_bs_max=max(cfg.p_bs_max, 1e300))
    v, Q = _polish(v, Q, ch, big)
    gd = gamma_d_from(cfg.rs_min, cfg.gamma_e)
    need = gd * (float(np.real(np.vdot(ch.h_cd, Q @ ch.h_cd))) + cfg.sigma2)
    got = abs(np.vdot(ch.h_bd, v)) ** 2
    if 0 < got < need:
        v = v * np.sqrt(need / got)
    return v, Q


# -- KKT diagnostics ------------------------------------------------------


def verify_kkt_rank_one(report: SrmSolveReport, sol: ConeSolution, which: str,
                        ch: ChannelSet, cfg: SystemConfig, tol: float = DEFAULT_TOL) -> KktReport:
    """Rebuild the dual matrix ``P1`` from the scalar multipliers and test ``P1 V = 0``.

    Multipliers are taken in min-form (the SRM objective is negated), as
    reported by the solver: ``lambda1`` on the BS power budget (SRM) or on the
    destination constraint (TPM), ``lambda2`` on the eavesdropper constraint,
    ``lambda3`` on the normalization equality (SRM only) and ``mu`` on the
    per-node limits.  Stationarity in ``V`` reads

    - SRM: ``P1 = lambda1 I + lambda2 H_be - H_bd``
    - TPM: ``P1 = I - lambda1 H_bd + lambda2 H_be``

    ``comp_slack_residual`` is ``||P1 V||_F / (||P1||_F ||V||_F)`` with
    ``V = V~`` (SRM) or ``V`` (TPM); dividing by ``||P1||_F`` makes it
    invariant to rescaling the objective or the channel gains.  ``stationarity_residual`` compares ``P1`` against the
    PSD dual the solver returned, relative to ``||H_bd||_F``.
    """
    which = which.upper()
    if which not in ("SRM", "TPM"):
        raise ValueError("which must be 'SRM' or 'TPM'")
    if sol.status is not Status.OPTIMAL:
        raise ValueError("KKT verification needs an optimal solution")
    if not sol.dual:
        raise MissingDuals("solution carries no dual multipliers")
    try:
        mu = np.array([sol.dual[f"node_power_{i}"] for i in range(cfg.N)], dtype=float)
        lam2 = float(sol.dual["eavesdropper"])
        if which == "SRM":
            lam1 = float(sol.dual["bs_power"])
            lam3 = float(sol.dual["normalization"])
        else:
            lam1 = float(sol.dual["destination"])
            lam3 = None
        Z = sol.dual.get("V")
    except KeyError as exc:
        raise MissingDuals(f"missing multiplier {exc}") from None

    H_bd, H_be = ch.H_bd, ch.H_be
    I = np.eye(cfg.M)
    if which == "SRM":
        P1 = lam1 * I + lam2 * H_be - H_bd
        V = sol.primal["V"]
    else:
        P1 = I - lam1 * H_bd + lam2 * H_be
        V = sol.primal["V"]
    scale = float(np.linalg.norm(V)) * float(np.linalg.norm(P1))
    comp = float(np.linalg.norm(P1 @ V)) / scale if scale > 0 else math.inf
    if Z is None:
        stat = math.nan
    else:
        stat = float(np.linalg.norm(P1 - Z)) / max(1.0, float(np.linalg.norm(H_bd)))
    certified = bool(lam1 > tol and comp <= COMP_SLACK_TOL and report.rank1_ratio <= RANK1_TOL)
    return KktReport(
        lambda1=lam1,
        lambda2=lam2,
        lambda3=lam3,
        mu=mu,
        comp_slack_residual=comp,
        stationarity_residual=stat,
        rank1_certified=certified,
        dual_psd_min_eig=float(np.linalg.eigvalsh(0.5 * (P1 + P1.conj().T))[0]),
    )
