"""Low-complexity schemes: CCCP iterations over second-order cone programs.

Both problems are written with the rank-one jamming ``Q = q q^H`` and optimized
directly over the vectors ``(v, q)``.  The convex terms that sit on the wrong
side of an inequality are replaced by their first-order Taylor expansions at
the current point.  Each expansion is a global under-estimator, so the
convexified constraint is a restriction of the true one.  The current point
stays feasible, and the objective moves monotonically.

The squared magnitudes are written as rotated cones
``|x|^2 <= L  <=>  ||(2x, L - 1)|| <= L + 1``.  Worked out from the
constraints directly:

- SRM destination: ``|h_cd^H q|^2 <= L`` with ``L = -Re{a^H v} - b t - sigma2``.
- SRM eavesdropper: ``|h_be^H v|^2 <= L`` with ``L = gamma_e (-Re{c^H q} - d + sigma2)``.
- TPM destination: ``|h_cd^H q|^2 <= L`` with ``L = -Re{a1^H v}/gamma_d - b1``.
- TPM eavesdropper: ``|h_be^H v|^2 <= L`` with ``L = -gamma_e (Re{c^H q} + d1)``.

Inside the loops every power is measured in units of ``sigma2``.  SINRs are
unchanged by that rescaling, and it keeps the cone data near unit scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .conic import ConeProgram, ConeSolution, solve_with_retry
from .conic.solver import DEFAULT_TOL
from .errors import ConfigError, InitializationInfeasible, NumericalFailure
from .model import ChannelSet, SystemConfig, TransmitDesign, gamma_d_from, sinr

T_MIN = 1e-9
DEFAULT_THETA1 = 0.01
DEFAULT_THETA2 = 1.0  # dB
DEFAULT_I_MAX = 50
# relative excess of the true eavesdropper SINR over gamma_e tolerated per iterate
EVE_SLACK = 1e-4


@dataclass
class CccpState:
    v_cur: np.ndarray
    q_cur: np.ndarray
    t_cur: float | None = None
    iter: int = 0
    objective_history: list[float] = field(default_factory=list)
    trace: list[tuple] = field(default_factory=list)
    converged: bool = False

    def copy(self) -> "CccpState":
        return CccpState(self.v_cur.copy(), self.q_cur.copy(), self.t_cur, self.iter,
                         list(self.objective_history), list(self.trace), self.converged)

    def scaled(self, factor: float) -> "CccpState":
        """Same point with both vectors multiplied by ``factor`` (a power-unit change)."""
        out = self.copy()
        out.v_cur = self.v_cur * factor
        out.q_cur = self.q_cur * factor
        return out


# -- Taylor surrogates -------------------------------------------------------


def taylor_linearize_ratio(A: np.ndarray, v_pt: np.ndarray, t_pt: float) -> tuple[np.ndarray, float]:
    """Coefficients ``(a, b)`` of the tangent plane of ``v^H A v / t`` at ``(v_pt, t_pt)``.

    The tangent is ``zeta(v, t) = -Re{a^H v} - b t`` with
    ``a = -(2/t_pt) A v_pt`` and ``b = v_pt^H A v_pt / t_pt^2``.
    """
    if not t_pt > 0:
        raise ValueError(f"expansion point needs t > 0, got {t_pt}")
    A = np.asarray(A, dtype=complex)
    v_pt = np.asarray(v_pt, dtype=complex)
    Av = A @ v_pt
    a = -(2.0 / t_pt) * Av
    b = float(np.vdot(v_pt, Av).real) / t_pt ** 2
    return a, b


def taylor_linearize_quadratic(A: np.ndarray, v_pt: np.ndarray) -> tuple[np.ndarray, float]:
    """Coefficients ``(c, d)`` of the tangent of ``v^H A v`` at ``v_pt``.

    The tangent is ``psi(v) = -Re{c^H v} - d`` with ``c = -2 A v_pt`` and
    ``d = v_pt^H A v_pt``.
    """
    A = np.asarray(A, dtype=complex)
    v_pt = np.asarray(v_pt, dtype=complex)
    Av = A @ v_pt
    return -2.0 * Av, float(np.vdot(v_pt, Av).real)


def ratio_surrogate(A, v_pt, t_pt, v, t) -> float:
    a, b = taylor_linearize_ratio(A, v_pt, t_pt)
    return float(-np.vdot(a, v).real - b * t)


def quadratic_surrogate(A, v_pt, v) -> float:
    c, d = taylor_linearize_quadratic(A, v_pt)
    return float(-np.vdot(c, v).real - d)


# -- subproblem builders ---------------------------------------------------------


def _square_cone(p: ConeProgram, x_parts, L, name: str, family: str) -> None:
    # |x|^2 <= L  as  ||(2 Re x, 2 Im x, L - 1)|| <= L + 1
    p.add_soc([2.0 * x_parts[0], 2.0 * x_parts[1], L - 1.0], L + 1.0, name, family=family)


def _node_cones(p: ConeProgram, q, cfg: SystemConfig) -> None:
    for i, p_i in enumerate(cfg.p_harvested):
        p.add_soc(q.entry_parts(i), math.sqrt(p_i), f"node_power_{i}", family="node_power")


def build_lc_srm_socp(state: CccpState, ch: ChannelSet, cfg: SystemConfig) -> ConeProgram:
    """Convexified secrecy-rate subproblem around ``state`` (maximize ``t``)."""
    ch.check(cfg)
    if state.t_cur is None or not state.t_cur > 0:
        raise ValueError("the SRM subproblem needs a positive t_cur")
    a, b = taylor_linearize_ratio(ch.H_bd, state.v_cur, state.t_cur)
    c, d = taylor_linearize_quadratic(ch.H_ce, state.q_cur)

    p = ConeProgram("lc_srm")
    v = p.complex_vector("v", cfg.M)
    q = p.complex_vector("q", cfg.N)
    t = p.scalar("t")
    p.maximize(t.expr)
    L_dest = -v.re_inner(a) - b * t.expr - cfg.sigma2
    _square_cone(p, q.inner_parts(ch.h_cd), L_dest, "destination", "destination")
    L_eve = cfg.gamma_e * (-q.re_inner(c) - d + cfg.sigma2)
    _square_cone(p, v.inner_parts(ch.h_be), L_eve, "eavesdropper", "eavesdropper")
    p.add_soc(v.components(), math.sqrt(cfg.p_bs_max), "bs_power", family="bs_power")
    _node_cones(p, q, cfg)
    p.add_le(T_MIN - t.expr, "t_positive", family="t_positive")
    return p


def build_lc_tpm_socp(state: CccpState, ch: ChannelSet, cfg: SystemConfig) -> ConeProgram:
    """Convexified power-minimization subproblem around ``state``.

    ``||v||^2`` is minimized through the epigraph ``||v|| <= r`` (same argmin),
    which is tagged with family ``objective`` and is not a constraint cone.
    """
    ch.check(cfg)
    gd = gamma_d_from(cfg.rs_min, cfg.gamma_e)
    if not gd > 0:
        raise ConfigError("the TPM subproblem needs gamma_d > 0")
    c, d = taylor_linearize_quadratic(ch.H_ce, state.q_cur)
    Av = ch.H_bd @ state.v_cur
    a1 = -2.0 * Av
    b1 = float(np.vdot(state.v_cur, Av).real) / gd + cfg.sigma2
    d1 = d - cfg.sigma2

    p = ConeProgram("lc_tpm")
    v = p.complex_vector("v", cfg.M)
    q = p.complex_vector("q", cfg.N)
    r = p.scalar("r")
    p.minimize(r.expr)
    p.add_soc(v.components(), r.expr, "power_epigraph", family="objective")
    L_dest = -(1.0 / gd) * v.re_inner(a1) - b1
    _square_cone(p, q.inner_parts(ch.h_cd), L_dest, "destination", "destination")
    L_eve = -cfg.gamma_e * (q.re_inner(c) + d1)
    _square_cone(p, v.inner_parts(ch.h_be), L_eve, "eavesdropper", "eavesdropper")
    _node_cones(p, q, cfg)
    return p


# -- initialization --------------------------------------------------------


def _null_direction(h_bd: np.ndarray, h_be: np.ndarray) -> np.ndarray:
    """Unit vector along the part of ``h_bd`` orthogonal to ``h_be`` (zero if none)."""
    nb = np.vdot(h_be, h_be).real
    proj = h_bd - h_be * (np.vdot(h_be, h_bd) / nb) if nb > 0 else h_bd.copy()
    n = np.linalg.norm(proj)
    if n <= 1e-12 * max(np.linalg.norm(h_bd), 1e-300):
        return np.zeros_like(h_bd)
    return proj / n


def initialize_cccp(ch: ChannelSet, cfg: SystemConfig, mode: str) -> CccpState:
    """Feasible starting point for the CCCP loops.

    ``v0`` points along the projection of ``h_bd`` onto the null space of
    ``h_be``, and ``q0_i = sqrt(P_i)/2``.  SRM uses full power and takes ``t0``
    as the achieved destination SINR.  TPM scales ``v0`` up to the
    destination target.  When the null space misses ``h_bd`` (for example
    ``M = 1``), ``v0`` follows ``h_bd`` scaled down to the eavesdropper cap.
    """
    mode = mode.upper()
    if mode not in ("SRM", "TPM"):
        raise ValueError("mode must be 'SRM' or 'TPM'")
    ch.check(cfg)
    q0 = np.sqrt(cfg.p_nodes) / 2.0 + 0j
    jam_d = abs(np.vdot(ch.h_cd, q0)) ** 2 + cfg.sigma2
    eve_cap = cfg.gamma_e * (abs(np.vdot(ch.h_ce, q0)) ** 2 + cfg.sigma2)
    u = _null_direction(ch.h_bd, ch.h_be)
    fallback = not np.any(u)
    if fallback:
        nrm = np.linalg.norm(ch.h_bd)
        if nrm == 0:
            raise InitializationInfeasible("h_bd is zero")
        u = ch.h_bd / nrm
    gain_d = abs(np.vdot(ch.h_bd, u)) ** 2
    gain_e = abs(np.vdot(ch.h_be, u)) ** 2
    alpha_cap = math.inf if gain_e == 0 else math.sqrt(eve_cap / gain_e)

    if mode == "SRM":
        alpha = min(math.sqrt(cfg.p_bs_max), alpha_cap)
        if not alpha > 0 or gain_d == 0:
            raise InitializationInfeasible("no beamformer meets the eavesdropper cap with t > 0")
        v0 = alpha * u
        t0 = sinr(ch.h_bd, ch.h_cd, v0, np.outer(q0, q0.conj()), cfg.sigma2)
        return CccpState(v0, q0, t0)

    gd = gamma_d_from(cfg.rs_min, cfg.gamma_e)
    if gain_d == 0:
        raise InitializationInfeasible("h_bd is orthogonal to every admissible direction")
    alpha = math.sqrt(gd * jam_d / gain_d)
    if alpha > alpha_cap * (1 + 1e-12):
        raise InitializationInfeasible(
            "destination target and eavesdropper cap cannot both hold along h_bd")
    return CccpState(alpha * u, q0, None)


# -- loops ---------------------------------------------------------------


def _noise_units(cfg: SystemConfig) -> SystemConfig:
    s = cfg.sigma2
    return cfg.replace(sigma2=1.0, p_bs_max=cfg.p_bs_max / s,
                       p_harvested=tuple(p / s for p in cfg.p_harvested))


def _eve_excess(ch: ChannelSet, v, q, cfg: SystemConfig) -> float:
    sig = abs(np.vdot(ch.h_be, v)) ** 2
    cap = cfg.gamma_e * (abs(np.vdot(ch.h_ce, q)) ** 2 + cfg.sigma2)
    if cap <= 0:
        return math.inf if sig > 0 else 0.0
    return sig / cap - 1.0


def _clip_nodes(q: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    lim = np.sqrt(cfg.p_nodes)
    mag = np.abs(q)
    s = np.where(mag > lim, lim / np.maximum(mag, 1e-300), 1.0)
    return q * s


def _solve_sub(p: ConeProgram, tol: float) -> ConeSolution:
    return solve_with_retry(p, tol).raise_for_status()


def run_lc_b_cj_srm(ch: ChannelSet, cfg: SystemConfig, theta1: float = DEFAULT_THETA1,
                    i_max: int = DEFAULT_I_MAX, tol: float = DEFAULT_TOL,
                    state: CccpState | None = None) -> tuple[TransmitDesign, CccpState]:
    """CCCP for secrecy-rate maximization; stops when ``|t_new - t_old| < theta1``."""
    if not theta1 > 0:
        raise ValueError("theta1 must be positive")
    if i_max < 1:
        raise ValueError("i_max must be at least 1")
    ch.check(cfg)
    unit = math.sqrt(cfg.sigma2)
    ncfg = _noise_units(cfg)
    st = (state or initialize_cccp(ch, cfg, "SRM")).scaled(1.0 / unit)
    st.objective_history = [float(st.t_cur)]
    while st.iter < i_max:
        sol = _solve_sub(build_lc_srm_socp(st, ch, ncfg), tol)
        v, q = sol.primal["v"], _clip_nodes(sol.primal["q"], ncfg)
        t_new = float(sol.primal["t"])
        excess = _eve_excess(ch, v, q, ncfg)
        st.trace.append((st.iter + 1, t_new) + tuple(sol.residuals) + (excess,))
        if excess > EVE_SLACK:
            raise NumericalFailure(f"iterate exceeds the eavesdropper cap by {excess:.2e}", sol)
        # keep the next expansion point feasible: t may not exceed the true SINR
        t_new = min(t_new, sinr(ch.h_bd, ch.h_cd, v, np.outer(q, q.conj()), ncfg.sigma2))
        if t_new < st.t_cur:
            # the expansion point is feasible, so any decrease is solver noise
            st.converged = True
            break
        step = t_new - st.t_cur
        st.v_cur, st.q_cur, st.t_cur = v, q, t_new
        st.iter += 1
        st.objective_history.append(t_new)
        if step < theta1:
            st.converged = True
            break
    out = st.scaled(unit)
    return TransmitDesign.from_weights(out.v_cur, out.q_cur), out


def run_lc_b_cj_tpm(ch: ChannelSet, cfg: SystemConfig, theta2: float = DEFAULT_THETA2,
                    i_max: int = DEFAULT_I_MAX, tol: float = DEFAULT_TOL,
                    state: CccpState | None = None) -> tuple[TransmitDesign, CccpState]:
    """CCCP for power minimization; stops when the power changes by less than ``theta2`` dB.

    ``objective_history`` holds ``||v||^2`` in watts.
    """
    if not theta2 > 0:
        raise ValueError("theta2 must be positive")
    if i_max < 1:
        raise ValueError("i_max must be at least 1")
    ch.check(cfg)
    unit = math.sqrt(cfg.sigma2)
    ncfg = _noise_units(cfg)
    st = (state or initialize_cccp(ch, cfg, "TPM")).scaled(1.0 / unit)
    power = float(np.vdot(st.v_cur, st.v_cur).real)
    st.objective_history = [power * cfg.sigma2]
    while st.iter < i_max:
        sol = _solve_sub(build_lc_tpm_socp(st, ch, ncfg), tol)
        v, q = sol.primal["v"], _clip_nodes(sol.primal["q"], ncfg)
        p_new = float(np.vdot(v, v).real)
        excess = _eve_excess(ch, v, q, ncfg)
        st.trace.append((st.iter + 1, p_new * cfg.sigma2) + tuple(sol.residuals) + (excess,))
        if excess > EVE_SLACK:
            raise NumericalFailure(f"iterate exceeds the eavesdropper cap by {excess:.2e}", sol)
        if p_new > power:
            st.converged = True
            break
        change_db = abs(10.0 * math.log10(p_new) - 10.0 * math.log10(power)) if p_new > 0 else math.inf
        st.v_cur, st.q_cur, power = v, q, p_new
        st.iter += 1
        st.objective_history.append(p_new * cfg.sigma2)
        if change_db < theta2:
            st.converged = True
            break
    out = st.scaled(unit)
    return TransmitDesign.from_weights(out.v_cur, out.q_cur), out


# -- trace output ---------------------------------------------------------------


TRACE_HEADER = "# iteration objective primal_res dual_res gap eve_excess"


def format_trace(state: CccpState) -> str:
    """Per-iteration convergence log, one whitespace-separated line per SOCP solve."""
    lines = [TRACE_HEADER]
    for row in state.trace:
        n, obj, *rest = row
        lines.append(f"{n:d} {obj:.9e} " + " ".join(f"{x:.3e}" for x in rest))
    return "\n".join(lines) + "\n"


def write_trace(state: CccpState, fh: IO[str]) -> None:
    fh.write(format_trace(state))
