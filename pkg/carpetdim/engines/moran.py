"""
Equações de Moran: expoentes t_A, t_B, D_A, D_B, fórmulas fechadas de
Bedford–McMullen e a base da pressão.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from ..config import EXPONENT_TOLERANCE, INEQUALITY_SLACK, MAX_BISECTION_STEPS
from ..errors import EmptyInput, InternalInequalityViolation, NotBMType, RatioOutOfRange
from ..models import Orientation
from .system import BaranskiSystem, PatternProjections, classify, project

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MoranExponents:
    t_A: float
    t_B: float
    D_A: float
    D_B: float

    @property
    def box_dimension(self) -> float:
        return max(self.D_A, self.D_B)

    @property
    def dominant(self) -> Orientation:
        return Orientation.A if self.D_A >= self.D_B else Orientation.B


def _solve_decreasing(f, lower: float) -> float:
    """
    Raiz de f estritamente decrescente com f(lower) >= 0, por bisseção.

    O colchete [lower, lower + u] dobra u a partir de 1 até f < 0.
    """
    f0 = f(lower)
    if f0 <= 0.0:
        return lower
    width = 1.0
    while f(lower + width) >= 0.0:
        if f(lower + width) == 0.0:
            return lower + width
        width *= 2.0
    return bisect(
        f,
        lower,
        lower + width,
        xtol=EXPONENT_TOLERANCE,
        maxiter=MAX_BISECTION_STEPS,
    )


def solve_axis_exponent(ratios: Sequence[float]) -> float:
    """t ≥ 0 com Σ r_i^t = 1."""
    if len(ratios) == 0:
        raise EmptyInput("Lista de razões vazia.")
    logs = []
    for r in ratios:
        if not 0 < r < 1:
            raise RatioOutOfRange(f"Razão {r} fora de (0,1).")
        logs.append(math.log(r))
    logs = np.asarray(logs)
    if len(logs) == 1:
        return 0.0
    # log Σ exp(t·log r): zero na raiz, sem underflow
    return _solve_decreasing(lambda t: float(logsumexp(t * logs)), 0.0)


def similarity_dimension(ratios: Sequence[float]) -> float:
    return solve_axis_exponent(ratios)


def axis_exponents(system: BaranskiSystem, proj: Optional[PatternProjections] = None) -> Tuple[float, float]:
    """(t_A, t_B) sobre as colunas e linhas ocupadas."""
    proj = proj or project(system)
    t_a = solve_axis_exponent([float(system.width(i)) for i in proj.columns])
    t_b = solve_axis_exponent([float(system.height(j)) for j in proj.rows])
    return t_a, t_b


def _oriented_logs(system: BaranskiSystem, orientation: Orientation) -> Tuple[np.ndarray, np.ndarray]:
    if orientation == Orientation.A:
        return system.cell_log_widths, system.cell_log_heights
    return system.cell_log_heights, system.cell_log_widths


def solve_box_exponent(
    system: BaranskiSystem,
    projections: Optional[PatternProjections],
    orientation: Orientation,
    axis_exponent: Optional[float] = None,
) -> float:
    """
    D com Σ a_i^{t_A} b_j^{D − t_A} = 1 (orientação A; simétrico para B).

    Args:
        system: sistema validado
        projections: projeções (calculadas se None)
        orientation: Orientation.A ou Orientation.B
        axis_exponent: t_A (ou t_B) já resolvido; calculado se None

    Returns:
        O expoente D_A (ou D_B), sempre ≥ t_axis.
    """
    if axis_exponent is None:
        t_a, t_b = axis_exponents(system, projections)
        axis_exponent = t_a if orientation == Orientation.A else t_b
    primary, secondary = _oriented_logs(system, orientation)
    base = axis_exponent * primary

    def residual(d: float) -> float:
        return float(logsumexp(base + (d - axis_exponent) * secondary))

    return _solve_decreasing(residual, axis_exponent)


def box_dimension_analytic(system: BaranskiSystem) -> MoranExponents:
    """Os quatro expoentes e a dimensão de caixa max(D_A, D_B)."""
    proj = project(system)
    t_a, t_b = axis_exponents(system, proj)
    d_a = solve_box_exponent(system, proj, Orientation.A, t_a)
    d_b = solve_box_exponent(system, proj, Orientation.B, t_b)
    exps = MoranExponents(t_A=t_a, t_B=t_b, D_A=d_a, D_B=d_b)
    if exps.box_dimension > t_a + t_b + INEQUALITY_SLACK:
        raise InternalInequalityViolation(
            f"max(D_A, D_B) = {exps.box_dimension} > t_A + t_B = {t_a + t_b}"
        )
    logger.debug(f"Expoentes: t_A={t_a:.12f} t_B={t_b:.12f} D_A={d_a:.12f} D_B={d_b:.12f}")
    return exps


def pressure_base(system: BaranskiSystem, s: float, exponents: Optional[Tuple[float, float]] = None) -> float:
    """max{Σ a^{t_A} b^{s−t_A}, Σ b^{t_B} a^{s−t_B}}; vale 1 em s = max(D_A, D_B)."""
    t_a, t_b = exponents if exponents is not None else axis_exponents(system)
    la, lb = system.cell_log_widths, system.cell_log_heights
    log_a_side = logsumexp(t_a * la + (s - t_a) * lb)
    log_b_side = logsumexp(t_b * lb + (s - t_b) * la)
    return float(math.exp(max(log_a_side, log_b_side)))


# ═══════════════════════════════════════════════════════════
# FÓRMULAS FECHADAS (TIPO BEDFORD–MCMULLEN)
# ═══════════════════════════════════════════════════════════

def _bm_parameters(system: BaranskiSystem):
    cls = classify(system)
    if not cls.is_bm:
        raise NotBMType("Sistema não é do tipo Bedford–McMullen.")
    return cls.m_tilde, cls.n_tilde, project(system)


def bm_closed_form(system: BaranskiSystem) -> Tuple[float, float]:
    """(dim_H, dim_B) pelas fórmulas fechadas."""
    m_tilde, n_tilde, proj = _bm_parameters(system)
    gamma = math.log(m_tilde) / math.log(n_tilde)
    column_sum = math.fsum(size ** gamma for size in proj.column_sizes.values())
    dim_h = math.log(column_sum) / math.log(m_tilde)
    cols = len(proj.columns)
    dim_b = math.log(cols) / math.log(m_tilde) + math.log(len(system.pattern) / cols) / math.log(n_tilde)
    return dim_h, dim_b


def bm_closed_form_b(system: BaranskiSystem) -> float:
    """D_B = log|D_Y|/log ñ + log(|D|/|D_Y|)/log m̃."""
    m_tilde, n_tilde, proj = _bm_parameters(system)
    rows = len(proj.rows)
    return math.log(rows) / math.log(n_tilde) + math.log(len(system.pattern) / rows) / math.log(m_tilde)


def merged_box_bound(system: BaranskiSystem) -> float:
    """Dimensão de caixa quando duas células passam a ter a mesma imagem."""
    m_tilde, n_tilde, proj = _bm_parameters(system)
    cells = len(system.pattern)
    if cells < 2:
        raise ValueError("São necessárias ao menos duas células para fundir.")
    cols = len(proj.columns)
    return math.log(cols) / math.log(m_tilde) + math.log((cells - 1) / cols) / math.log(n_tilde)
