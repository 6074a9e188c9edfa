"""
Função variacional g no simplex e sua maximização (dimensão de Hausdorff).
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..config import (
    BOUNDARY_TOLERANCE,
    BRANCH_AGREEMENT,
    DEFAULT_MAX_ITERS,
    DEFAULT_OPT_TOL,
    DEFAULT_SEED,
    DEFAULT_STARTS,
    SIMPLEX_TOLERANCE,
)
from ..errors import InternalInequalityViolation, NoConvergence, NotBMType, NotOnSimplex
from ..models import Region
from .moran import bm_closed_form
from .system import BaranskiSystem, Cell, classify, project

logger = logging.getLogger(__name__)

_FLOOR = 1e-300


@dataclass(frozen=True)
class ProbabilityWeights:
    """Ponto do simplex, um peso por célula (na ordem de `cells`)."""
    cells: Tuple[Cell, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.cells) != len(self.values):
            raise NotOnSimplex("Número de pesos diferente do número de células.")
        if np.any(self.values < 0):
            raise NotOnSimplex("Pesos negativos.")
        if abs(math.fsum(self.values) - 1.0) > SIMPLEX_TOLERANCE:
            raise NotOnSimplex(f"Soma dos pesos = {math.fsum(self.values)!r}, esperado 1.")

    @classmethod
    def from_mapping(cls, system: BaranskiSystem, weights: Mapping[Cell, float], normalize: bool = False):
        values = np.array([float(weights.get(cell, 0.0)) for cell in system.pattern])
        if normalize:
            values = values / values.sum()
        return cls(cells=system.pattern, values=values)

    @classmethod
    def uniform(cls, system: BaranskiSystem):
        size = len(system.pattern)
        return cls(cells=system.pattern, values=np.full(size, 1.0 / size))

    def as_dict(self) -> Dict[Cell, float]:
        return {cell: float(v) for cell, v in zip(self.cells, self.values)}


@dataclass(frozen=True)
class MarginalSums:
    column: np.ndarray  # R_i, na ordem de D_X
    row: np.ndarray  # S_j, na ordem de D_Y


@dataclass(frozen=True)
class RegionTag:
    region: Region
    column_log_mean: float  # Σ R_i log a_i
    row_log_mean: float  # Σ S_j log b_j


@dataclass(frozen=True)
class GradientResult:
    values: np.ndarray  # projetado (média zero)
    region: Region
    boundary: bool  # True: apenas o ramo ativo (S_A) foi derivado


@dataclass
class VariationalResult:
    weights: ProbabilityWeights
    value: float
    region: Region
    converged: bool
    start: str
    iterations: int


class _Layout:
    """Índices e logs por célula, pré-calculados para o sistema."""

    def __init__(self, system: BaranskiSystem):
        proj = project(system)
        col_pos = {i: k for k, i in enumerate(proj.columns)}
        row_pos = {j: k for k, j in enumerate(proj.rows)}
        self.col_idx = np.array([col_pos[i] for i, _ in system.pattern], dtype=np.intp)
        self.row_idx = np.array([row_pos[j] for _, j in system.pattern], dtype=np.intp)
        self.col_log = np.array([math.log(system.width(i)) for i in proj.columns])
        self.row_log = np.array([math.log(system.height(j)) for j in proj.rows])
        self.cell_col_log = self.col_log[self.col_idx]
        self.cell_row_log = self.row_log[self.row_idx]
        self.n_cols = len(proj.columns)
        self.n_rows = len(proj.rows)

    def marginals(self, p: np.ndarray) -> MarginalSums:
        return MarginalSums(
            column=np.bincount(self.col_idx, weights=p, minlength=self.n_cols),
            row=np.bincount(self.row_idx, weights=p, minlength=self.n_rows),
        )


def _xlogx(x: np.ndarray) -> float:
    positive = x[x > 0]
    return float(np.sum(positive * np.log(positive)))


def _conditional(p: np.ndarray, fibre: np.ndarray) -> float:
    """Σ p log(p / marginal), pulando termos com p = 0."""
    mask = p > 0
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(fibre[mask]))))


def _branch_values(layout: _Layout, p: np.ndarray) -> Tuple[float, float, MarginalSums, float, float]:
    marg = layout.marginals(p)
    xa = float(marg.column @ layout.col_log)
    yb = float(marg.row @ layout.row_log)
    g_a = _xlogx(marg.column) / xa + _conditional(p, marg.column[layout.col_idx]) / yb
    g_b = _xlogx(marg.row) / yb + _conditional(p, marg.row[layout.row_idx]) / xa
    return g_a, g_b, marg, xa, yb


def _tag(xa: float, yb: float) -> RegionTag:
    if abs(xa - yb) <= BOUNDARY_TOLERANCE:
        region = Region.BOUNDARY
    elif xa > yb:
        region = Region.S_A
    else:
        region = Region.S_B
    return RegionTag(region=region, column_log_mean=xa, row_log_mean=yb)


def _evaluate(layout: _Layout, p: np.ndarray) -> Tuple[float, RegionTag]:
    g_a, g_b, _, xa, yb = _branch_values(layout, p)
    tag = _tag(xa, yb)
    if tag.region == Region.BOUNDARY:
        if abs(g_a - g_b) > BRANCH_AGREEMENT:
            raise InternalInequalityViolation(f"Ramos de g divergem na fronteira: {g_a} vs {g_b}")
        return g_a, tag
    return (g_a if tag.region == Region.S_A else g_b), tag


def eval_g(system: BaranskiSystem, p: ProbabilityWeights) -> Tuple[float, RegionTag]:
    """Valor de g(p) e a região (S_A, S_B ou fronteira)."""
    if p.cells != system.pattern:
        raise NotOnSimplex("Pesos indexados por outro padrão.")
    return _evaluate(_Layout(system), p.values)


def _branch_gradient(layout: _Layout, p: np.ndarray, region: Region) -> np.ndarray:
    marg = layout.marginals(p)
    xa = float(marg.column @ layout.col_log)
    yb = float(marg.row @ layout.row_log)
    log_p = np.log(p)
    plogp = float(p @ log_p)
    if region == Region.S_B:
        # troca os papéis de colunas e linhas
        xa, yb = yb, xa
        fibre = marg.row
        fibre_log = np.log(fibre)[layout.row_idx]
        own_log, other_log = layout.cell_row_log, layout.cell_col_log
    else:
        fibre = marg.column
        fibre_log = np.log(fibre)[layout.col_idx]
        own_log, other_log = layout.cell_col_log, layout.cell_row_log
    n1 = _xlogx(fibre)
    n2 = plogp - n1
    return (
        (fibre_log + 1.0) / xa
        - n1 * own_log / xa ** 2
        + (log_p - fibre_log) / yb
        - n2 * other_log / yb ** 2
    )


def grad_g(system: BaranskiSystem, p: ProbabilityWeights) -> GradientResult:
    """
    Gradiente de g projetado no espaço tangente do simplex.

    Na fronteira S_A ∩ S_B devolve o gradiente do ramo S_A com `boundary=True`.
    """
    if np.any(p.values <= 0):
        raise NotOnSimplex("O gradiente exige um ponto interior do simplex.")
    layout = _Layout(system)
    _, tag = _evaluate(layout, p.values)
    branch = Region.S_A if tag.region == Region.BOUNDARY else tag.region
    grad = _branch_gradient(layout, p.values, branch)
    return GradientResult(values=grad - grad.mean(), region=tag.region, boundary=tag.region == Region.BOUNDARY)


# ═══════════════════════════════════════════════════════════
# OTIMIZAÇÃO
# ═══════════════════════════════════════════════════════════

def _ascend(layout: _Layout, p0: np.ndarray, max_iters: int, tol: float) -> Tuple[np.ndarray, float, Region, bool, int]:
    """Subida por gradiente exponenciado com backtracking a partir de p0."""
    p = np.maximum(p0, _FLOOR)
    p = p / p.sum()
    value, tag = _evaluate(layout, p)
    if len(p) == 1:
        return p, value, tag.region, True, 0
    step = 1.0
    for it in range(1, max_iters + 1):
        branch = Region.S_A if tag.region == Region.BOUNDARY else tag.region
        grad = _branch_gradient(layout, p, branch)
        grad = grad - p @ grad
        # estacionariedade ponderada pelo próprio ponto
        if float(np.max(np.abs(p * grad))) < tol:
            return p, value, tag.region, True, it
        improved = False
        for _ in range(60):
            candidate = p * np.exp(np.clip(step * grad, -50.0, 50.0))
            candidate = np.maximum(candidate / candidate.sum(), _FLOOR)
            candidate = candidate / candidate.sum()
            cand_value, cand_tag = _evaluate(layout, candidate)
            if cand_value > value:
                improved = True
                break
            step *= 0.5
        if not improved:
            return p, value, tag.region, True, it
        gain = cand_value - value
        p, value, tag = candidate, cand_value, cand_tag
        if gain < tol:
            return p, value, tag.region, True, it
        step = min(step * 2.0, 1e3)
    return p, value, tag.region, False, max_iters


def bm_optimal_weights(system: BaranskiSystem) -> ProbabilityWeights:
    """p_ij = |I_i|^{γ−1} / m̃^s, maximizador de g no caso Bedford–McMullen."""
    cls = classify(system)
    if not cls.is_bm:
        raise NotBMType("Pesos ótimos fechados exigem sistema Bedford–McMullen.")
    proj = project(system)
    gamma = math.log(cls.m_tilde) / math.log(cls.n_tilde)
    dim_h, _ = bm_closed_form(system)
    scale = math.exp(dim_h * math.log(cls.m_tilde))
    sizes = proj.column_sizes
    values = np.array([sizes[i] ** (gamma - 1.0) / scale for i, _ in system.pattern])
    total = math.fsum(values)
    if abs(total - 1.0) > SIMPLEX_TOLERANCE:
        raise InternalInequalityViolation(f"Pesos ótimos somam {total!r}.")
    return ProbabilityWeights(cells=system.pattern, values=values)


def _deterministic_starts(system: BaranskiSystem, layout: _Layout) -> List[Tuple[str, np.ndarray]]:
    size = len(system.pattern)
    col_counts = np.bincount(layout.col_idx)
    row_counts = np.bincount(layout.row_idx)
    starts = [
        ("uniform", np.full(size, 1.0 / size)),
        ("column_uniform", 1.0 / (layout.n_cols * col_counts[layout.col_idx])),
        ("row_uniform", 1.0 / (layout.n_rows * row_counts[layout.row_idx])),
    ]
    if classify(system).is_bm:
        starts.append(("bm_optimal", bm_optimal_weights(system).values))
    return starts


def maximize_g(
    system: BaranskiSystem,
    starts: int = DEFAULT_STARTS,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_OPT_TOL,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    progress_callback: Optional[Callable[[int, str], None]] = None,
    require_convergence: bool = False,
) -> VariationalResult:
    """
    Maximiza g com múltiplos pontos de partida.

    O valor é uma cota inferior certificada de max g (exato no caso
    Bedford–McMullen). Se o melhor ponto não convergiu, `converged=False`;
    com `require_convergence=True` levanta NoConvergence com o resultado anexado.
    """
    from ..jobs import JobManager

    layout = _Layout(system)
    rng = np.random.default_rng(seed)
    points = _deterministic_starts(system, layout)
    draws = rng.dirichlet(np.ones(len(system.pattern)), size=starts) if starts > 0 else []
    points += [(f"dirichlet_{k}", draw) for k, draw in enumerate(draws)]

    def update(pct, msg):
        if progress_callback:
            progress_callback(pct, msg)
        logger.info(f"[Variacional] {pct}% - {msg}")

    update(0, f"{len(points)} pontos de partida")
    manager = JobManager(threads=threads)
    outcomes = manager.run(
        [(label, (lambda p0=p0: _ascend(layout, p0, max_iters, tol))) for label, p0 in points]
    )

    best = None
    for (label, _), (p, value, region, converged, iters) in zip(points, outcomes):
        if best is None or value > best.value:
            best = VariationalResult(
                weights=ProbabilityWeights(cells=system.pattern, values=p),
                value=value,
                region=region,
                converged=converged,
                start=label,
                iterations=iters,
            )
    if not best.converged:
        logger.warning(f"Melhor ponto ({best.start}) não convergiu em {max_iters} iterações.")
        if require_convergence:
            raise NoConvergence(f"max g não convergiu em {max_iters} iterações.", result=best)
    update(100, f"max g = {best.value:.9f} (partida {best.start})")
    return best


# ═══════════════════════════════════════════════════════════
# COTAS DE QUEDA DE DIMENSÃO
# ═══════════════════════════════════════════════════════════

def merged_hausdorff_bound(system: BaranskiSystem, columns: Sequence[int]) -> float:
    """dim_H quando as colunas dadas passam a ocupar a mesma faixa: (N1+N2)^γ no lugar de N1^γ + N2^γ."""
    cls = classify(system)
    if not cls.is_bm:
        raise NotBMType("Cota de fusão exige sistema Bedford–McMullen.")
    sizes = project(system).column_sizes
    merged = [i for i in columns if i in sizes]
    gamma = math.log(cls.m_tilde) / math.log(cls.n_tilde)
    rest = [size for i, size in sizes.items() if i not in merged]
    total = sum(sizes[i] for i in merged) ** gamma + math.fsum(size ** gamma for size in rest)
    return math.log(total) / math.log(cls.m_tilde)


def min_column_distribution(total: int, column_height: int, gamma: float) -> float:
    """Menor Σ |I_i|^γ para `total` células em colunas de altura `column_height`."""
    if total < 1 or column_height < 1:
        raise ValueError("total e column_height devem ser positivos.")
    full = total // column_height
    remainder = total - full * column_height
    return full * column_height ** gamma + (remainder ** gamma if remainder else 0.0)


def hausdorff_lower_bound(total: int, m_tilde: int, n_tilde: int) -> float:
    """Menor dim_H entre carpetes BM(m̃, ñ) com `total` células."""
    if total > m_tilde * n_tilde:
        raise ValueError("Mais células que a grade comporta.")
    gamma = math.log(m_tilde) / math.log(n_tilde)
    return math.log(min_column_distribution(total, n_tilde, gamma)) / math.log(m_tilde)
