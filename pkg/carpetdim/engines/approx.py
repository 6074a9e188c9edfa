"""
Aproximações construtivas: sistemas Γ_k de fibras uniformes, convergentes
s_k (sabores Hausdorff e caixa) e extração de subsistemas com SSC.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from ..config import DEFAULT_SSC_EPSILON, SUM_TOLERANCE, WORD_BUDGET
from ..errors import BudgetExceeded, DegenerateLogs, InternalInequalityViolation, NonHomogeneous
from ..models import ApproxFlavor, Orientation
from ..utils import Number
from .moran import box_dimension_analytic, similarity_dimension
from .overlaps import AxisSystem1D, axis_systems
from .system import BaranskiSystem, Cell, classify
from .variational import ProbabilityWeights, bm_optimal_weights, maximize_g

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UniformApproximation:
    k: int
    cells: Tuple[Cell, ...]
    counts: np.ndarray  # c_ij = ⌈k·p_ij⌉
    theta: int
    log_m: float
    log_n: float
    log_card_gamma: float
    log_card_gamma_x: float
    log_card_gamma_y: float
    s_k_value: float  # sabor Hausdorff


def log_multinomial(total: int, parts: Sequence[int]) -> float:
    """log(total! / Π parts!) via log-gama."""
    parts = np.asarray(parts, dtype=np.float64)
    return float(gammaln(total + 1.0) - np.sum(gammaln(parts + 1.0)))


def _counts(values: np.ndarray, k: int) -> np.ndarray:
    # absorve o arredondamento de k·p (ex.: 3·(1/3))
    return np.maximum(np.ceil(k * values - 1e-9), 0).astype(np.int64)


def build_uniform_approx(system: BaranskiSystem, p: ProbabilityWeights, k: int) -> UniformApproximation:
    """Contagens c_ij, θ(k), log m_k, log n_k e as cardinalidades de Γ_k em log."""
    if k < 1:
        raise ValueError("k deve ser >= 1.")
    counts = _counts(p.values, k)
    theta = int(counts.sum())
    col_totals: Dict[int, int] = {}
    row_totals: Dict[int, int] = {}
    for (i, j), c in zip(system.pattern, counts):
        col_totals[i] = col_totals.get(i, 0) + int(c)
        row_totals[j] = row_totals.get(j, 0) + int(c)

    log_m = float(counts @ -system.cell_log_widths)
    log_n = float(counts @ -system.cell_log_heights)
    log_card = log_multinomial(theta, counts)
    log_card_x = log_multinomial(theta, list(col_totals.values()))
    log_card_y = log_multinomial(theta, list(row_totals.values()))

    partial = dict(
        k=k,
        cells=system.pattern,
        counts=counts,
        theta=theta,
        log_m=log_m,
        log_n=log_n,
        log_card_gamma=log_card,
        log_card_gamma_x=log_card_x,
        log_card_gamma_y=log_card_y,
    )
    return UniformApproximation(s_k_value=_s_k(log_m, log_n, log_card, log_card_x, log_card_y), **partial)


def _s_k(log_m: float, log_n: float, log_card: float, log_card_x: float, log_card_y: float) -> float:
    if log_m <= 0 or log_n <= 0:
        raise DegenerateLogs(f"log m_k = {log_m}, log n_k = {log_n}")
    if log_n >= log_m:
        return log_card_x / log_m + (log_card - log_card_x) / log_n
    # n_k < m_k: papéis trocados
    return log_card_y / log_n + (log_card - log_card_y) / log_m


def s_k_hausdorff(approx: UniformApproximation) -> float:
    return _s_k(approx.log_m, approx.log_n, approx.log_card_gamma, approx.log_card_gamma_x, approx.log_card_gamma_y)


def box_weights(system: BaranskiSystem) -> Tuple[ProbabilityWeights, Orientation, float]:
    """p_ij = a^{t_A} b^{D_A − t_A} (ou a versão B se D_B > D_A), e o expoente de eixo usado."""
    exps = box_dimension_analytic(system)
    la, lb = system.cell_log_widths, system.cell_log_heights
    if exps.dominant == Orientation.A:
        values = np.exp(exps.t_A * la + (exps.D_A - exps.t_A) * lb)
        axis = exps.t_A
    else:
        values = np.exp(exps.t_B * lb + (exps.D_B - exps.t_B) * la)
        axis = exps.t_B
    values = values / values.sum()
    return ProbabilityWeights(cells=system.pattern, values=values), exps.dominant, axis


def _box_value(approx: UniformApproximation, orientation: Orientation, axis: float) -> float:
    if orientation == Orientation.A:
        return axis + (approx.log_card_gamma - axis * approx.log_m) / approx.log_n
    return axis + (approx.log_card_gamma - axis * approx.log_n) / approx.log_m


def s_k_box(system: BaranskiSystem, k: int) -> float:
    """s_k = t_A + (log|Γ_k| − t_A log m_k)/log n_k, convergente para max(D_A, D_B)."""
    weights, orientation, axis = box_weights(system)
    return _box_value(build_uniform_approx(system, weights, k), orientation, axis)


def hausdorff_weights(system: BaranskiSystem, seed: int = 0, threads: int = 1) -> ProbabilityWeights:
    if classify(system).is_bm:
        return bm_optimal_weights(system)
    return maximize_g(system, seed=seed, threads=threads).weights


def s_k_trace(
    system: BaranskiSystem,
    ks: Sequence[int],
    flavor: ApproxFlavor,
    weights: Optional[ProbabilityWeights] = None,
) -> List[Dict[str, object]]:
    """Linhas (flavor, k, theta, s_k) para exportação CSV."""
    rows = []
    if flavor == ApproxFlavor.BOX:
        box_p, orientation, axis = box_weights(system)
        for k in ks:
            approx = build_uniform_approx(system, box_p, k)
            rows.append({"flavor": flavor.value, "k": k, "theta": approx.theta, "s_k": _box_value(approx, orientation, axis)})
        return rows
    weights = weights or hausdorff_weights(system)
    for k in ks:
        approx = build_uniform_approx(system, weights, k)
        rows.append({"flavor": flavor.value, "k": k, "theta": approx.theta, "s_k": s_k_hausdorff(approx)})
    return rows


# ═══════════════════════════════════════════════════════════
# ENUMERAÇÃO (ORÁCULOS)
# ═══════════════════════════════════════════════════════════

def enumerate_strings(cells: Sequence[Cell], counts: Sequence[int]) -> Iterator[Tuple[Cell, ...]]:
    """Todas as strings distintas com c_ij cópias de cada célula (permutações do multiconjunto)."""
    remaining = [int(c) for c in counts]
    total = sum(remaining)
    current: List[Cell] = []

    def rec():
        if len(current) == total:
            yield tuple(current)
            return
        for idx, cell in enumerate(cells):
            if remaining[idx]:
                remaining[idx] -= 1
                current.append(cell)
                yield from rec()
                current.pop()
                remaining[idx] += 1

    yield from rec()


def column_word(string: Sequence[Cell]) -> Tuple[int, ...]:
    return tuple(i for i, _ in string)


def row_word(string: Sequence[Cell]) -> Tuple[int, ...]:
    return tuple(j for _, j in string)


def enumerated_cardinalities(cells: Sequence[Cell], counts: Sequence[int]) -> Tuple[int, int, int]:
    """(|Γ_k|, |Γ̄^X_k|, |Γ̄^Y_k|) por força bruta."""
    strings = list(enumerate_strings(cells, counts))
    return (
        len(strings),
        len({column_word(s) for s in strings}),
        len({row_word(s) for s in strings}),
    )


# ═══════════════════════════════════════════════════════════
# SUBSISTEMAS COM SSC
# ═══════════════════════════════════════════════════════════

@dataclass
class SscSelection:
    words: List[Tuple[int, ...]]  # letras a partir de 1
    intervals: List[Tuple[Number, Number]]
    total: int
    ell: int
    alpha: float
    epsilon: float
    bound: float
    bound_met: bool

    @property
    def count(self) -> int:
        return len(self.words)


def _common_ratio(ifs: AxisSystem1D) -> Number:
    first = ifs.ratios[0]
    for r in ifs.ratios[1:]:
        if isinstance(r, Fraction) and isinstance(first, Fraction):
            same = r == first
        else:
            same = abs(float(r) - float(first)) <= SUM_TOLERANCE
        if not same:
            raise NonHomogeneous("Todas as letras devem ter a mesma razão de contração.")
    return first


def _word_offsets(ifs: AxisSystem1D, ratio: Number, ell: int) -> Tuple[List[Tuple[int, ...]], List[Number]]:
    """Palavras de tamanho ℓ em ordem lexicográfica e seus offsets S_w(0)."""
    words: List[Tuple[int, ...]] = [()]
    offsets: List[Number] = [Fraction(0) if isinstance(ratio, Fraction) else 0.0]
    scale = ratio ** 0
    for _ in range(ell):
        words = [w + (letter,) for w in words for letter in range(1, len(ifs) + 1)]
        offsets = [o + scale * t for o in offsets for t in ifs.offsets]
        scale = scale * ratio
    return words, offsets


def extract_ssc_subsystem(
    ifs: AxisSystem1D,
    ell: int,
    epsilon: float = DEFAULT_SSC_EPSILON,
    alpha: Optional[float] = None,
    budget: int = WORD_BUDGET,
) -> SscSelection:
    """
    Seleção gulosa de cilindros de nível ℓ com intervalos fechados disjuntos.

    Ordena os intervalos [S_w(0), S_w(0) + a^ℓ] pela esquerda e mantém cada um
    que começa estritamente depois do fim do último mantido.
    """
    ratio = _common_ratio(ifs)
    if len(ifs) ** ell > budget:
        raise BudgetExceeded(f"{len(ifs)}^{ell} palavras excedem o orçamento de {budget}.")
    if alpha is None:
        alpha = min(similarity_dimension([float(ratio)] * len(ifs)), 1.0)

    words, offsets = _word_offsets(ifs, ratio, ell)
    length = ratio ** ell
    order = sorted(range(len(words)), key=lambda k: (offsets[k], words[k]))
    kept_words, kept_intervals = [], []
    last_right = None
    for k in order:
        left = offsets[k]
        if last_right is None or left > last_right:
            last_right = left + length
            kept_words.append(words[k])
            kept_intervals.append((left, last_right))

    bound = 3.0 ** (-alpha) * float(ratio) ** (-ell * (alpha - epsilon))
    met = len(kept_words) >= bound
    if not met:
        logger.info(f"BoundNotMet: ℓ={ell}, mantidas {len(kept_words)} < cota {bound:.4f}")
    return SscSelection(
        words=kept_words,
        intervals=kept_intervals,
        total=len(words),
        ell=ell,
        alpha=alpha,
        epsilon=epsilon,
        bound=bound,
        bound_met=met,
    )


def smallest_ssc_length(
    ifs: AxisSystem1D,
    epsilon: float = DEFAULT_SSC_EPSILON,
    alpha: Optional[float] = None,
    ell_max: int = 12,
    budget: int = WORD_BUDGET,
) -> Optional[int]:
    """Menor ℓ cuja seleção gulosa atinge a cota (empírico, não um limiar provado)."""
    for ell in range(1, ell_max + 1):
        if len(ifs) ** ell > budget:
            break
        if extract_ssc_subsystem(ifs, ell, epsilon, alpha, budget).bound_met:
            return ell
    return None


@dataclass
class LiftResult:
    selection: SscSelection
    words: List[Tuple[int, ...]]  # ℓ-uplas de índices em `strings`
    strings: List[Tuple[Cell, ...]]  # Γ_k
    fibre: int  # J = |Γ_k| / |Γ̄^Y_k|
    log_bound: float
    bound_met: bool

    @property
    def count(self) -> int:
        return len(self.words)


def _row_word_system(system: BaranskiSystem, words: Sequence[Tuple[int, ...]]) -> AxisSystem1D:
    """IFS 1-D das palavras de linha: razão Π b_j e offset composto pelos τ_j."""
    _, y_ifs = axis_systems(system)
    height = dict(zip(y_ifs.labels, y_ifs.ratios))
    shift = dict(zip(y_ifs.labels, y_ifs.offsets))
    ratios, offsets = [], []
    for word in words:
        ratio = height[word[0]] ** 0
        offset = ratio - ratio
        for j in word:
            offset = offset + ratio * shift[j]
            ratio = ratio * height[j]
        ratios.append(ratio)
        offsets.append(offset)
    return AxisSystem1D(ratios=tuple(ratios), offsets=tuple(offsets))


def lift_row_ssc(
    system: BaranskiSystem,
    approx: UniformApproximation,
    ell: int,
    epsilon: float = DEFAULT_SSC_EPSILON,
    budget: int = WORD_BUDGET,
) -> LiftResult:
    """
    Aplica a extração SSC à projeção Y de Γ_k e levanta para palavras 2-D.

    Garante |G| = |selecionadas|·J^ℓ e, quando a cota 1-D vale com α ≤ 1,
    |G| ≥ 3^{−1} n_k^{−ℓε} |Γ_k|^ℓ.
    """
    strings = list(enumerate_strings(approx.cells, approx.counts))
    if len(strings) ** ell > budget:
        raise BudgetExceeded(f"|Γ_k|^ℓ = {len(strings)}^{ell} excede o orçamento de {budget}.")
    letters = sorted({row_word(s) for s in strings})
    if len(strings) % len(letters):
        raise InternalInequalityViolation("Γ_k sem fibras horizontais uniformes.")
    fibre = len(strings) // len(letters)

    alpha_raw = math.log(len(letters)) / approx.log_n
    selection = extract_ssc_subsystem(
        _row_word_system(system, letters), ell, epsilon, min(alpha_raw, 1.0), budget
    )

    letter_of = {w: k for k, w in enumerate(letters, start=1)}
    projected = [letter_of[row_word(s)] for s in strings]
    selected = set(selection.words)
    lifted = [
        combo
        for combo in itertools.product(range(len(strings)), repeat=ell)
        if tuple(projected[c] for c in combo) in selected
    ]
    if len(lifted) != selection.count * fibre ** ell:
        raise InternalInequalityViolation(
            f"|G| = {len(lifted)} ≠ {selection.count}·{fibre}^{ell}"
        )

    log_bound = -math.log(3.0) - ell * epsilon * approx.log_n + ell * math.log(len(strings))
    met = bool(lifted) and math.log(len(lifted)) >= log_bound - 1e-12
    if selection.bound_met and alpha_raw <= 1.0 and not met:
        raise InternalInequalityViolation("Cota 2-D falhou apesar da cota 1-D.")
    return LiftResult(
        selection=selection,
        words=lifted,
        strings=strings,
        fibre=fibre,
        log_bound=log_bound,
        bound_met=met,
    )
