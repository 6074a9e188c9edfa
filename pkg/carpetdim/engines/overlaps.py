"""
Diagnóstico de sobreposições em aritmética racional exata: composição de
palavras, sequência γ_k, heurística SECC e relatório do conjunto excepcional.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import DEFAULT_KMAX, SUM_TOLERANCE, WORD_BUDGET
from ..errors import NonRationalInput
from ..models import (
    AxisReport,
    AxisStatus,
    ExceptionalReport,
    HyperplaneHitPart,
    SeccVerdict,
    Verdict,
)
from ..utils import Number, format_rational, is_exact
from .system import BaranskiSystem, project

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AffineWord1D:
    """Mapa x ↦ ratio·x + offset de uma palavra."""
    word: Tuple[int, ...]
    ratio: Fraction
    offset: Fraction

    def then(self, other: "AffineWord1D") -> "AffineWord1D":
        """Composição self ∘ other (a palavra `self.word` seguida de `other.word`)."""
        return AffineWord1D(
            word=self.word + other.word,
            ratio=self.ratio * other.ratio,
            offset=self.offset + self.ratio * other.offset,
        )

    def __call__(self, x: Fraction) -> Fraction:
        return self.ratio * x + self.offset


@dataclass(frozen=True)
class AxisSystem1D:
    """IFS de uma projeção: letra k ↦ ratios[k]·x + offsets[k]."""
    ratios: Tuple[Number, ...]
    offsets: Tuple[Number, ...]
    labels: Tuple[int, ...] = ()  # índice original da coluna/linha

    @property
    def is_exact(self) -> bool:
        return is_exact(self.ratios) and is_exact(self.offsets)

    def __len__(self) -> int:
        return len(self.ratios)


def axis_systems(system: BaranskiSystem) -> Tuple[AxisSystem1D, AxisSystem1D]:
    """{a_i x + t_i}_{i∈D_X} e {b_j y + τ_j}_{j∈D_Y}."""
    proj = project(system)
    x_ifs = AxisSystem1D(
        ratios=tuple(system.width(i) for i in proj.columns),
        offsets=tuple(system.column_translations[i] for i in proj.columns),
        labels=proj.columns,
    )
    y_ifs = AxisSystem1D(
        ratios=tuple(system.height(j) for j in proj.rows),
        offsets=tuple(system.row_translations[j] for j in proj.rows),
        labels=proj.rows,
    )
    return x_ifs, y_ifs


def _exact(value) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, Fraction)):
        raise NonRationalInput(f"Parâmetro não racional: {value!r}")
    return Fraction(value)


def compose_word(ratios: Sequence[Fraction], offsets: Sequence[Fraction], word: Sequence[int]) -> AffineWord1D:
    """Compõe exatamente S_{i_1} ∘ … ∘ S_{i_k}; letras começam em 1."""
    rs = [_exact(r) for r in ratios]
    ts = [_exact(t) for t in offsets]
    result = AffineWord1D(word=(), ratio=Fraction(1), offset=Fraction(0))
    for letter in word:
        if not 1 <= letter <= len(rs):
            raise IndexError(f"Letra {letter} fora de 1..{len(rs)}.")
        result = result.then(AffineWord1D(word=(letter,), ratio=rs[letter - 1], offset=ts[letter - 1]))
    return result


@dataclass
class GammaSequence:
    gammas: List[Optional[Fraction]]  # índice k-1; None = infinito
    strict: bool = False
    budget_exceeded: bool = False

    @property
    def depth(self) -> int:
        return len(self.gammas)

    @property
    def rates(self) -> List[Optional[float]]:
        """d_k = −log γ_k / k (inf quando γ_k = 0, None quando infinito)."""
        rates = []
        for k, gamma in enumerate(self.gammas, start=1):
            if gamma is None:
                rates.append(None)
            elif gamma == 0:
                rates.append(math.inf)
            else:
                rates.append((math.log(gamma.denominator) - math.log(gamma.numerator)) / k)
        return rates

    @property
    def first_overlap(self) -> Optional[int]:
        for k, gamma in enumerate(self.gammas, start=1):
            if gamma == 0:
                return k
        return None


def _lcm_denominator(values: Sequence[Fraction]) -> int:
    return math.lcm(*(v.denominator for v in values))


def _min_gap(nu: np.ndarray, rho: np.ndarray, strict: bool) -> Optional[int]:
    """Menor diferença entre numeradores adjacentes; None se não há pares."""
    if len(nu) < 2:
        return None
    if not strict:
        ordered = np.sort(nu)
        return int((ordered[1:] - ordered[:-1]).min())
    if nu.dtype == object:
        order = sorted(range(len(nu)), key=lambda k: (rho[k], nu[k]))
    else:
        order = np.lexsort((nu, rho))
    s_nu, s_rho = nu[order], rho[order]
    same = s_rho[1:] == s_rho[:-1]
    if not np.any(same):
        return None
    return int((s_nu[1:][same] - s_nu[:-1][same]).min())


def gamma_sequence(
    ifs: AxisSystem1D,
    k_max: int = DEFAULT_KMAX,
    budget: int = WORD_BUDGET,
    strict: bool = False,
) -> GammaSequence:
    """
    γ_k = menor distância entre offsets S_λ(0) de palavras distintas de tamanho k.

    Offsets de cada nível são numeradores inteiros sobre um denominador comum,
    então a ordenação e as diferenças são exatas. No modo `strict`, palavras com
    produtos de razões diferentes não formam par.

    Returns:
        GammaSequence com os níveis calculados; `budget_exceeded` indica parada
        antecipada pelo orçamento de palavras.
    """
    ratios = [_exact(r) for r in ifs.ratios]
    offsets = [_exact(t) for t in ifs.offsets]
    letters = len(ratios)
    d_r = _lcm_denominator(ratios)
    d_t = _lcm_denominator(offsets)
    rho_letter = [int(r * d_r) for r in ratios]
    tau_letter = [int(t * d_t) for t in offsets]

    bound = (k_max + 1) * d_r ** k_max * max(1, d_t) * max([1] + [abs(t) for t in tau_letter])
    dtype = np.int64 if bound < 2 ** 62 else object
    rho_l = np.array(rho_letter, dtype=dtype)
    tau_l = np.array(tau_letter, dtype=dtype)

    seq = GammaSequence(gammas=[], strict=strict)
    nu, rho = tau_l.copy(), rho_l.copy()
    total = 0
    for k in range(1, k_max + 1):
        total += letters ** k
        if total > budget:
            seq.budget_exceeded = True
            logger.warning(f"Orçamento de {budget} palavras atingido; γ_k calculado até k={k - 1}.")
            break
        if k > 1:
            nu = (nu[:, None] * d_r + rho[:, None] * tau_l[None, :]).ravel()
            rho = (rho[:, None] * rho_l[None, :]).ravel()
        gap = _min_gap(nu, rho, strict)
        seq.gammas.append(None if gap is None else Fraction(gap, d_r ** (k - 1) * d_t))
        logger.debug(f"γ_{k} = {format_rational(seq.gammas[-1])}")
    return seq


@dataclass
class SeccResult:
    verdict: SeccVerdict
    overlap_level: Optional[int]
    sequence: GammaSequence
    heuristic: bool = field(default=True)


def secc_diagnostic(
    ifs: AxisSystem1D,
    k_max: int = DEFAULT_KMAX,
    budget: int = WORD_BUDGET,
    strict: bool = False,
) -> SeccResult:
    """ExactOverlap(k), BoundedRate ou Inconclusive; só ExactOverlap é definitivo."""
    seq = gamma_sequence(ifs, k_max, budget, strict)
    level = seq.first_overlap
    if level is not None:
        return SeccResult(SeccVerdict.EXACT_OVERLAP, level, seq, heuristic=False)

    rates = [r for r in seq.rates if r is not None]
    if not rates:
        # nenhum par distinto: vacuamente limitado
        return SeccResult(SeccVerdict.BOUNDED_RATE, None, seq)
    tail = rates[len(rates) // 2:]
    if len(tail) >= 2 and all(b <= a + SUM_TOLERANCE for a, b in zip(tail, tail[1:])):
        return SeccResult(SeccVerdict.BOUNDED_RATE, None, seq)
    return SeccResult(SeccVerdict.INCONCLUSIVE, None, seq)


@dataclass(frozen=True)
class HyperplaneHit:
    axis: str
    first: int
    second: int
    translation: Number
    equal_ratio: bool


def _same(x: Number, y: Number) -> bool:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x == y
    return abs(float(x) - float(y)) <= SUM_TOLERANCE


def hyperplane_hits(system: BaranskiSystem) -> List[HyperplaneHit]:
    """Pares de colunas (ou linhas) ocupadas com a mesma translação."""
    hits = []
    for axis, ifs in zip(("x", "y"), axis_systems(system)):
        for a in range(len(ifs)):
            for b in range(a + 1, len(ifs)):
                if _same(ifs.offsets[a], ifs.offsets[b]):
                    hits.append(
                        HyperplaneHit(
                            axis=axis,
                            first=ifs.labels[a],
                            second=ifs.labels[b],
                            translation=ifs.offsets[a],
                            equal_ratio=_same(ifs.ratios[a], ifs.ratios[b]),
                        )
                    )
    return hits


def _axis_report(ifs: AxisSystem1D, k_max: int, budget: int, strict: bool) -> AxisReport:
    if not ifs.is_exact:
        return AxisReport(status=AxisStatus.NOT_CHECKED)
    result = secc_diagnostic(ifs, k_max, budget, strict)
    seq = result.sequence
    return AxisReport(
        status=AxisStatus.EXACT_OVERLAP if result.overlap_level else AxisStatus.NO_OVERLAP,
        overlap_level=result.overlap_level,
        depth=seq.depth,
        gammas=[format_rational(g) for g in seq.gammas],
        rates=[r if r is not None and math.isfinite(r) else None for r in seq.rates],
        secc=result.verdict,
        heuristic=result.heuristic,
        budget_exceeded=seq.budget_exceeded,
    )


def exceptional_report(
    system: BaranskiSystem,
    k_max: int = DEFAULT_KMAX,
    budget: int = WORD_BUDGET,
    strict: bool = False,
) -> ExceptionalReport:
    """Relatório de pertinência ao conjunto excepcional E."""
    x_ifs, y_ifs = axis_systems(system)
    x_report = _axis_report(x_ifs, k_max, budget, strict)
    y_report = _axis_report(y_ifs, k_max, budget, strict)
    hits = hyperplane_hits(system)
    statuses = (x_report.status, y_report.status)

    if AxisStatus.EXACT_OVERLAP in statuses or any(h.equal_ratio for h in hits):
        verdict = Verdict.INSIDE_E_CANDIDATE
    elif AxisStatus.NOT_CHECKED in statuses:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.LIKELY_OUTSIDE_E

    return ExceptionalReport(
        k_max=k_max,
        strict=strict,
        x_axis=x_report,
        y_axis=y_report,
        hyperplane_hits=[
            HyperplaneHitPart(
                axis=h.axis,
                first=h.first,
                second=h.second,
                translation=str(h.translation) if isinstance(h.translation, Fraction) else repr(float(h.translation)),
                equal_ratio=h.equal_ratio,
            )
            for h in hits
        ],
        dim_E_constant=len(x_ifs) + len(y_ifs) - 1,
        verdict=verdict,
    )
