"""
Núcleo do sistema: validação, projeções e classificação de carpetes de Barański.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from ..config import SUM_TOLERANCE
from ..errors import SystemValidationError, ValidationIssue
from ..models import Orientation, SystemFile, SystemKind
from ..utils import Number, format_number, is_exact, parse_number

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]


@dataclass(frozen=True)
class BaranskiSystem:
    """Sistema validado. Índices de linha e coluna começam em 1."""
    column_widths: Tuple[Number, ...]
    row_heights: Tuple[Number, ...]
    pattern: Tuple[Cell, ...]  # ordenado, sem repetição
    column_translations: Dict[int, Number] = field(default_factory=dict)
    row_translations: Dict[int, Number] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.column_widths)

    @property
    def n(self) -> int:
        return len(self.row_heights)

    @property
    def is_exact(self) -> bool:
        return is_exact(
            list(self.column_widths)
            + list(self.row_heights)
            + list(self.column_translations.values())
            + list(self.row_translations.values())
        )

    def width(self, i: int) -> Number:
        return self.column_widths[i - 1]

    def height(self, j: int) -> Number:
        return self.row_heights[j - 1]

    @cached_property
    def cell_log_widths(self) -> np.ndarray:
        """log a_i por célula, na ordem de `pattern`."""
        return np.array([math.log(self.width(i)) for i, _ in self.pattern])

    @cached_property
    def cell_log_heights(self) -> np.ndarray:
        return np.array([math.log(self.height(j)) for _, j in self.pattern])

    @cached_property
    def cell_geometry(self) -> np.ndarray:
        """Matriz (|D|, 4): t_i, τ_j, a_i, b_j em float, na ordem de `pattern`."""
        return np.array(
            [
                [
                    float(self.column_translations[i]),
                    float(self.row_translations[j]),
                    float(self.width(i)),
                    float(self.height(j)),
                ]
                for i, j in self.pattern
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class PatternProjections:
    columns: Tuple[int, ...]  # D_X
    rows: Tuple[int, ...]  # D_Y
    column_cells: Dict[int, Tuple[Cell, ...]]  # I_i
    row_cells: Dict[int, Tuple[Cell, ...]]  # J_j

    @property
    def column_sizes(self) -> Dict[int, int]:
        return {i: len(c) for i, c in self.column_cells.items()}

    @property
    def row_sizes(self) -> Dict[int, int]:
        return {j: len(c) for j, c in self.row_cells.items()}


@dataclass(frozen=True)
class SystemClass:
    kind: SystemKind
    uniform_vertical_fibres: bool
    uniform_horizontal_fibres: bool
    m_tilde: Optional[float] = None
    n_tilde: Optional[float] = None

    @property
    def is_bm(self) -> bool:
        return self.kind == SystemKind.BEDFORD_MCMULLEN


# ═══════════════════════════════════════════════════════════
# VALIDAÇÃO
# ═══════════════════════════════════════════════════════════

def _parse_numbers(values: Sequence[Any], name: str, issues: List[ValidationIssue]) -> List[Optional[Number]]:
    parsed = []
    for idx, raw in enumerate(values, start=1):
        try:
            parsed.append(parse_number(raw))
        except ValueError as e:
            issues.append(ValidationIssue("BadNumber", f"{name}[{idx}]", str(e)))
            parsed.append(None)
    return parsed


def _sum_is_one(values: Sequence[Number]) -> bool:
    if is_exact(values):
        return sum(values) == 1
    return abs(math.fsum(float(v) for v in values) - 1.0) <= SUM_TOLERANCE


def _check_ratios(values: Sequence[Optional[Number]], name: str, issues: List[ValidationIssue]) -> bool:
    ok = True
    for idx, v in enumerate(values, start=1):
        if v is None:
            ok = False
        elif not (0 < v < 1):
            issues.append(ValidationIssue("RatioOutOfRange", f"{name}[{idx}]", f"{v} fora de (0,1)."))
            ok = False
    if ok and not _sum_is_one(values):
        total = math.fsum(float(v) for v in values)
        issues.append(ValidationIssue("SumNotOne", name, f"soma = {total!r}, esperado 1."))
        ok = False
    return ok


def canonical_translations(sizes: Sequence[Number], occupied: Sequence[int]) -> Dict[int, Number]:
    """Posição canônica de Barański: t_i = Σ_{l<i} a_l para os índices ocupados."""
    offsets: Dict[int, Number] = {}
    acc: Number = Fraction(0) if is_exact(sizes) else 0.0
    for idx, size in enumerate(sizes, start=1):
        if idx in occupied:
            offsets[idx] = acc
        acc = acc + size
    return offsets


def _check_translations(
    raw: Optional[Mapping[int, Any]],
    sizes: Sequence[Number],
    occupied: Sequence[int],
    name: str,
    issues: List[ValidationIssue],
) -> Dict[int, Number]:
    if raw is None:
        translations = canonical_translations(sizes, occupied)
        logger.debug(f"{name} ausente; usando posição canônica.")
    else:
        translations = {}
        for idx, value in raw.items():
            if not 1 <= idx <= len(sizes):
                issues.append(ValidationIssue("IndexOutOfBounds", f"{name}[{idx}]", f"índice fora de 1..{len(sizes)}."))
                continue
            try:
                number = parse_number(value)
            except ValueError as e:
                issues.append(ValidationIssue("BadNumber", f"{name}[{idx}]", str(e)))
                continue
            if idx in occupied:
                translations[idx] = number
            else:
                logger.debug(f"{name}[{idx}] ignorada: índice sem células.")
        for idx in occupied:
            if idx not in translations and not any(i.field == f"{name}[{idx}]" for i in issues):
                issues.append(ValidationIssue("MissingTranslation", f"{name}[{idx}]", "translação ausente."))

    upper = 1 - max(sizes)
    exact = is_exact(sizes) and is_exact(translations.values())
    slack = 0 if exact else SUM_TOLERANCE
    for idx, value in sorted(translations.items()):
        if value < -slack or value > upper + slack:
            issues.append(
                ValidationIssue(
                    "TranslationOutOfRange",
                    f"{name}[{idx}]",
                    f"{value} fora de [0, {upper}] (1 − max = {upper}).",
                )
            )
    return translations


def validate(raw: Mapping[str, Any]) -> BaranskiSystem:
    """
    Valida uma descrição crua (dicionário do JSON) e devolve o sistema.

    Raises:
        SystemValidationError: com todas as invariantes violadas.
    """
    try:
        parsed = SystemFile.model_validate(raw)
    except ValidationError as e:
        issues = []
        for err in e.errors():
            loc = ".".join(str(p) for p in err["loc"])
            code = "MissingField" if err["type"] == "missing" else "BadNumber"
            issues.append(ValidationIssue(code, loc, err["msg"]))
        raise SystemValidationError(issues) from e

    issues: List[ValidationIssue] = []
    widths = _parse_numbers(parsed.column_widths, "column_widths", issues)
    heights = _parse_numbers(parsed.row_heights, "row_heights", issues)
    widths_ok = _check_ratios(widths, "column_widths", issues)
    heights_ok = _check_ratios(heights, "row_heights", issues)

    m, n = len(widths), len(heights)
    cells = set()
    for i, j in parsed.pattern:
        if 1 <= i <= m and 1 <= j <= n:
            cells.add((i, j))
        else:
            issues.append(ValidationIssue("IndexOutOfBounds", "pattern", f"célula ({i},{j}) fora da grade {m}x{n}."))
    if not parsed.pattern:
        issues.append(ValidationIssue("EmptyPattern", "pattern", "o padrão não tem células."))

    pattern = tuple(sorted(cells))
    col_occ = sorted({i for i, _ in pattern})
    row_occ = sorted({j for _, j in pattern})

    col_t: Dict[int, Number] = {}
    row_t: Dict[int, Number] = {}
    if widths_ok:
        col_t = _check_translations(parsed.column_translations, widths, col_occ, "column_translations", issues)
    if heights_ok:
        row_t = _check_translations(parsed.row_translations, heights, row_occ, "row_translations", issues)

    if issues:
        raise SystemValidationError(issues)

    if len(pattern) == m * n:
        logger.warning("O padrão ocupa a grade inteira (D = D_0); o atrator é o quadrado unitário.")

    return BaranskiSystem(
        column_widths=tuple(widths),
        row_heights=tuple(heights),
        pattern=pattern,
        column_translations=col_t,
        row_translations=row_t,
    )


def serialize_system(system: BaranskiSystem) -> Dict[str, Any]:
    """Inverso de `validate`: dicionário pronto para JSON."""
    return {
        "column_widths": [format_number(a) for a in system.column_widths],
        "row_heights": [format_number(b) for b in system.row_heights],
        "pattern": [[i, j] for i, j in system.pattern],
        "column_translations": {str(i): format_number(t) for i, t in sorted(system.column_translations.items())},
        "row_translations": {str(j): format_number(t) for j, t in sorted(system.row_translations.items())},
    }


# ═══════════════════════════════════════════════════════════
# PROJEÇÕES E CLASSIFICAÇÃO
# ═══════════════════════════════════════════════════════════

def project(system: BaranskiSystem) -> PatternProjections:
    """Partição direta do padrão em colunas (I_i) e linhas (J_j)."""
    column_cells: Dict[int, List[Cell]] = {}
    row_cells: Dict[int, List[Cell]] = {}
    for cell in system.pattern:
        column_cells.setdefault(cell[0], []).append(cell)
        row_cells.setdefault(cell[1], []).append(cell)
    return PatternProjections(
        columns=tuple(sorted(column_cells)),
        rows=tuple(sorted(row_cells)),
        column_cells={i: tuple(c) for i, c in sorted(column_cells.items())},
        row_cells={j: tuple(c) for j, c in sorted(row_cells.items())},
    )


def _common_value(values: Sequence[Number]) -> Optional[Number]:
    """Valor comum de uma sequência (exato, ou a 1e-12 para reais)."""
    first = values[0]
    if is_exact(values):
        return first if all(v == first for v in values) else None
    if all(abs(float(v) - float(first)) <= SUM_TOLERANCE for v in values):
        return first
    return None


def classify(system: BaranskiSystem) -> SystemClass:
    """Detecta estrutura Bedford–McMullen nas colunas/linhas ocupadas e fibras uniformes."""
    proj = project(system)
    uniform_v = len(set(proj.column_sizes.values())) == 1
    uniform_h = len(set(proj.row_sizes.values())) == 1

    width = _common_value([system.width(i) for i in proj.columns])
    height = _common_value([system.height(j) for j in proj.rows])
    if width is not None and height is not None:
        m_tilde = 1.0 / float(width)
        n_tilde = 1.0 / float(height)
        if isinstance(width, Fraction) and isinstance(height, Fraction):
            bm = 1 / height > 1 / width
        else:
            bm = n_tilde - m_tilde > SUM_TOLERANCE
        if bm:
            return SystemClass(
                kind=SystemKind.BEDFORD_MCMULLEN,
                uniform_vertical_fibres=uniform_v,
                uniform_horizontal_fibres=uniform_h,
                m_tilde=m_tilde,
                n_tilde=n_tilde,
            )
    return SystemClass(
        kind=SystemKind.GENERAL,
        uniform_vertical_fibres=uniform_v,
        uniform_horizontal_fibres=uniform_h,
    )


def is_full_grid(system: BaranskiSystem) -> bool:
    """D = D_X × D_Y (caso t_A + t_B = D_A = D_B)."""
    proj = project(system)
    return len(system.pattern) == len(proj.columns) * len(proj.rows)


def word_sequence_kind(system: BaranskiSystem, word: Sequence[Cell]) -> Orientation:
    """Sequência do tipo A quando A_λ ≥ B_λ (cilindro mais largo que alto), senão B."""
    log_width = sum(math.log(system.width(i)) for i, _ in word)
    log_height = sum(math.log(system.height(j)) for _, j in word)
    return Orientation.A if log_width >= log_height else Orientation.B
