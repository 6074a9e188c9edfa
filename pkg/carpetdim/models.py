"""
Modelos Pydantic para arquivos de sistema, configuração e relatórios.
"""
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, StrictFloat, StrictInt, model_validator

from .config import (
    DEFAULT_BASE,
    DEFAULT_KMAX,
    DEFAULT_QMAX,
    DEFAULT_QMIN,
    DEFAULT_RESOLUTION,
    DEFAULT_SEED,
    DEFAULT_STARTS,
    DEFAULT_THREADS,
    SCHEMA_VERSION,
)

# Valor numérico cru do JSON: inteiro, real ou racional "p/q"
RawNumber = Union[StrictInt, StrictFloat, str]


class CommandEnum(str, Enum):
    DIMS = "dims"
    HAUSDORFF = "hausdorff"
    BOX = "box"
    DIAGNOSE = "diagnose"
    APPROX = "approx"
    EMPIRICAL = "empirical"
    RENDER = "render"


class OutputFormat(str, Enum):
    TEXT = "text"
    JSON = "json"


class SystemKind(str, Enum):
    GENERAL = "GeneralBaranski"
    BEDFORD_MCMULLEN = "BedfordMcMullenType"


class Orientation(str, Enum):
    A = "A"
    B = "B"


class Region(str, Enum):
    S_A = "S_A"
    S_B = "S_B"
    BOUNDARY = "Boundary"


class HausdorffMethod(str, Enum):
    CLOSED_FORM = "closed_form"
    VARIATIONAL = "variational"


class SeccVerdict(str, Enum):
    EXACT_OVERLAP = "ExactOverlap"
    BOUNDED_RATE = "BoundedRate"
    INCONCLUSIVE = "Inconclusive"


class AxisStatus(str, Enum):
    EXACT_OVERLAP = "exact_overlap_at_k"
    NO_OVERLAP = "no_overlap_to_depth"
    NOT_CHECKED = "not_checked"


class Verdict(str, Enum):
    LIKELY_OUTSIDE_E = "likely_outside_E"
    INSIDE_E_CANDIDATE = "inside_E_candidate"
    INCONCLUSIVE = "inconclusive"


class ApproxFlavor(str, Enum):
    HAUSDORFF = "hausdorff"
    BOX = "box"


class StopRule(str, Enum):
    LONGER = "longer"
    SHORTER = "shorter"


class JobStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


# ═══════════════════════════════════════════════════════════
# ENTRADA
# ═══════════════════════════════════════════════════════════

class SystemFile(BaseModel):
    """Esquema do arquivo JSON de definição do sistema."""
    column_widths: List[RawNumber] = Field(..., min_length=1)
    row_heights: List[RawNumber] = Field(..., min_length=1)
    pattern: List[Tuple[StrictInt, StrictInt]]
    column_translations: Optional[Dict[int, RawNumber]] = None  # None = posição canônica
    row_translations: Optional[Dict[int, RawNumber]] = None


class RunConfig(BaseModel):
    """Configuração de uma execução da CLI."""
    command: CommandEnum
    input_path: Path
    output_path: Optional[Path] = None
    output_format: OutputFormat = OutputFormat.TEXT
    seed: int = DEFAULT_SEED
    threads: int = Field(default=DEFAULT_THREADS, ge=1)
    starts: int = Field(default=DEFAULT_STARTS, ge=0)
    k_max: int = Field(default=DEFAULT_KMAX, ge=1)
    q_min: int = Field(default=DEFAULT_QMIN, ge=0)
    q_max: int = Field(default=DEFAULT_QMAX, ge=1)
    base: float = Field(default=DEFAULT_BASE, gt=1)
    resolution: int = Field(default=DEFAULT_RESOLUTION, ge=1)
    budget: Optional[int] = Field(default=None, ge=1)
    strict: bool = False
    flavors: List[ApproxFlavor] = Field(
        default_factory=lambda: [ApproxFlavor.HAUSDORFF, ApproxFlavor.BOX]
    )
    ks: Optional[List[int]] = None
    delta: Optional[float] = Field(default=None, gt=0, le=1)

    @model_validator(mode="after")
    def _check_ladder(self) -> "RunConfig":
        if self.q_min >= self.q_max:
            raise ValueError("qmin deve ser menor que qmax.")
        if self.ks is not None and any(k < 1 for k in self.ks):
            raise ValueError("todos os k devem ser >= 1.")
        return self


# ═══════════════════════════════════════════════════════════
# RELATÓRIOS
# ═══════════════════════════════════════════════════════════

class ClassificationPart(BaseModel):
    kind: SystemKind
    m_tilde: Optional[float] = None
    n_tilde: Optional[float] = None
    uniform_vertical_fibres: bool
    uniform_horizontal_fibres: bool
    full_grid: bool
    cells: int
    columns: int
    rows: int


class HausdorffPart(BaseModel):
    value: float
    method: HausdorffMethod
    lower_bound_only: bool
    region: Optional[Region] = None
    converged: bool = True
    weights: Dict[str, float] = Field(default_factory=dict)  # chave "i,j"


class BoxPart(BaseModel):
    value: float
    packing: float
    t_A: float
    t_B: float
    D_A: float
    D_B: float


class DimensionReport(BaseModel):
    """Relatório completo do comando `dims`."""
    schema_version: int = SCHEMA_VERSION
    classification: ClassificationPart
    hausdorff: Optional[HausdorffPart] = None
    box: Optional[BoxPart] = None
    exceptional_verdict: Optional[Verdict] = None


class AxisReport(BaseModel):
    status: AxisStatus
    overlap_level: Optional[int] = None
    depth: int = 0
    gammas: List[str] = Field(default_factory=list)  # "p/q", "0" ou "inf"
    rates: List[Optional[float]] = Field(default_factory=list)  # None = γ infinito
    secc: Optional[SeccVerdict] = None
    heuristic: bool = True
    budget_exceeded: bool = False


class HyperplaneHitPart(BaseModel):
    axis: str
    first: int
    second: int
    translation: str
    equal_ratio: bool


class ExceptionalReport(BaseModel):
    """Relatório do comando `diagnose`."""
    schema_version: int = SCHEMA_VERSION
    k_max: int
    strict: bool = False
    x_axis: AxisReport
    y_axis: AxisReport
    hyperplane_hits: List[HyperplaneHitPart] = Field(default_factory=list)
    dim_E_constant: int
    verdict: Verdict


class EmpiricalReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    base: float
    q_min: int
    q_max: int
    slope: float
    intercept: float
    residuals: List[float]
    dropped_coarse: bool
    analytic_box_dimension: Optional[float] = None


class JobInfo(BaseModel):
    """Informações sobre uma tarefa paralela."""
    job_id: str
    label: str
    status: JobStatus
    order: int
    message: str = ""
