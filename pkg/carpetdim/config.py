"""
Configurações globais do carpetdim.
"""
import logging
import os
from pathlib import Path

logger = logging.getLogger(__name__)


def env_int(name: str, default: int, minimum: int = 1) -> int:
    """Inteiro de variável de ambiente; valor inválido ou abaixo do mínimo cai no padrão."""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"{name}={raw!r} não é inteiro; usando {default}.")
        return default
    if value < minimum:
        logger.warning(f"{name}={value} abaixo de {minimum}; usando {default}.")
        return default
    return value


# Diretório raiz do projeto
BASE_DIR = Path(__file__).resolve().parent.parent

# Pasta de saída padrão para rasters (criada sob demanda)
OUTPUTS_DIR = BASE_DIR / "outputs"

# Verbosidade do log (DEBUG, INFO, WARNING, ...)
LOG_LEVEL = os.getenv("CARPETDIM_LOG", "WARNING").upper()

# Número padrão de workers para starts e ramos de contagem
DEFAULT_THREADS = env_int("CARPETDIM_THREADS", 1)

SCHEMA_VERSION = 1

# ── Tolerâncias ──────────────────────────────────────────
SUM_TOLERANCE = 1e-12
EXPONENT_TOLERANCE = 1e-12
MAX_BISECTION_STEPS = 200
SIMPLEX_TOLERANCE = 1e-12
BOUNDARY_TOLERANCE = 1e-12
BRANCH_AGREEMENT = 1e-9
INEQUALITY_SLACK = 1e-9
GRID_SNAP = 1e-9

# ── Otimizador de g ──────────────────────────────────────
DEFAULT_SEED = 0
DEFAULT_STARTS = 16
DEFAULT_MAX_ITERS = 500
DEFAULT_OPT_TOL = 1e-13

# ── Diagnóstico de sobreposição ──────────────────────────
DEFAULT_KMAX = 10
WORD_BUDGET = 20_000_000

# ── Contagem empírica ────────────────────────────────────
RECT_BUDGET = 100_000_000
DENSE_GRID_LIMIT = 2 ** 28
CHUNK_SIZE = 1 << 20
RESIDUAL_LIMIT = 0.05
DEFAULT_BASE = 3.0
DEFAULT_QMIN = 2
DEFAULT_QMAX = 8
DEFAULT_RESOLUTION = 512
INTENSITY_STEP = 64

# ── Aproximações Γ_k ─────────────────────────────────────
APPROX_KS = (10, 100, 1_000, 10_000, 100_000)
DEFAULT_SSC_EPSILON = 0.05

# Formato padrão por comando
DEFAULT_FORMAT = {
    "dims": "text",
    "hausdorff": "text",
    "box": "text",
    "diagnose": "json",
    "approx": "csv",
    "empirical": "csv",
    "render": "pgm",
}
