"""
Contagem de caixas empírica e renderização do atrator.

A expansão é feita em lotes numpy (um lote = fronteira de cilindros) e em
profundidade, com lotes limitados a CHUNK_SIZE para manter a memória sob controle.
"""
import logging
import math
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import (
    CHUNK_SIZE,
    DENSE_GRID_LIMIT,
    GRID_SNAP,
    INTENSITY_STEP,
    RECT_BUDGET,
    RESIDUAL_LIMIT,
)
from ..errors import BudgetExceeded
from ..models import StopRule
from .system import BaranskiSystem, Cell

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CylinderRect:
    word: Tuple[Cell, ...]
    x0: float
    y0: float
    width: float
    height: float


@dataclass
class CylinderBatch:
    """Lote de retângulos; `codes` guarda a palavra em base |D| (None se não couber em int64)."""
    x0: np.ndarray
    y0: np.ndarray
    width: np.ndarray
    height: np.ndarray
    depth: np.ndarray
    codes: Optional[np.ndarray]
    alphabet: Tuple[Cell, ...]

    def __len__(self) -> int:
        return len(self.x0)

    def rects(self) -> Iterator[CylinderRect]:
        size = len(self.alphabet)
        for k in range(len(self)):
            word: Tuple[Cell, ...] = ()
            if self.codes is not None:
                code, digits = int(self.codes[k]), []
                for _ in range(int(self.depth[k])):
                    code, digit = divmod(code, size)
                    digits.append(self.alphabet[digit])
                word = tuple(reversed(digits))
            yield CylinderRect(
                word=word,
                x0=float(self.x0[k]),
                y0=float(self.y0[k]),
                width=float(self.width[k]),
                height=float(self.height[k]),
            )


@dataclass(frozen=True)
class BoxCountSample:
    q: int
    delta: float
    count: int

    @property
    def log_count(self) -> float:
        return math.log(self.count)

    @property
    def minus_log_delta(self) -> float:
        return -math.log(self.delta)

    def as_row(self) -> dict:
        return {
            "q": self.q,
            "delta": self.delta,
            "N_delta": self.count,
            "log_N": self.log_count,
            "minus_log_delta": self.minus_log_delta,
        }


SAMPLE_COLUMNS = ["q", "delta", "N_delta", "log_N", "minus_log_delta"]


@dataclass
class BoxDimensionEstimate:
    slope: float
    intercept: float
    residuals: List[float]
    samples: List[BoxCountSample]
    dropped_coarse: bool = False


# ═══════════════════════════════════════════════════════════
# EXPANSÃO
# ═══════════════════════════════════════════════════════════

def _snap(values: np.ndarray) -> np.ndarray:
    nearest = np.rint(values)
    return np.where(np.abs(values - nearest) < GRID_SNAP, nearest, values)


def _max_depth(system: BaranskiSystem, delta: float) -> int:
    geo = system.cell_geometry
    contraction = float(max(geo[:, 2].max(), geo[:, 3].max()))
    return max(0, math.ceil(math.log(delta) / math.log(contraction))) + 1


def _root_batch(system: BaranskiSystem, delta: float) -> CylinderBatch:
    size = len(system.pattern)
    track = size ** _max_depth(system, delta) < 2 ** 62
    return CylinderBatch(
        x0=np.zeros(1),
        y0=np.zeros(1),
        width=np.ones(1),
        height=np.ones(1),
        depth=np.zeros(1, dtype=np.int64),
        codes=np.zeros(1, dtype=np.int64) if track else None,
        alphabet=system.pattern,
    )


def _children(system: BaranskiSystem, batch: CylinderBatch) -> CylinderBatch:
    geo = system.cell_geometry
    t, tau, a, b = geo[:, 0], geo[:, 1], geo[:, 2], geo[:, 3]
    size = len(t)
    codes = None
    if batch.codes is not None:
        codes = (batch.codes[:, None] * size + np.arange(size)[None, :]).ravel()
    return CylinderBatch(
        x0=(batch.x0[:, None] + batch.width[:, None] * t[None, :]).ravel(),
        y0=(batch.y0[:, None] + batch.height[:, None] * tau[None, :]).ravel(),
        width=(batch.width[:, None] * a[None, :]).ravel(),
        height=(batch.height[:, None] * b[None, :]).ravel(),
        depth=np.repeat(batch.depth + 1, size),
        codes=codes,
        alphabet=batch.alphabet,
    )


def _select(batch: CylinderBatch, mask: Union[np.ndarray, slice]) -> CylinderBatch:
    return CylinderBatch(
        x0=batch.x0[mask],
        y0=batch.y0[mask],
        width=batch.width[mask],
        height=batch.height[mask],
        depth=batch.depth[mask],
        codes=None if batch.codes is None else batch.codes[mask],
        alphabet=batch.alphabet,
    )


class _EmissionCounter:
    """Retângulos emitidos, compartilhado entre os ramos de uma mesma escala."""

    def __init__(self, budget: int, delta: float):
        self.budget = budget
        self.delta = delta
        self.total = 0
        self._lock = threading.Lock()

    def add(self, n: int):
        with self._lock:
            self.total += n
            total = self.total
        if total > self.budget:
            raise BudgetExceeded(f"Mais de {self.budget} retângulos na escala δ={self.delta:g}.", partial=total)


def _expand(
    system: BaranskiSystem,
    delta: float,
    roots: Sequence[CylinderBatch],
    counter: _EmissionCounter,
    stop_rule: StopRule,
) -> Iterator[CylinderBatch]:
    limit = delta * (1.0 + GRID_SNAP)
    stack = list(reversed(roots))
    while stack:
        batch = stack.pop()
        if stop_rule == StopRule.LONGER:
            side = np.maximum(batch.width, batch.height)
        else:
            side = np.minimum(batch.width, batch.height)
        done = side <= limit
        if done.any():
            ready = _select(batch, done)
            counter.add(len(ready))
            yield ready
        if done.all():
            continue
        children = _children(system, _select(batch, ~done))
        pieces = [
            _select(children, slice(start, start + CHUNK_SIZE))
            for start in range(0, len(children), CHUNK_SIZE)
        ]
        stack.extend(reversed(pieces))


def expand_to_scale(
    system: BaranskiSystem,
    delta: float,
    budget: int = RECT_BUDGET,
    stop_rule: StopRule = StopRule.LONGER,
) -> Iterator[CylinderBatch]:
    """
    Cilindros emitidos quando o lado maior cai pela primeira vez a ≤ δ.

    Gera lotes (CylinderBatch); `batch.rects()` dá os CylinderRect individuais.
    """
    if not 0 < delta <= 1:
        raise ValueError("δ deve estar em (0, 1].")
    return _expand(system, delta, [_root_batch(system, delta)], _EmissionCounter(budget, delta), stop_rule)


def branch_roots(system: BaranskiSystem, delta: float) -> List[CylinderBatch]:
    """Raízes independentes: a palavra vazia (se já qualifica) ou os |D| ramos de nível 1."""
    root = _root_batch(system, delta)
    if max(root.width[0], root.height[0]) <= delta * (1.0 + GRID_SNAP):
        return [root]
    children = _children(system, root)
    return [_select(children, slice(k, k + 1)) for k in range(len(children))]


# ═══════════════════════════════════════════════════════════
# CONTAGEM
# ═══════════════════════════════════════════════════════════

class OccupancyGrid:
    """Células [uδ,(u+1)δ)×[vδ,(v+1)δ) cujo fecho toca algum retângulo."""

    def __init__(self, delta: float):
        self.delta = delta
        self.size = max(1, math.ceil(1.0 / delta - GRID_SNAP))
        self.dense = self.size * self.size <= DENSE_GRID_LIMIT
        self._cells = np.zeros(self.size * self.size, dtype=bool) if self.dense else None
        self._sparse = set()
        self._lock = threading.Lock()

    def _ranges(self, start: np.ndarray, length: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.ceil(_snap(start / self.delta)).astype(np.int64) - 1
        hi = np.floor(_snap((start + length) / self.delta)).astype(np.int64)
        last = self.size - 1
        return np.clip(lo, 0, last), np.clip(hi, 0, last)

    def _store(self, idx: np.ndarray):
        if self.dense:
            self._cells[idx] = True
        else:
            self._sparse.update(idx.tolist())

    def mark(self, x0: np.ndarray, y0: np.ndarray, width: np.ndarray, height: np.ndarray):
        u_lo, u_hi = self._ranges(np.asarray(x0), np.asarray(width))
        v_lo, v_hi = self._ranges(np.asarray(y0), np.asarray(height))
        small = ((u_hi - u_lo) <= 2) & ((v_hi - v_lo) <= 2)
        with self._lock:
            for du in range(3):
                for dv in range(3):
                    u, v = u_lo + du, v_lo + dv
                    ok = small & (u <= u_hi) & (v <= v_hi)
                    if ok.any():
                        self._store(v[ok] * self.size + u[ok])
            for k in np.flatnonzero(~small):
                us = np.arange(u_lo[k], u_hi[k] + 1)
                vs = np.arange(v_lo[k], v_hi[k] + 1)
                self._store((vs[:, None] * self.size + us[None, :]).ravel())

    def mark_batch(self, batch: CylinderBatch):
        self.mark(batch.x0, batch.y0, batch.width, batch.height)

    @property
    def count(self) -> int:
        if self.dense:
            return int(np.count_nonzero(self._cells))
        return len(self._sparse)


def count_boxes(rects: Iterable[Union[CylinderBatch, CylinderRect]], delta: float) -> int:
    """N_δ: número de células da grade δ marcadas pelos retângulos."""
    grid = OccupancyGrid(delta)
    for item in rects:
        if isinstance(item, CylinderBatch):
            grid.mark_batch(item)
        else:
            grid.mark(
                np.array([item.x0]), np.array([item.y0]), np.array([item.width]), np.array([item.height])
            )
    return grid.count


def count_at_scale(system: BaranskiSystem, delta: float, budget: int = RECT_BUDGET, threads: int = 1) -> int:
    """
    Contagem na escala δ; com threads > 1 os ramos de nível 1 viram jobs independentes.

    O orçamento vale para a escala inteira: todos os ramos descontam do mesmo contador.
    """
    if threads <= 1:
        return count_boxes(expand_to_scale(system, delta, budget), delta)

    from ..jobs import JobManager

    grid = OccupancyGrid(delta)
    counter = _EmissionCounter(budget, delta)
    roots = branch_roots(system, delta)

    def branch(root: CylinderBatch) -> Callable[[], None]:
        def run():
            for batch in _expand(system, delta, [root], counter, StopRule.LONGER):
                grid.mark_batch(batch)
        return run

    JobManager(threads=threads).run([(f"ramo_{k}", branch(r)) for k, r in enumerate(roots)])
    logger.debug(f"δ={delta:g}: {counter.total} retângulos em {len(roots)} ramos.")
    return grid.count


def estimate_box_dimension(
    system: BaranskiSystem,
    q_min: int,
    q_max: int,
    base: float,
    budget: int = RECT_BUDGET,
    threads: int = 1,
    progress_callback: Optional[Callable[[int, str], None]] = None,
) -> BoxDimensionEstimate:
    """
    Inclinação de mínimos quadrados de log N_δ contra −log δ, δ = base^{−q}.

    Se algum resíduo passa de RESIDUAL_LIMIT, as duas escalas mais grossas são
    descartadas e o ajuste refeito (`dropped_coarse=True`).
    """
    if base <= 1:
        raise ValueError("base deve ser > 1.")
    if q_min >= q_max:
        raise ValueError("q_min deve ser menor que q_max.")

    def update(pct, msg):
        if progress_callback:
            progress_callback(pct, msg)
        logger.info(f"[Empírico] {pct}% - {msg}")

    samples = []
    qs = list(range(q_min, q_max + 1))
    for pos, q in enumerate(qs):
        delta = base ** (-q)
        count = count_at_scale(system, delta, budget, threads)
        samples.append(BoxCountSample(q=q, delta=delta, count=count))
        update(int(100 * (pos + 1) / len(qs)), f"q={q} δ={delta:.3e} N={count}")

    def fit(chosen: List[BoxCountSample]):
        x = np.array([s.minus_log_delta for s in chosen])
        y = np.array([s.log_count for s in chosen])
        slope, intercept = np.polyfit(x, y, 1)
        return float(slope), float(intercept), (y - (slope * x + intercept)).tolist()

    slope, intercept, residuals = fit(samples)
    dropped = False
    if max(abs(r) for r in residuals) > RESIDUAL_LIMIT and len(samples) >= 4:
        slope, intercept, residuals = fit(samples[2:])
        dropped = True
        logger.info("Resíduos altos: duas escalas mais grossas descartadas.")
    return BoxDimensionEstimate(
        slope=slope,
        intercept=intercept,
        residuals=residuals,
        samples=samples,
        dropped_coarse=dropped,
    )


def sample_attractor_points(system: BaranskiSystem, n_points: int, depth: int, seed: int = 0) -> np.ndarray:
    """Pontos Π_t(λ) para sequências aleatórias truncadas em `depth`; shape (n, 2)."""
    geo = system.cell_geometry
    rng = np.random.default_rng(seed)
    choice = rng.integers(0, len(geo), size=(n_points, depth))
    x = np.zeros(n_points)
    y = np.zeros(n_points)
    for level in range(depth - 1, -1, -1):
        c = choice[:, level]
        x = geo[c, 0] + geo[c, 2] * x
        y = geo[c, 1] + geo[c, 3] * y
    return np.column_stack([x, y])


def point_sample_count(system: BaranskiSystem, delta: float, n_points: int, seed: int = 0, depth: int = 48) -> int:
    """Células δ (semiabertas, com clamping) que contêm pontos amostrados do atrator."""
    points = sample_attractor_points(system, n_points, depth, seed)
    size = max(1, math.ceil(1.0 / delta - GRID_SNAP))
    cells = np.clip(np.floor(points / delta).astype(np.int64), 0, size - 1)
    return len(np.unique(cells[:, 1] * size + cells[:, 0]))


# ═══════════════════════════════════════════════════════════
# RENDERIZAÇÃO
# ═══════════════════════════════════════════════════════════

def render_counts(system: BaranskiSystem, delta: float, resolution: int, budget: int = RECT_BUDGET) -> np.ndarray:
    """
    Número de retângulos que cobrem cada pixel (interseção de área positiva).

    Returns:
        array uint32 (resolution, resolution), linha 0 no topo (y = 1).
    """
    if resolution < 1:
        raise ValueError("resolution deve ser >= 1.")
    last = resolution - 1
    diff = np.zeros((resolution + 1, resolution + 1), dtype=np.int64)
    for batch in expand_to_scale(system, delta, budget):
        spans = []
        for start, length in ((batch.x0, batch.width), (batch.y0, batch.height)):
            lo = np.floor(_snap(start * resolution)).astype(np.int64)
            hi = np.ceil(_snap((start + length) * resolution)).astype(np.int64) - 1
            lo = np.clip(lo, 0, last)
            spans.append((lo, np.clip(np.maximum(hi, lo), 0, last)))
        (u0, u1), (v0, v1) = spans
        np.add.at(diff, (u0, v0), 1)
        np.add.at(diff, (u1 + 1, v0), -1)
        np.add.at(diff, (u0, v1 + 1), -1)
        np.add.at(diff, (u1 + 1, v1 + 1), 1)
    counts = diff.cumsum(axis=0).cumsum(axis=1)[:resolution, :resolution]
    # índice [u, v] → imagem [linha, coluna] com y crescendo para cima
    return counts.T[::-1].astype(np.uint32)


def render_image(system: BaranskiSystem, delta: float, resolution: int, budget: int = RECT_BUDGET) -> np.ndarray:
    """Raster 8-bit: intensidade = min(255, cobertura·INTENSITY_STEP)."""
    counts = render_counts(system, delta, resolution, budget)
    return np.minimum(counts.astype(np.int64) * INTENSITY_STEP, 255).astype(np.uint8)
