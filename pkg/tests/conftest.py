import json
from fractions import Fraction

import numpy as np
import pytest

from carpetdim.engines.system import validate

# Bedford–McMullen 2x3 com três células
BM3 = {
    "column_widths": ["1/2", "1/2"],
    "row_heights": ["1/3", "1/3", "1/3"],
    "pattern": [[1, 1], [2, 1], [2, 2]],
}

# Grade 2x2 inteira: o atrator é o quadrado unitário
FULL_GRID = {
    "column_widths": ["1/2", "1/2"],
    "row_heights": ["1/2", "1/2"],
    "pattern": [[1, 1], [1, 2], [2, 1], [2, 2]],
}

SIERPINSKI8 = {
    "column_widths": ["1/3", "1/3", "1/3"],
    "row_heights": ["1/3", "1/3", "1/3"],
    "pattern": [[i, j] for i in (1, 2, 3) for j in (1, 2, 3) if (i, j) != (2, 2)],
}

# Colunas 1 e 2 deslocadas para a mesma faixa
MERGED = {
    "column_widths": ["1/2", "1/2"],
    "row_heights": ["1/3", "1/3", "1/3"],
    "pattern": [[1, 1], [2, 1], [2, 2]],
    "column_translations": {"1": 0, "2": 0},
}


def _random_pattern(rng, m, n):
    mask = rng.random((m, n)) < rng.uniform(0.3, 0.8)
    if not mask.any():
        mask[rng.integers(m), rng.integers(n)] = True
    return [[int(i) + 1, int(j) + 1] for i, j in zip(*np.nonzero(mask))]


def random_bm_system(rng):
    """Tipo Bedford–McMullen: m̃ em 2..5, ñ em 3..7, ñ > m̃, padrão aleatório."""
    m = int(rng.integers(2, 6))
    n = int(rng.integers(max(3, m + 1), 8))
    return validate(
        {
            "column_widths": [f"1/{m}"] * m,
            "row_heights": [f"1/{n}"] * n,
            "pattern": _random_pattern(rng, m, n),
        }
    )


def _random_sizes(rng, count):
    raw = [int(v) for v in rng.integers(1, 10, size=count)]
    return [Fraction(v, sum(raw)) for v in raw]


def _random_translations(rng, sizes, occupied):
    upper = 1 - max(sizes)
    return {str(k): str(upper * Fraction(int(rng.integers(0, 21)), 20)) for k in occupied}


def random_baranski_system(rng):
    """Larguras e alturas racionais aleatórias, translações arbitrárias em [0, 1 − max]."""
    m = int(rng.integers(2, 5))
    n = int(rng.integers(2, 5))
    widths = _random_sizes(rng, m)
    heights = _random_sizes(rng, n)
    pattern = _random_pattern(rng, m, n)
    return validate(
        {
            "column_widths": [str(w) for w in widths],
            "row_heights": [str(h) for h in heights],
            "pattern": pattern,
            "column_translations": _random_translations(rng, widths, sorted({i for i, _ in pattern})),
            "row_translations": _random_translations(rng, heights, sorted({j for _, j in pattern})),
        }
    )


@pytest.fixture
def bm3():
    return validate(BM3)


@pytest.fixture
def full_grid():
    return validate(FULL_GRID)


@pytest.fixture
def sierpinski8():
    return validate(SIERPINSKI8)


@pytest.fixture
def merged():
    return validate(MERGED)


@pytest.fixture
def system_file(tmp_path):
    """Grava uma descrição em JSON e devolve o caminho."""
    def write(raw, name="system.json"):
        path = tmp_path / name
        path.write_text(json.dumps(raw), encoding="utf-8")
        return path
    return write
