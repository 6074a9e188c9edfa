"""
Utilitários: números racionais, leitura de sistemas, exportação CSV e PGM.
"""
import json
import logging
import sys
import warnings
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

import numpy as np

from .errors import InputUnreadable

logger = logging.getLogger(__name__)

Number = Union[Fraction, float]


def parse_number(value: Any) -> Number:
    """
    Converte um valor cru do JSON em número.

    Inteiros e strings ("1/3", "0.25", "2") viram Fraction exata;
    reais (float) continuam float. Booleanos são rejeitados.
    """
    if isinstance(value, bool):
        raise ValueError(f"Valor booleano não é numérico: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"Racional inválido: {value!r}") from e
    raise ValueError(f"Tipo numérico não suportado: {type(value).__name__}")


def format_number(value: Number) -> Union[str, float]:
    """Serializa: Fraction vira "p/q" (ou "p"), float fica float."""
    if isinstance(value, Fraction):
        return str(value)
    return float(value)


def format_rational(value: Optional[Fraction]) -> str:
    """γ_k para JSON: None é infinito."""
    if value is None:
        return "inf"
    return str(value)


def is_exact(values: Iterable[Any]) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def load_json(path: Union[str, Path]) -> Dict[str, Any]:
    """Lê um arquivo JSON; falhas de leitura viram InputUnreadable."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise InputUnreadable(f"Não foi possível ler {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputUnreadable(f"JSON inválido em {path}: {e}") from e
    if not isinstance(data, dict):
        raise InputUnreadable(f"{path}: esperado um objeto JSON no topo.")
    return data


def write_text(text: str, output: Optional[Path] = None):
    """Escreve no arquivo ou em stdout."""
    if output is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    logger.info(f"Arquivo salvo: {output}")


def write_csv(rows: List[Mapping[str, Any]], columns: List[str], output: Optional[Path] = None):
    """Exporta linhas como CSV (cabeçalho fixo em `columns`)."""
    import pandas as pd

    df = pd.DataFrame(list(rows), columns=columns)
    if output is None:
        df.to_csv(sys.stdout, index=False, lineterminator="\n")
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(output, index=False, lineterminator="\n")
    logger.info(f"CSV salvo: {output} ({len(df)} linhas)")


def write_pgm(image: np.ndarray, output: Path) -> Path:
    """
    Salva um raster 8-bit em tons de cinza como PGM binário (P5).

    Args:
        image: array uint8 (linhas, colunas), linha 0 no topo
        output: caminho do arquivo .pgm

    Returns:
        Caminho do arquivo salvo.
    """
    import rasterio
    from rasterio.errors import NotGeoreferencedWarning

    if image.dtype != np.uint8 or image.ndim != 2:
        raise ValueError("Raster deve ser 2-D uint8.")
    output.parent.mkdir(parents=True, exist_ok=True)
    height, width = image.shape
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotGeoreferencedWarning)
        with rasterio.open(
            output,
            "w",
            driver="PNM",
            height=height,
            width=width,
            count=1,
            dtype="uint8",
        ) as dst:
            dst.write(image, 1)
    logger.info(f"PGM salvo: {output} ({width}x{height})")
    return output


def read_pgm(path: Path) -> np.ndarray:
    """Lê um PGM (usado nos testes e para conferência)."""
    import rasterio
    from rasterio.errors import NotGeoreferencedWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotGeoreferencedWarning)
        with rasterio.open(path) as src:
            return src.read(1)
