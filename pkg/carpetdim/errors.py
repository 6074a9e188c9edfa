"""
Exceções do carpetdim.
"""
from dataclasses import dataclass
from typing import Any, List, Optional


class CarpetError(Exception):
    """Base de todos os erros do pacote."""


@dataclass(frozen=True)
class ValidationIssue:
    """Uma invariante violada na descrição do sistema."""
    code: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.field}: {self.message}"


class SystemValidationError(CarpetError, ValueError):
    """Sistema inválido; lista todas as invariantes violadas."""

    def __init__(self, issues: List[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    @property
    def codes(self) -> List[str]:
        return [i.code for i in self.issues]

    @property
    def fields(self) -> List[str]:
        return [i.field for i in self.issues]


class EmptyInput(CarpetError, ValueError):
    pass


class RatioOutOfRange(CarpetError, ValueError):
    pass


class NotOnSimplex(CarpetError, ValueError):
    pass


class NotBMType(CarpetError, ValueError):
    pass


class NonRationalInput(CarpetError, ValueError):
    pass


class NonHomogeneous(CarpetError, ValueError):
    pass


class DegenerateLogs(CarpetError, ValueError):
    pass


class InternalInequalityViolation(CarpetError, AssertionError):
    """Uma desigualdade garantida pela teoria falhou: indica bug no solver."""


class NoConvergence(CarpetError):
    """A subida não convergiu; `result` guarda o melhor ponto encontrado."""

    def __init__(self, message: str, result: Optional[Any] = None):
        super().__init__(message)
        self.result = result


class BudgetExceeded(CarpetError):
    """Orçamento de palavras/retângulos estourado; carrega o parcial."""

    def __init__(self, message: str, partial: Optional[Any] = None):
        super().__init__(message)
        self.partial = partial


class InputUnreadable(CarpetError):
    """Arquivo de entrada inexistente ou com JSON inválido."""
