"""
CLI do carpetdim.
Comandos para dimensões analíticas, diagnóstico de sobreposições,
aproximações Γ_k, contagem empírica de caixas e renderização.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from pydantic import ValidationError

from .config import (
    APPROX_KS,
    DEFAULT_FORMAT,
    INEQUALITY_SLACK,
    LOG_LEVEL,
    OUTPUTS_DIR,
    RECT_BUDGET,
    WORD_BUDGET,
)
from .engines.approx import hausdorff_weights, s_k_trace
from .engines.boxcount import SAMPLE_COLUMNS, estimate_box_dimension, render_image
from .engines.moran import bm_closed_form, box_dimension_analytic
from .engines.overlaps import exceptional_report
from .engines.system import BaranskiSystem, classify, is_full_grid, project, validate
from .engines.variational import bm_optimal_weights, maximize_g
from .errors import BudgetExceeded, InputUnreadable, InternalInequalityViolation, SystemValidationError
from .models import (
    ApproxFlavor,
    BoxPart,
    ClassificationPart,
    CommandEnum,
    DimensionReport,
    EmpiricalReport,
    ExceptionalReport,
    HausdorffMethod,
    HausdorffPart,
    OutputFormat,
    RunConfig,
)
from .utils import load_json, write_csv, write_pgm, write_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_UNREADABLE = 3


class ConfigError(Exception):
    """Falha de configuração com o código de saída correspondente."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


# ═══════════════════════════════════════════════════════════
# ARGUMENTOS
# ═══════════════════════════════════════════════════════════

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="arquivo JSON do sistema")
    common.add_argument("--output", default=None, help="arquivo de saída (padrão: stdout)")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--budget", type=int, default=None, help="teto de palavras/retângulos")

    parser = argparse.ArgumentParser(
        prog="carpetdim",
        description="Dimensões de Hausdorff, caixa e empacotamento de carpetes de Barański.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("dims", "hausdorff"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--starts", type=int, default=None, help="partidas aleatórias do otimizador")
        if name == "dims":
            p.add_argument("--kmax", type=int, default=None)
    sub.add_parser("box", parents=[common])

    p = sub.add_parser("diagnose", parents=[common])
    p.add_argument("--kmax", type=int, default=None)
    p.add_argument("--strict", action="store_true", help="pares com razões diferentes não contam")

    p = sub.add_parser("approx", parents=[common])
    p.add_argument("--flavor", choices=[f.value for f in ApproxFlavor], action="append", default=None)
    p.add_argument("--k", type=int, action="append", default=None, dest="ks")

    p = sub.add_parser("empirical", parents=[common])
    p.add_argument("--qmin", type=int, default=None)
    p.add_argument("--qmax", type=int, default=None)
    p.add_argument("--base", type=float, default=None)

    p = sub.add_parser("render", parents=[common])
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--delta", type=float, default=None, help="escala da expansão (padrão 1/resolution)")
    return parser


def _default_format(command: str) -> str:
    """Formato do relatório quando --format não é dado (csv/pgm saem como texto)."""
    fmt = DEFAULT_FORMAT.get(command, OutputFormat.TEXT.value)
    return fmt if fmt in {f.value for f in OutputFormat} else OutputFormat.TEXT.value


def _config_fields(args: argparse.Namespace) -> Dict[str, Any]:
    mapping = {
        "seed": "seed",
        "threads": "threads",
        "budget": "budget",
        "starts": "starts",
        "kmax": "k_max",
        "strict": "strict",
        "qmin": "q_min",
        "qmax": "q_max",
        "base": "base",
        "resolution": "resolution",
        "delta": "delta",
        "ks": "ks",
    }
    fields: Dict[str, Any] = {
        "command": args.command,
        "input_path": Path(args.input),
        "output_path": Path(args.output) if args.output else None,
        "output_format": args.format or _default_format(args.command),
    }
    for attr, name in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            fields[name] = value
    if getattr(args, "flavor", None):
        fields["flavors"] = list(dict.fromkeys(args.flavor))
    return fields


def parse_config(
    argv: Optional[Sequence[str]] = None,
    contents: Optional[Mapping[str, Any]] = None,
) -> Tuple[RunConfig, BaranskiSystem]:
    """
    Valida argumentos e o arquivo do sistema.

    Args:
        argv: argumentos da linha de comando
        contents: descrição já carregada (se None, lê `--input`)

    Raises:
        ConfigError: exit_code 2 (validação) ou 3 (arquivo ilegível).
    """
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(**_config_fields(args))
    except ValidationError as e:
        fields = ", ".join(".".join(str(p) for p in err["loc"]) or "config" for err in e.errors())
        raise ConfigError(f"Configuração inválida ({fields}): {e}", EXIT_VALIDATION) from e

    if contents is None:
        try:
            contents = load_json(config.input_path)
        except InputUnreadable as e:
            raise ConfigError(str(e), EXIT_UNREADABLE) from e
    try:
        system = validate(contents)
    except SystemValidationError as e:
        raise ConfigError(f"Sistema inválido: {e}", EXIT_VALIDATION) from e
    logger.info(f"Sistema carregado: {len(system.pattern)} células, grade {system.m}x{system.n}")
    return config, system


# ═══════════════════════════════════════════════════════════
# RELATÓRIOS
# ═══════════════════════════════════════════════════════════

def _classification(system: BaranskiSystem) -> ClassificationPart:
    cls = classify(system)
    proj = project(system)
    return ClassificationPart(
        kind=cls.kind,
        m_tilde=cls.m_tilde,
        n_tilde=cls.n_tilde,
        uniform_vertical_fibres=cls.uniform_vertical_fibres,
        uniform_horizontal_fibres=cls.uniform_horizontal_fibres,
        full_grid=is_full_grid(system),
        cells=len(system.pattern),
        columns=len(proj.columns),
        rows=len(proj.rows),
    )


def _weights_dict(weights) -> Dict[str, float]:
    return {f"{i},{j}": value for (i, j), value in weights.as_dict().items()}


def _hausdorff_part(system: BaranskiSystem, config: RunConfig) -> HausdorffPart:
    if classify(system).is_bm:
        dim_h, _ = bm_closed_form(system)
        return HausdorffPart(
            value=dim_h,
            method=HausdorffMethod.CLOSED_FORM,
            lower_bound_only=False,
            weights=_weights_dict(bm_optimal_weights(system)),
        )
    result = maximize_g(system, starts=config.starts, seed=config.seed, threads=config.threads)
    return HausdorffPart(
        value=result.value,
        method=HausdorffMethod.VARIATIONAL,
        lower_bound_only=True,
        region=result.region,
        converged=result.converged,
        weights=_weights_dict(result.weights),
    )


def _box_part(system: BaranskiSystem) -> BoxPart:
    exps = box_dimension_analytic(system)
    return BoxPart(
        value=exps.box_dimension,
        packing=exps.box_dimension,
        t_A=exps.t_A,
        t_B=exps.t_B,
        D_A=exps.D_A,
        D_B=exps.D_B,
    )


def _check_report(report: DimensionReport):
    values = []
    if report.hausdorff is not None:
        values.append(report.hausdorff.value)
    if report.box is not None:
        values.append(report.box.value)
    if any(not -INEQUALITY_SLACK <= v <= 2 + INEQUALITY_SLACK for v in values):
        raise InternalInequalityViolation(f"Dimensão fora de [0,2]: {values}")
    if report.hausdorff is not None and report.box is not None:
        if report.hausdorff.value > report.box.value + 1e-6:
            raise InternalInequalityViolation(
                f"dim_H = {report.hausdorff.value} > dim_B = {report.box.value}"
            )


def _yes(flag: bool) -> str:
    return "sim" if flag else "não"


def format_dimension_report(report: DimensionReport) -> str:
    c = report.classification
    lines = [f"Classificação: {c.kind.value}"]
    if c.m_tilde is not None:
        lines[0] += f" (m̃={c.m_tilde:g}, ñ={c.n_tilde:g})"
    lines.append(f"Células: {c.cells}  colunas: {c.columns}  linhas: {c.rows}  grade cheia: {_yes(c.full_grid)}")
    lines.append(
        f"Fibras uniformes: verticais={_yes(c.uniform_vertical_fibres)} "
        f"horizontais={_yes(c.uniform_horizontal_fibres)}"
    )
    if report.hausdorff is not None:
        h = report.hausdorff
        note = " (cota inferior)" if h.lower_bound_only else ""
        lines.append(f"dim_H = {h.value:.6f}  [{h.method.value}]{note}")
    if report.box is not None:
        b = report.box
        lines.append(
            f"dim_B = dim_P = {b.value:.6f}  "
            f"(t_A={b.t_A:.6f}, t_B={b.t_B:.6f}, D_A={b.D_A:.6f}, D_B={b.D_B:.6f})"
        )
    if report.exceptional_verdict is not None:
        lines.append(f"Conjunto excepcional: {report.exceptional_verdict.value}")
    return "\n".join(lines)


def format_exceptional_report(report: ExceptionalReport) -> str:
    lines = [f"Profundidade k_max = {report.k_max}{' (estrito)' if report.strict else ''}"]
    for name, axis in (("x", report.x_axis), ("y", report.y_axis)):
        line = f"Eixo {name}: {axis.status.value}"
        if axis.overlap_level is not None:
            line += f" (k={axis.overlap_level})"
        if axis.secc is not None:
            line += f"  SECC: {axis.secc.value}{' [heurístico]' if axis.heuristic else ''}"
        if axis.budget_exceeded:
            line += "  [orçamento atingido]"
        lines.append(line)
    for hit in report.hyperplane_hits:
        lines.append(
            f"Hiperplano {hit.axis}: {hit.first} e {hit.second} com translação {hit.translation}"
            f"{' (mesma razão)' if hit.equal_ratio else ''}"
        )
    lines.append(f"dim E = {report.dim_E_constant}")
    lines.append(f"Veredito: {report.verdict.value}")
    return "\n".join(lines)


def _emit_report(report, formatter: Callable[[Any], str], config: RunConfig):
    if config.output_format == OutputFormat.JSON:
        write_text(report.model_dump_json(indent=2), config.output_path)
    else:
        write_text(formatter(report), config.output_path)


# ═══════════════════════════════════════════════════════════
# COMANDOS
# ═══════════════════════════════════════════════════════════

def cmd_dims(config: RunConfig, system: BaranskiSystem) -> int:
    verdict = exceptional_report(system, config.k_max, config.budget or WORD_BUDGET).verdict
    report = DimensionReport(
        classification=_classification(system),
        hausdorff=_hausdorff_part(system, config),
        box=_box_part(system),
        exceptional_verdict=verdict,
    )
    _emit_report(report, format_dimension_report, config)
    _check_report(report)
    return EXIT_OK


def cmd_hausdorff(config: RunConfig, system: BaranskiSystem) -> int:
    report = DimensionReport(classification=_classification(system), hausdorff=_hausdorff_part(system, config))
    _emit_report(report, format_dimension_report, config)
    _check_report(report)
    return EXIT_OK


def cmd_box(config: RunConfig, system: BaranskiSystem) -> int:
    report = DimensionReport(classification=_classification(system), box=_box_part(system))
    _emit_report(report, format_dimension_report, config)
    _check_report(report)
    return EXIT_OK


def cmd_diagnose(config: RunConfig, system: BaranskiSystem) -> int:
    report = exceptional_report(system, config.k_max, config.budget or WORD_BUDGET, config.strict)
    _emit_report(report, format_exceptional_report, config)
    return EXIT_OK


def cmd_approx(config: RunConfig, system: BaranskiSystem) -> int:
    ks = config.ks or list(APPROX_KS)
    rows: List[Dict[str, object]] = []
    for flavor in config.flavors:
        weights = None
        if flavor == ApproxFlavor.HAUSDORFF:
            weights = hausdorff_weights(system, seed=config.seed, threads=config.threads)
        rows.extend(s_k_trace(system, ks, flavor, weights))
    write_csv(rows, ["flavor", "k", "theta", "s_k"], config.output_path)
    return EXIT_OK


def cmd_empirical(config: RunConfig, system: BaranskiSystem) -> int:
    estimate = estimate_box_dimension(
        system,
        config.q_min,
        config.q_max,
        config.base,
        budget=config.budget or RECT_BUDGET,
        threads=config.threads,
    )
    write_csv([s.as_row() for s in estimate.samples], SAMPLE_COLUMNS, config.output_path)
    summary = EmpiricalReport(
        base=config.base,
        q_min=config.q_min,
        q_max=config.q_max,
        slope=estimate.slope,
        intercept=estimate.intercept,
        residuals=estimate.residuals,
        dropped_coarse=estimate.dropped_coarse,
        analytic_box_dimension=box_dimension_analytic(system).box_dimension,
    )
    if config.output_format == OutputFormat.JSON:
        text = summary.model_dump_json(indent=2)
    else:
        text = (
            f"Inclinação = {summary.slope:.6f}  (analítico: {summary.analytic_box_dimension:.6f})"
            f"{'  [escalas grossas descartadas]' if summary.dropped_coarse else ''}"
        )
    stream = sys.stdout if config.output_path is not None else sys.stderr
    stream.write(text + "\n")
    return EXIT_OK


def cmd_render(config: RunConfig, system: BaranskiSystem) -> int:
    delta = config.delta or 1.0 / config.resolution
    output = config.output_path or OUTPUTS_DIR / f"{config.input_path.stem}_{config.resolution}.pgm"
    image = render_image(system, delta, config.resolution, config.budget or RECT_BUDGET)
    write_pgm(image, output)
    sys.stdout.write(f"{output}\n")
    return EXIT_OK


COMMANDS: Dict[CommandEnum, Callable[[RunConfig, BaranskiSystem], int]] = {
    CommandEnum.DIMS: cmd_dims,
    CommandEnum.HAUSDORFF: cmd_hausdorff,
    CommandEnum.BOX: cmd_box,
    CommandEnum.DIAGNOSE: cmd_diagnose,
    CommandEnum.APPROX: cmd_approx,
    CommandEnum.EMPIRICAL: cmd_empirical,
    CommandEnum.RENDER: cmd_render,
}


def execute(config: RunConfig, system: BaranskiSystem) -> int:
    """Despacha o comando; 1 quando alguma verificação interna falha."""
    try:
        return COMMANDS[config.command](config, system)
    except InternalInequalityViolation as e:
        logger.error(f"Verificação interna falhou: {e}", exc_info=True)
        return EXIT_INTERNAL
    except BudgetExceeded as e:
        logger.error(f"Orçamento excedido: {e}")
        return EXIT_VALIDATION


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL, logging.WARNING),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        config, system = parse_config(argv)
    except ConfigError as e:
        sys.stderr.write(f"erro: {e}\n")
        return e.exit_code
    return execute(config, system)
