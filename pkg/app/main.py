"""Command-line interface for the systematic-review screening pipeline."""

import asyncio
import logging
from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console
from rich.markup import escape
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from app.config.loader import load_pipeline_config
from app.config.logging_config import configure_logging
from app.config.settings import get_settings
from app.exceptions import ConfigError, IngestError, MissingCredentialError, SlrScreenError
from app.models.config_models import PipelineConfig
from app.models.record_models import ArticleRecord, DedupReport
from app.models.report_models import SummaryReport
from app.services.llm_service import Assessor, ChatCompletionsClient, FakeAssessor
from app.services.pipeline_service import PipelineService, ScreenResult
from app.services.report_service import ReportService

EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_TRANSPORT_FAILURES = 4
EXIT_MISSING_CREDENTIAL = 5

app = typer.Typer(
    name="slr-screen",
    help="Merge, deduplicate and LLM-screen bibliographic exports for a systematic literature review.",
    no_args_is_help=True,
    add_completion=False,
)
console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger(__name__)

CONFIG_OPTION = typer.Option(..., "--config", "-c", help="Pipeline config file (YAML)")
OUT_DIR_OPTION = typer.Option(None, "--out-dir", "-o", help="Override the output directory")
FAKE_OPTION = typer.Option(None, "--fake-assessor", help="Rules file for the offline fake assessor")
CONCURRENCY_OPTION = typer.Option(None, "--concurrency", min=1, help="Requests in flight at once")
STRICT_OPTION = typer.Option(False, "--strict-parse", help="Match reply keys exactly as prescribed")
RESUME_OPTION = typer.Option(True, "--resume/--no-resume", help="Replay outcomes already in the run journal")
RETRY_FAILED_OPTION = typer.Option(False, "--retry-failed", help="Re-send records whose last attempt failed in transport")


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")) -> None:
    configure_logging("DEBUG" if verbose else get_settings().log_level, console=err_console)


def _fail(code: int, message: str) -> typer.Exit:
    err_console.print(f"[red]Error:[/red] {escape(message)}", highlight=False)
    return typer.Exit(code)


def _load_config(
    path: Path,
    out_dir: Optional[Path] = None,
    concurrency: Optional[int] = None,
    strict_parse: bool = False,
) -> PipelineConfig:
    try:
        return load_pipeline_config(path, out_dir=out_dir, concurrency=concurrency, strict_parse=strict_parse or None)
    except ConfigError as e:
        raise _fail(EXIT_CONFIG, str(e))


def _build_transport(config: PipelineConfig, fake_assessor: Optional[Path]) -> Assessor:
    if fake_assessor is not None:
        logger.info("Screening offline with fake assessor rules %s", fake_assessor)
        try:
            return FakeAssessor.from_file(fake_assessor)
        except ConfigError as e:
            raise _fail(EXIT_CONFIG, str(e))
    api_key = get_settings().api_key
    if api_key is None or not api_key.get_secret_value().strip():
        raise _fail(EXIT_MISSING_CREDENTIAL, str(MissingCredentialError("SLR_SCREEN_API_KEY is not set")))
    return ChatCompletionsClient(config.screening, api_key.get_secret_value())


def _print_lines(lines: List[str]) -> None:
    for line in lines:
        console.print(line, markup=False, highlight=False, soft_wrap=True)


async def _screen(
    pipeline: PipelineService,
    transport: Assessor,
    resume: bool,
    retry_failed: bool,
    records: Optional[List[ArticleRecord]] = None,
    dedup_report: Optional[DedupReport] = None,
) -> ScreenResult:
    progress = Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=err_console,
        transient=True,
    )
    with progress:
        task = progress.add_task("Screening", total=len(records) if records is not None else None)
        try:
            return await pipeline.run_screen(
                transport,
                resume=resume,
                retry_failed=retry_failed,
                on_outcome=lambda _: progress.advance(task),
                records=records,
                dedup_report=dedup_report,
            )
        finally:
            await transport.aclose()


def _finish_screen(summary: SummaryReport, config: PipelineConfig) -> None:
    _print_lines(ReportService().render_summary(summary).split("\n"))
    err_console.print(f"[green]Results:[/green] {config.output.results}", highlight=False)
    if summary.transport_failed:
        raise _fail(
            EXIT_TRANSPORT_FAILURES,
            f"{summary.transport_failed} record(s) failed in transport; rerun to retry with --retry-failed",
        )


@app.command()
def dedup(config: Path = CONFIG_OPTION, out_dir: Optional[Path] = OUT_DIR_OPTION) -> None:
    """Stage one: merge the input files, drop incomplete records and duplicates."""
    pipeline_config = _load_config(config, out_dir)
    try:
        result = PipelineService(pipeline_config).run_dedup()
    except IngestError as e:
        raise _fail(EXIT_INGEST, str(e))
    except SlrScreenError as e:
        raise _fail(EXIT_ERROR, str(e))

    report = result.report
    _print_lines(
        ReportService.render_stage_one_lines(report.total_processed, report.removed_duplicates, report.removed_empty)
    )
    err_console.print(f"[green]Cleaned records:[/green] {pipeline_config.output.cleaned_records}", highlight=False)


@app.command()
def screen(
    config: Path = CONFIG_OPTION,
    out_dir: Optional[Path] = OUT_DIR_OPTION,
    fake_assessor: Optional[Path] = FAKE_OPTION,
    concurrency: Optional[int] = CONCURRENCY_OPTION,
    strict_parse: bool = STRICT_OPTION,
    resume: bool = RESUME_OPTION,
    retry_failed: bool = RETRY_FAILED_OPTION,
) -> None:
    """Stages two and three: screen the cleaned records and write the results table and summary."""
    pipeline_config = _load_config(config, out_dir, concurrency, strict_parse)
    transport = _build_transport(pipeline_config, fake_assessor)
    pipeline = PipelineService(pipeline_config)
    try:
        result = asyncio.run(_screen(pipeline, transport, resume, retry_failed))
    except IngestError as e:
        raise _fail(EXIT_INGEST, str(e))
    except SlrScreenError as e:
        raise _fail(EXIT_ERROR, str(e))
    _finish_screen(result.summary, pipeline_config)


@app.command()
def run(
    config: Path = CONFIG_OPTION,
    out_dir: Optional[Path] = OUT_DIR_OPTION,
    fake_assessor: Optional[Path] = FAKE_OPTION,
    concurrency: Optional[int] = CONCURRENCY_OPTION,
    strict_parse: bool = STRICT_OPTION,
    resume: bool = RESUME_OPTION,
    retry_failed: bool = RETRY_FAILED_OPTION,
) -> None:
    """All stages end to end: dedup, screen, results."""
    pipeline_config = _load_config(config, out_dir, concurrency, strict_parse)
    transport = _build_transport(pipeline_config, fake_assessor)
    pipeline = PipelineService(pipeline_config)
    try:
        stage_one = pipeline.run_dedup()
        result = asyncio.run(
            _screen(pipeline, transport, resume, retry_failed, records=stage_one.kept, dedup_report=stage_one.report)
        )
    except IngestError as e:
        raise _fail(EXIT_INGEST, str(e))
    except SlrScreenError as e:
        raise _fail(EXIT_ERROR, str(e))
    _finish_screen(result.summary, pipeline_config)


@app.command("validate-config")
def validate_config(config: Path = CONFIG_OPTION) -> None:
    """Validate a config file without reading inputs or writing anything."""
    pipeline_config = _load_config(config)

    table = Table(title=f"Run {pipeline_config.run_id}")
    table.add_column("Source")
    table.add_column("File")
    table.add_column("Exists")
    for item in pipeline_config.inputs:
        table.add_row(item.source, str(item.path), "yes" if item.path.exists() else "[red]no[/red]")
    console.print(table)
    screening = pipeline_config.screening
    console.print(
        f"Model {screening.model_name} at {screening.endpoint_url}, concurrency {screening.concurrency}, "
        f"{screening.rate_limit:g} requests/min, {len(pipeline_config.criteria.items)} criteria",
        highlight=False,
    )
    console.print("[green]Config OK[/green]")


@app.command("re-parse")
def re_parse(
    config: Path = CONFIG_OPTION,
    out_dir: Optional[Path] = OUT_DIR_OPTION,
    strict_parse: bool = STRICT_OPTION,
) -> None:
    """Re-run the parser over the journal's stored replies and rewrite the outputs, offline."""
    pipeline_config = _load_config(config, out_dir, strict_parse=strict_parse)
    try:
        result = PipelineService(pipeline_config).reparse()
    except IngestError as e:
        raise _fail(EXIT_INGEST, str(e))
    except SlrScreenError as e:
        raise _fail(EXIT_ERROR, str(e))
    _print_lines(ReportService().render_summary(result.summary).split("\n"))


if __name__ == "__main__":
    app()
