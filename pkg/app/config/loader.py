import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from app.exceptions import ConfigError
from app.models.config_models import PipelineConfig

logger = logging.getLogger(__name__)


def load_pipeline_config(
    path: Path,
    out_dir: Optional[Path] = None,
    concurrency: Optional[int] = None,
    strict_parse: Optional[bool] = None,
) -> PipelineConfig:
    """
    Loads the YAML pipeline config and applies command-line overrides.

    Relative paths inside the file resolve against the file's directory; an `out_dir`
    override is taken as given.

    Raises:
        ConfigError: unreadable file, invalid YAML, a failed validation or an output
            directory that cannot be written.
    """
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e.strerror or e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Config {path} is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must be a YAML mapping")

    apply_overrides(data, out_dir=out_dir, concurrency=concurrency, strict_parse=strict_parse)
    try:
        config = PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid config {path}:\n{e}") from e

    config = config.resolve_paths(path.parent)
    if out_dir is not None:
        config = config.model_copy(update={"output": config.output.model_copy(update={"out_dir": Path(out_dir)})})
    check_out_dir(config.output.out_dir)
    logger.debug("Loaded config %s (run id %s)", path, config.run_id)
    return config


def apply_overrides(
    data: Dict[str, Any],
    out_dir: Optional[Path] = None,
    concurrency: Optional[int] = None,
    strict_parse: Optional[bool] = None,
) -> None:
    """Merges flag values into the raw config mapping so they pass through the same validation."""
    screening = data.get("screening")
    if screening is None:
        screening = data["screening"] = {}
    if concurrency is not None and isinstance(screening, dict):
        screening["concurrency"] = concurrency
    if strict_parse is not None and isinstance(screening, dict):
        screening["strict_parse"] = strict_parse
    if out_dir is not None:
        output = data.setdefault("output", {})
        if isinstance(output, dict):
            output["out_dir"] = str(out_dir)


def check_out_dir(out_dir: Path) -> None:
    """
    Fails unless `out_dir` is a writable directory or can be created as one.

    Nothing is created here; the nearest existing ancestor must be a writable directory.
    """
    existing = out_dir
    while not existing.exists() and existing.parent != existing:
        existing = existing.parent
    if not existing.is_dir():
        raise ConfigError(f"Output directory {out_dir} cannot be created: {existing} is not a directory")
    if not os.access(existing, os.W_OK | os.X_OK):
        raise ConfigError(f"Output directory {out_dir} is not writable ({existing})")
