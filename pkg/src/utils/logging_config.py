import logging
from pathlib import Path


def setup_logging(log_file: str | Path | None = None, level: int = logging.INFO):
    """
    Configures the root logger for scripts and experiment runs.

    Messages go to the console and, when `log_file` is given, to that file as
    well. The parent directory of the log file is created if needed.

    Args:
        log_file (str | Path | None): Optional path of the log file.
        level (int): Logging level for the root logger.

    Returns:
        logging.Logger: The logger of this module.
    """
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if log_file is not None:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.insert(0, logging.FileHandler(log_file))

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )
    return logging.getLogger(__name__)
