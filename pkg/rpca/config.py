import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError
from typing import Literal

from rpca.errors import ContractViolation

# Load environment variables
load_dotenv()

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

_ENV_VARS = {
    "threads": "RPCA_THREADS",
    "log_level": "RPCA_LOG_LEVEL",
    "small_svd_cap": "RPCA_SVD_CAP",
}


class Settings(BaseModel):
    threads: int = Field(default=1, ge=1)
    log_level: LogLevel = "WARNING"
    small_svd_cap: int = Field(default=4096, ge=1)


def get_settings() -> Settings:
    """Read settings from the environment (and any .env file)."""
    values = {}
    for field, var in _ENV_VARS.items():
        raw = os.environ.get(var)
        if raw is not None and raw.strip():
            values[field] = raw.strip().upper() if field == "log_level" else raw.strip()
    try:
        return Settings(**values)
    except ValidationError as e:
        bad = ", ".join(_ENV_VARS[err["loc"][0]] for err in e.errors() if err["loc"])
        raise ContractViolation(f"invalid environment setting ({bad}): {e.errors()[0]['msg']}") from e


def setup_logger(debug_level: str = "WARNING") -> logging.Logger:
    """Set up the package logger with the specified debug level."""
    logging_level = getattr(logging, debug_level.upper())

    logger = logging.getLogger("rpca")
    logger.setLevel(logging_level)

    # Clear any existing handlers to avoid duplicates
    if logger.hasHandlers():
        logger.handlers.clear()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging_level)
    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    return logger
