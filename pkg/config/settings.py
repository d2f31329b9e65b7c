# config/settings.py
"""Main application settings and environment configuration."""

import os
import logging
from typing import Optional, List
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)


class SettingsError(ValueError):
    """Invalid environment settings."""
    pass


class Settings:
    """Application settings loaded from environment variables."""

    # Environment Configuration
    ENVIRONMENT: str = os.getenv("ENVIRONMENT", "development")

    # Application Paths
    BASE_DIR: Path = Path(__file__).parent.parent
    OUTPUT_DIR: Path = Path(os.getenv("OUTPUT_DIR", str(BASE_DIR / "runs")))

    # Logging Configuration
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE: Optional[str] = os.getenv("LOG_FILE")
    LOG_JSON: bool = os.getenv("LOG_JSON", "False").lower() == "true"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_MAX_BYTES: int = int(os.getenv("LOG_MAX_BYTES", "10485760"))  # 10MB
    LOG_BACKUP_COUNT: int = int(os.getenv("LOG_BACKUP_COUNT", "5"))

    # Experiment Execution
    MAX_WORKERS: int = int(os.getenv("MAX_WORKERS", "4"))
    DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", "0"))

    @classmethod
    def validate(cls) -> List[str]:
        """Validate all settings and return list of errors."""
        errors = []

        if cls.MAX_WORKERS < 1:
            errors.append("MAX_WORKERS must be at least 1")

        if cls.DEFAULT_SEED < 0:
            errors.append("DEFAULT_SEED cannot be negative")

        if cls.LOG_MAX_BYTES < 1024:
            errors.append("LOG_MAX_BYTES must be at least 1024")

        # Validate log level
        valid_log_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if cls.LOG_LEVEL.upper() not in valid_log_levels:
            errors.append(f"LOG_LEVEL must be one of: {valid_log_levels}")

        return errors

    @classmethod
    def create_directories(cls):
        """Create required directories if they don't exist."""
        try:
            cls.OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
            if cls.LOG_FILE:
                Path(cls.LOG_FILE).parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"Failed to create output directories: {e}")

    @classmethod
    def is_development(cls) -> bool:
        """Check if running in development environment."""
        return cls.ENVIRONMENT.lower() in ["development", "dev", "local"]

    @classmethod
    def setup_logging(cls, level: Optional[str] = None):
        """Setup application logging configuration."""
        cls.create_directories()

        # Imported here so that config stays importable without the logging extras
        from utils.logger import StructuredFormatter

        numeric_level = getattr(logging, (level or cls.LOG_LEVEL).upper(), logging.INFO)

        if cls.LOG_JSON:
            formatter = StructuredFormatter()
        else:
            formatter = logging.Formatter(cls.LOG_FORMAT)

        # Console handler
        console_handler = logging.StreamHandler()
        console_handler.setLevel(numeric_level)
        console_handler.setFormatter(formatter)

        root_logger = logging.getLogger()
        root_logger.setLevel(numeric_level)
        root_logger.handlers.clear()  # Clear existing handlers
        root_logger.addHandler(console_handler)

        # File handler (with rotation), structured lines only
        if cls.LOG_FILE:
            from logging.handlers import RotatingFileHandler
            file_handler = RotatingFileHandler(
                cls.LOG_FILE,
                maxBytes=cls.LOG_MAX_BYTES,
                backupCount=cls.LOG_BACKUP_COUNT
            )
            file_handler.setLevel(numeric_level)
            file_handler.setFormatter(StructuredFormatter())
            root_logger.addHandler(file_handler)

        logger.debug(f"Logging configured - Level: {logging.getLevelName(numeric_level)}, File: {cls.LOG_FILE}")


def validate_settings():
    """Validate settings, raising in non-development environments."""
    errors = Settings.validate()
    if errors:
        error_message = "Configuration validation failed:\n" + "\n".join(f"- {error}" for error in errors)
        logger.error(error_message)
        if not Settings.is_development():
            raise SettingsError(error_message)
        logger.warning("Running with invalid configuration (development environment)")

