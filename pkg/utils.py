"""
Utility functions shared by the dihedral pattern toolkit
"""

import os
import logging
import stat
from typing import Tuple, List, Optional, TYPE_CHECKING

if TYPE_CHECKING:
    from config import Settings


LOGGER_NAME = 'dihedral'


class UsageError(ValueError):
    """Invalid input, unknown name or violated precondition (CLI exit code 2)"""
    pass


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a valid result (CLI exit code 3)"""
    pass


def get_logger(module: str) -> logging.Logger:
    """Child logger of the package logger, e.g. 'dihedral.turing'"""
    return logging.getLogger(f'{LOGGER_NAME}.{module}')


def setup_logging(output_dir: str, debug: bool = False) -> logging.Logger:
    """Setup logging to both console and file"""
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG if debug else logging.INFO)

    # Clear any existing handlers
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()

    log_file = os.path.join(output_dir, 'analysis.log')

    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    simple_formatter = logging.Formatter('%(levelname)s - %(message)s')

    file_handler = logging.FileHandler(log_file, mode='w', encoding='utf-8')
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(detailed_formatter)
    logger.addHandler(file_handler)

    # Owner only
    try:
        os.chmod(log_file, stat.S_IRUSR | stat.S_IWUSR)
    except OSError:
        pass

    if debug:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.DEBUG)
        console_handler.setFormatter(simple_formatter)
        logger.addHandler(console_handler)

    logger.info("=" * 60)
    logger.info("Dihedral pattern analysis - Session Started")
    logger.info(f"Log file: {log_file}")
    logger.info(f"Debug mode: {debug}")
    logger.info("=" * 60)

    return logger


def validate_configuration(settings: 'Settings',
                           output_dir: Optional[str] = None) -> Tuple[List[str], List[str]]:
    """Validate environment settings and the output location"""
    errors = []
    warnings = []

    if settings.threads < 1:
        errors.append(f"DIHEDRAL_THREADS must be a positive integer (got {settings.threads}).")
    elif settings.threads > (os.cpu_count() or 1):
        warnings.append(f"DIHEDRAL_THREADS={settings.threads} exceeds the {os.cpu_count()} available CPUs.")

    if settings.seed_box <= 0:
        errors.append(f"DIHEDRAL_SEED_BOX must be positive (got {settings.seed_box}).")

    if settings.ngrid < 64:
        errors.append(f"DIHEDRAL_NGRID must be at least 64 (got {settings.ngrid}).")

    if settings.dt <= 0:
        errors.append(f"DIHEDRAL_DT must be positive (got {settings.dt}).")

    if not os.path.exists('.env'):
        warnings.append(".env file not found. Using environment variables and defaults.")

    target = output_dir or settings.output_dir
    parent = os.path.dirname(os.path.abspath(target))
    checked = target if os.path.isdir(target) else parent
    if os.path.isdir(checked) and not os.access(checked, os.W_OK):
        errors.append(f"Output location '{target}' is not writable.")

    return errors, warnings
