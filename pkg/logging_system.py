#!/usr/bin/env python3
"""
📝 Logging System
מערכת לוגים למעבדת ההילוכים
"""

import logging
import logging.handlers
from pathlib import Path
from datetime import datetime
import sys
import time
import traceback
from functools import wraps

from colorama import Fore, Style, init as colorama_init

from config_manager import get_config

ROOT_LOGGER = 'anisowalk'


class ColoredFormatter(logging.Formatter):
    """Custom formatter with colors for console output"""

    COLORS = {
        'DEBUG': Fore.CYAN,
        'INFO': Fore.GREEN,
        'WARNING': Fore.YELLOW,
        'ERROR': Fore.RED,
        'CRITICAL': Fore.MAGENTA,
    }

    def format(self, record):
        if hasattr(sys.stdout, 'isatty') and sys.stdout.isatty():
            color = self.COLORS.get(record.levelname)
            if color:
                record = logging.makeLogRecord(record.__dict__)
                record.levelname = f"{color}{record.levelname}{Style.RESET_ALL}"
        return super().format(record)


class LabLogger:
    """
    Logging system for the lab
    Main logger plus specialized rotating files for experiments, the engine,
    errors and timings
    """

    _instance = None
    _initialized = False

    SPECIALIZED = {
        'experiments': 'experiments.log',
        'engine': 'engine.log',
        'errors': 'errors.log',
        'performance': 'performance.log',
    }

    def __new__(cls):
        """Singleton pattern"""
        if cls._instance is None:
            cls._instance = super(LabLogger, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        colorama_init()
        config = get_config()
        self.loggers = {}
        self.log_dir = Path(config.get('logging.dir', 'logs'))
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.log_level = str(config.get('logging.level', 'INFO')).upper()
        self.max_bytes = int(config.get('logging.max_size_mb', 20)) * 1024 * 1024
        self.backup_count = int(config.get('logging.backup_count', 3))
        self.console_output = bool(config.get('logging.console_output', True))

        self.setup_main_logger()
        self.setup_specialized_loggers()

        self._initialized = True

    def _file_handler(self, filename: str) -> logging.Handler:
        handler = logging.handlers.RotatingFileHandler(
            self.log_dir / filename,
            maxBytes=self.max_bytes,
            backupCount=self.backup_count,
            encoding='utf-8'
        )
        handler.setLevel(logging.DEBUG)
        return handler

    def setup_main_logger(self):
        """Setup main application logger"""
        logger = logging.getLogger(ROOT_LOGGER)
        logger.setLevel(getattr(logging, self.log_level, logging.INFO))
        logger.handlers = []

        file_handler = self._file_handler('lab.log')
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s | %(levelname)-8s | %(name)-24s | %(funcName)-20s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))
        logger.addHandler(file_handler)

        if self.console_output:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setLevel(getattr(logging, self.log_level, logging.INFO))
            console_handler.setFormatter(ColoredFormatter(
                '%(asctime)s | %(levelname)-8s | %(message)s',
                datefmt='%H:%M:%S'
            ))
            logger.addHandler(console_handler)

        self.loggers['main'] = logger
        logger.debug("Main logging system initialized")

    def setup_specialized_loggers(self):
        """Specialized loggers write to their own file and also reach the main logger"""
        for name, filename in self.SPECIALIZED.items():
            logger = logging.getLogger(f'{ROOT_LOGGER}.{name}')
            logger.setLevel(logging.DEBUG)
            logger.handlers = []

            file_handler = self._file_handler(filename)
            file_handler.setFormatter(logging.Formatter(
                '%(asctime)s | %(levelname)-8s | %(message)s',
                datefmt='%Y-%m-%d %H:%M:%S'
            ))
            logger.addHandler(file_handler)

            self.loggers[name] = logger

    def get_logger(self, name: str = 'main') -> logging.Logger:
        """Get logger by name"""
        if name in self.loggers:
            return self.loggers[name]
        return self.loggers.get('main', logging.getLogger(ROOT_LOGGER))


# ==================== Global Logger Access ====================

_lab_logger = None


def get_logger(name: str = 'main') -> logging.Logger:
    """Get lab logger instance"""
    global _lab_logger

    if _lab_logger is None or not LabLogger._initialized:
        _lab_logger = LabLogger()

    return _lab_logger.get_logger(name)


def get_experiment_logger() -> logging.Logger:
    return get_logger('experiments')


def get_error_logger() -> logging.Logger:
    return get_logger('errors')


# ==================== Decorators ====================

def log_function_call(logger_name: str = 'main'):
    """Decorator to log function calls"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger = get_logger(logger_name)
            logger.debug(f"📞 Calling {func.__name__}")
            result = func(*args, **kwargs)
            logger.debug(f"✅ {func.__name__} completed")
            return result
        return wrapper
    return decorator


def log_errors(logger_name: str = 'errors', reraise: bool = True):
    """Decorator to log errors with traceback"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                logger = get_logger(logger_name)
                logger.error(f"❌ Error in {func.__name__}: {e}")
                logger.error(traceback.format_exc())
                if reraise:
                    raise
                return None
        return wrapper
    return decorator


def log_performance(func):
    """Decorator to log wall time"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        logger = get_logger('performance')
        start_time = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            elapsed = time.perf_counter() - start_time
            logger.error(f"⏱️  {func.__name__} failed after {elapsed:.3f}s: {e}")
            raise
        elapsed = time.perf_counter() - start_time
        logger.info(f"⏱️  {func.__name__} completed in {elapsed:.3f}s")
        return result
    return wrapper


# ==================== Log Utilities ====================

def log_separator(logger_name: str = 'main', char: str = '=', length: int = 72):
    get_logger(logger_name).info(char * length)


def log_section(title: str, logger_name: str = 'main'):
    """Log a section header"""
    logger = get_logger(logger_name)
    log_separator(logger_name)
    logger.info(f"  {title}")
    log_separator(logger_name)


def log_outcome(name: str, passed: bool, statistic: float, target: float, tolerance: float):
    """One line per verified experiment in experiments.log"""
    logger = get_experiment_logger()
    status = "PASS" if passed else "FAIL"
    message = (f"VERIFY | {status} | {name} | statistic={statistic:.6g} "
               f"target={target:.6g} tolerance={tolerance:.6g}")
    if passed:
        logger.info(f"✅ {message}")
    else:
        logger.warning(f"❌ {message}")


def log_startup_info(command: str):
    """Log application startup information"""
    logger = get_logger('main')
    log_section(f"🚀 Anisotropic Walk Lab | {command}")
    logger.info(f"Timestamp: {datetime.now().isoformat()}")
    logger.info(f"Python: {sys.version.split()[0]}")
    logger.info(f"Log Level: {logging.getLevelName(logger.level)}")
    log_separator()
