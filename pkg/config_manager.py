#!/usr/bin/env python3
"""
📋 Configuration Manager
מנהל תצורה מרכזי לכל הפרויקט
"""

import yaml
import os
from pathlib import Path
from typing import Any, Dict, Optional
import logging
from copy import deepcopy

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

ENV_PREFIX = "AW_"


class ConfigError(ValueError):
    """Raised when the configuration is missing required sections or keys"""


class ConfigManager:
    """
    Centralized configuration management
    Loads from config.yaml and allows environment variable overrides
    """

    _instance = None
    _config = None

    def __new__(cls, config_path: Optional[str] = None):
        """Singleton pattern - only one config instance"""
        if cls._instance is None:
            cls._instance = super(ConfigManager, cls).__new__(cls)
        return cls._instance

    def __init__(self, config_path: Optional[str] = None):
        """Initialize configuration manager"""
        if self._config is not None:
            return  # Already initialized

        if config_path is None:
            config_path = Path(__file__).parent / "config.yaml"

        load_dotenv()
        self.config_path = Path(config_path)
        self._config = self._load_config()
        self._apply_env_overrides()

    def _load_config(self) -> Dict:
        """Load configuration from YAML file"""
        try:
            if not self.config_path.exists():
                logger.warning(f"Config file not found: {self.config_path}")
                return self._get_default_config()

            with open(self.config_path, 'r', encoding='utf-8') as f:
                config = yaml.safe_load(f) or {}

            logger.info(f"✅ Configuration loaded from {self.config_path}")
            return self._merge_defaults(config)

        except yaml.YAMLError as e:
            logger.error(f"❌ Failed to parse config: {e}")
            return self._get_default_config()

    def _merge_defaults(self, config: Dict) -> Dict:
        """Fill sections missing from the file with their defaults"""
        merged = self._get_default_config()
        for section, values in config.items():
            if isinstance(values, dict) and isinstance(merged.get(section), dict):
                merged[section].update(values)
            else:
                merged[section] = values
        return merged

    def _apply_env_overrides(self):
        """Apply environment variable overrides"""
        # Format: AW_<SECTION>_<KEY>, e.g. AW_OUTPUT_DIR=/tmp/lab
        # or AW_ENGINE_MEMORY_BUDGET_MB=512 (the key keeps its underscores)
        for key, value in os.environ.items():
            if not key.startswith(ENV_PREFIX):
                continue

            parts = key[len(ENV_PREFIX):].lower().split('_')
            if len(parts) < 2:
                continue

            section, final_key = parts[0], '_'.join(parts[1:])
            self._config.setdefault(section, {})
            self._config[section][final_key] = self._convert_type(value)

            logger.info(f"✅ Config override from env: {key}")

    def _convert_type(self, value: str) -> Any:
        """Convert string value to appropriate type"""
        if value.lower() in ('true', 'yes'):
            return True
        if value.lower() in ('false', 'no'):
            return False

        try:
            return int(value)
        except ValueError:
            pass

        try:
            return float(value)
        except ValueError:
            pass

        return value

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value by dot-notation key

        Examples:
            config.get('engine.memory_budget_mb')  # Returns 1024
            config.get('classifier.margin')        # Returns 0.1
            config.get('missing.key', 0)           # Returns 0
        """
        keys = key.split('.')
        value = self._config

        for k in keys:
            if isinstance(value, dict):
                value = value.get(k)
                if value is None:
                    return default
            else:
                return default

        return value

    def set(self, key: str, value: Any):
        """
        Set configuration value by dot-notation key
        Note: This only affects runtime config, not the file
        """
        keys = key.split('.')
        config = self._config

        for k in keys[:-1]:
            if k not in config or not isinstance(config[k], dict):
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value
        logger.debug(f"Config updated: {key} = {value}")

    def get_section(self, section: str) -> Dict:
        """Get entire configuration section"""
        return deepcopy(self.get(section, {}))

    def reload(self):
        """Reload configuration from file"""
        self._config = self._load_config()
        self._apply_env_overrides()
        logger.info("✅ Configuration reloaded")

    def save(self, path: Optional[str] = None):
        """Save current configuration to file"""
        save_path = Path(path) if path else self.config_path

        with open(save_path, 'w', encoding='utf-8') as f:
            yaml.dump(self._config, f, default_flow_style=False, allow_unicode=True)

        logger.info(f"✅ Configuration saved to {save_path}")

    def _get_default_config(self) -> Dict:
        """Return default configuration if file not found"""
        return {
            'profile': {
                'kind': 'comb'
            },
            'experiment': {
                'quick': False
            },
            'output': {
                'dir': 'lab_output',
                'format': 'json',
                'plot_data': True
            },
            'engine': {
                'memory_budget_mb': 1024,
                'chunk_size': 1 << 18,
                'short_walk_limit': 1024,
                'block_size': 4096
            },
            'classifier': {
                'k_max': 100000,
                'margin': 0.1,
                'max_residual': 0.05
            },
            'stats': {
                'chi_square_level': 0.001,
                'min_expected_count': 5.0
            },
            'parallel': {
                'jobs': None,
                'progress': True
            },
            'logging': {
                'level': 'INFO',
                'dir': 'logs',
                'max_size_mb': 20,
                'backup_count': 3,
                'console_output': True
            }
        }

    def validate(self) -> bool:
        """Validate configuration has required fields"""
        required_sections = ['profile', 'experiment', 'output', 'engine', 'logging']

        for section in required_sections:
            if section not in self._config:
                logger.error(f"❌ Missing required config section: {section}")
                return False

        if 'kind' not in self._config.get('profile', {}):
            logger.error("❌ Profile section needs a 'kind'")
            return False

        budget = self._config['engine'].get('memory_budget_mb')
        if not isinstance(budget, (int, float)) or budget <= 0:
            logger.error("❌ engine.memory_budget_mb must be positive")
            return False

        logger.debug("Configuration validation passed")
        return True

    def to_dict(self) -> Dict:
        """Return configuration as dictionary"""
        return deepcopy(self._config)

    def __repr__(self) -> str:
        return f"ConfigManager(config_path={self.config_path})"


# ==================== Helper Functions ====================

def get_config() -> ConfigManager:
    """Get global configuration instance"""
    return ConfigManager()


def reset_config():
    """Drop the singleton so the next get_config() re-reads the file"""
    ConfigManager._instance = None
    ConfigManager._config = None


# ==================== Quick Access Functions ====================

def get_profile_config() -> Dict:
    """Get the profile section"""
    return get_config().get_section('profile')


def get_engine_config() -> Dict:
    """Get engine limits (memory budget, chunking)"""
    return get_config().get_section('engine')


def get_output_dir() -> Path:
    """Directory where outcomes, CSV and plot data are written"""
    return Path(get_config().get('output.dir', 'lab_output'))


def get_jobs() -> int:
    """Worker count; falls back to the number of available cores"""
    jobs = get_config().get('parallel.jobs')
    if not jobs:
        jobs = os.cpu_count() or 1
    return max(1, int(jobs))
