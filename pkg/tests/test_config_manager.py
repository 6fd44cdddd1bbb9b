#!/usr/bin/env python3
"""
🧪 Unit Tests for Configuration Manager
"""

import unittest
import sys
import os
from pathlib import Path
import tempfile
import yaml

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config_manager import (
    ConfigManager, get_config, get_jobs, get_output_dir, get_profile_config, reset_config,
)
from profiles import ProfileSpec, profile_from_config


class TestConfigManager(unittest.TestCase):
    """Test cases for ConfigManager"""

    def setUp(self):
        """Setup test fixtures"""
        self.temp_dir = tempfile.mkdtemp()
        self.config_path = Path(self.temp_dir) / "test_config.yaml"

        test_config = {
            'profile': {
                'kind': 'periodic',
                'values': ['1/4', '1/2']
            },
            'experiment': {
                'quick': True
            },
            'stats': {
                'chi_square_level': 0.01
            },
            'output': {
                'dir': 'test_output'
            },
            'engine': {
                'memory_budget_mb': 256
            },
            'logging': {
                'level': 'INFO'
            }
        }

        with open(self.config_path, 'w') as f:
            yaml.dump(test_config, f)

        reset_config()
        self.config = ConfigManager(self.config_path)

    def tearDown(self):
        """Cleanup after tests"""
        if self.config_path.exists():
            self.config_path.unlink()
        reset_config()

    def test_singleton_pattern(self):
        """Test that ConfigManager uses singleton pattern"""
        config1 = ConfigManager(self.config_path)
        config2 = ConfigManager(self.config_path)

        self.assertIs(config1, config2, "ConfigManager should be singleton")
        self.assertIs(get_config(), config1)

    def test_load_config(self):
        """Test loading configuration from file"""
        self.assertIs(self.config.get('experiment.quick'), True)
        self.assertEqual(self.config.get('stats.chi_square_level'), 0.01)
        self.assertEqual(self.config.get('engine.memory_budget_mb'), 256)

    def test_missing_keys_filled_from_defaults(self):
        """Sections and keys absent from the file keep their defaults"""
        self.assertEqual(self.config.get('engine.block_size'), 4096)
        self.assertEqual(self.config.get('classifier.k_max'), 100000)
        self.assertEqual(self.config.get('logging.backup_count'), 3)
        self.assertEqual(self.config.get('stats.min_expected_count'), 5.0)

    def test_get_with_default(self):
        """Test getting value with default fallback"""
        self.assertEqual(self.config.get('stats.chi_square_level', 0.5), 0.01)
        self.assertEqual(self.config.get('missing.key', 'DEFAULT'), 'DEFAULT')

    def test_set_value(self):
        """Test setting configuration values"""
        self.config.set('parallel.jobs', 3)
        self.assertEqual(self.config.get('parallel.jobs'), 3)
        self.assertEqual(get_jobs(), 3)

    def test_get_section(self):
        """Test getting entire configuration section"""
        profile = self.config.get_section('profile')
        self.assertIsInstance(profile, dict)
        self.assertEqual(profile['kind'], 'periodic')

        profile['kind'] = 'comb'
        self.assertEqual(self.config.get('profile.kind'), 'periodic', "get_section returns a copy")

    def test_profile_section_builds_profile(self):
        """The profile section feeds profile_from_config"""
        prof = profile_from_config(get_profile_config())
        self.assertEqual(prof, ProfileSpec.periodic(['1/4', '1/2']))

    def test_validation(self):
        """Test configuration validation"""
        self.assertTrue(self.config.validate(), "Test config should be valid")

    def test_validation_missing_section(self):
        """Test validation fails with missing required section"""
        del self.config._config['profile']
        self.assertFalse(self.config.validate(), "Should fail validation with missing section")

    def test_validation_bad_budget(self):
        self.config.set('engine.memory_budget_mb', -5)
        self.assertFalse(self.config.validate())

    def test_env_override(self):
        """Test environment variable override"""
        os.environ['AW_OUTPUT_DIR'] = '/tmp/aw_lab_out'
        os.environ['AW_ENGINE_MEMORY_BUDGET_MB'] = '512'
        try:
            reset_config()
            config = ConfigManager(self.config_path)
            self.assertEqual(config.get('output.dir'), '/tmp/aw_lab_out')
            self.assertEqual(config.get('engine.memory_budget_mb'), 512)
            self.assertEqual(get_output_dir(), Path('/tmp/aw_lab_out'))
        finally:
            del os.environ['AW_OUTPUT_DIR']
            del os.environ['AW_ENGINE_MEMORY_BUDGET_MB']

    def test_type_conversion(self):
        """Test automatic type conversion"""
        self.assertEqual(self.config._convert_type('true'), True)
        self.assertEqual(self.config._convert_type('false'), False)
        self.assertEqual(self.config._convert_type('123'), 123)
        self.assertEqual(self.config._convert_type('1.23'), 1.23)
        self.assertEqual(self.config._convert_type('hello'), 'hello')

    def test_save_and_reload(self):
        self.config.set('classifier.k_max', 2_000)
        self.config.save()
        self.config.set('classifier.k_max', 0)
        self.config.reload()
        self.assertEqual(self.config.get('classifier.k_max'), 2_000)

    def test_to_dict(self):
        """Test converting config to dictionary"""
        config_dict = self.config.to_dict()
        self.assertIsInstance(config_dict, dict)
        self.assertIn('profile', config_dict)
        self.assertIn('engine', config_dict)


class TestDefaults(unittest.TestCase):
    """Missing file falls back to built-in defaults"""

    def setUp(self):
        reset_config()

    def tearDown(self):
        reset_config()

    def test_missing_file(self):
        config = ConfigManager(Path(tempfile.mkdtemp()) / "absent.yaml")
        self.assertEqual(config.get('profile.kind'), 'comb')
        self.assertEqual(config.get('output.format'), 'json')
        self.assertTrue(config.validate())

    def test_jobs_default_to_cores(self):
        config = ConfigManager(Path(tempfile.mkdtemp()) / "absent.yaml")
        config.set('parallel.jobs', None)
        self.assertEqual(get_jobs(), max(1, os.cpu_count() or 1))


if __name__ == "__main__":
    unittest.main()
