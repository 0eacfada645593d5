# src/config/__init__.py
"""
Configuration loading for the McKean-Vlasov control toolkit.

Exposes `load_config` with its defaults, validation and hashing helpers.
"""

from .config import DEFAULT_CONFIG, OUTPUT_DIR_ENV, load_config, validate_config, config_hash, config_to_dict

__all__ = ["DEFAULT_CONFIG", "OUTPUT_DIR_ENV", "load_config", "validate_config", "config_hash", "config_to_dict"]
