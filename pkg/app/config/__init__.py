# Directory: fedgw-sim/app/config/__init__.py

"""
Config Module - Process Settings and Scenario Files.

This module contains:
- settings.py: Environment variable management
- scenario_loader.py: Scenario and sweep file loading with diagnostics
"""

from .settings import get_settings, Settings
from .scenario_loader import ScenarioError, dump_scenario, load_sweep_spec, resolve_scenario_path, validate_and_load

__all__ = [
    'get_settings',
    'Settings',
    'ScenarioError',
    'dump_scenario',
    'load_sweep_spec',
    'resolve_scenario_path',
    'validate_and_load',
]
