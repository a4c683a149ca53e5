"""
Processors module for command orchestration.
Contains the command processor and the on-disk table cache.
"""

from .moment_processor import MomentProcessor
from .table_cache import TableCache, table_to_json, table_from_json

__all__ = [
    'MomentProcessor',
    'TableCache',
    'table_to_json',
    'table_from_json',
]
