"""
Base class for the calculators and processors.
Keeps the console reporting conventions in one place.
"""

from typing import Any, Dict, Optional

from mpmath import mp

from .data_models import DEFAULT_DIGITS, MIN_DIGITS
from .exceptions import InvalidConfigError


class BaseCalculator:
    """
    Shared plumbing for classes that run multi-step computations.
    Subclasses report progress through the print helpers below.
    """

    def __init__(self, digits: int = DEFAULT_DIGITS, debug: bool = False):
        if digits < MIN_DIGITS:
            raise InvalidConfigError(f"digits must be >= {MIN_DIGITS} (got {digits})")
        self.digits = digits
        self.debug = debug

    def _banner(self, title: str):
        """Open a step sequence."""
        if self.debug:
            print(f"\n{'='*60}")
            print(title)
            print(f"{'='*60}")

    def _step_print(self, number: int, message: str):
        if self.debug:
            print(f"Step {number}: {message}")

    def _debug_print(self, message: str):
        """Only shown with --debug, like every helper except _error_print."""
        if self.debug:
            print(f"[DEBUG] {message}")

    def _info_print(self, message: str):
        if self.debug:
            print(f"[INFO] {message}")

    def _warning_print(self, message: str):
        if self.debug:
            print(f"[WARN] {message}")

    def _error_print(self, message: str):
        """Print error message."""
        print(f"[ERROR] {message}")

    def _success_print(self, message: str):
        if self.debug:
            print(f"[OK] {message}")

    def _format(self, value, digits: Optional[int] = None) -> str:
        return mp.nstr(value, digits or min(self.digits, 15))

    def _print_report(self, title: str, rows: Dict[str, Any]):
        """Closing summary, one aligned line per entry."""
        if not self.debug:
            return
        print(f"\n{'-'*60}")
        print(title)
        width = max((len(k) for k in rows), default=0)
        for key, value in rows.items():
            print(f"  {key.ljust(width)} : {value}")
        print(f"{'-'*60}")
