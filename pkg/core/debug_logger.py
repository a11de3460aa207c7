"""Centralized debug logging system for the deformation workbench

Logging is switched on globally or per category. Everything goes to stderr,
so verification reports on stdout stay clean. Checks run in worker threads,
so each line is written whole under a lock and tagged with the worker it
came from.

Usage:
    from core.debug_logger import debug_log, enable_categories

    enable_categories(['star', 'lift'])

    debug_log('star', 'Associativity defect computed', order=2, terms=0)
    debug_log('lift', 'Newton step finished', step=1, defect_order=2)
"""

import sys
import threading
import time
import traceback
from datetime import datetime
from typing import Any, Dict, Iterable, Optional

_DEBUG_ENABLED = False  # Master switch
_CATEGORY_SETTINGS: Dict[str, bool] = {}
_OUTPUT_LOCK = threading.Lock()

DEBUG_CATEGORIES = {
    'series': 'Truncated series and equivalence transforms',
    'poisson': 'Multivector calculus and formal Poisson structures',
    'star': 'Star product construction and associativity',
    'lift': 'Idempotent lifting',
    'corner': 'Corner and center products',
    'bundle': 'Bimodule quantization of line bundles',
    'connection': 'Contravariant connections and curvature',
    'classes': 'Characteristic class bookkeeping',
    'scenario': 'Scenario parsing',
    'checks': 'Check execution',
    'report': 'Report rendering',
    'state': 'Report and preferences persistence',
    'performance': 'Performance metrics',
    'error': 'Errors and exceptions',
}

# Color codes for terminal output
COLORS = {
    'reset': '\033[0m',
    'bold': '\033[1m',
    'dim': '\033[2m',
    'red': '\033[91m',
    'green': '\033[92m',
    'yellow': '\033[93m',
    'blue': '\033[94m',
    'magenta': '\033[95m',
    'cyan': '\033[96m',
    'white': '\033[97m',
}

# Category colors
CATEGORY_COLORS = {
    'series': 'blue',
    'poisson': 'cyan',
    'star': 'green',
    'lift': 'magenta',
    'corner': 'magenta',
    'bundle': 'yellow',
    'connection': 'yellow',
    'classes': 'blue',
    'scenario': 'cyan',
    'checks': 'green',
    'report': 'white',
    'state': 'yellow',
    'performance': 'red',
    'error': 'red',
}


def set_debug_enabled(enabled: bool):
    global _DEBUG_ENABLED
    _DEBUG_ENABLED = enabled


def set_category_enabled(category: str, enabled: bool):
    _CATEGORY_SETTINGS[category] = enabled


def is_debug_enabled(category: Optional[str] = None) -> bool:
    """Whether a category logs; categories default to on once the master switch is on"""
    if not _DEBUG_ENABLED:
        return False
    if category is None:
        return True
    return _CATEGORY_SETTINGS.get(category, True)


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return repr(value)


def _format_kwargs(kwargs) -> str:
    if not kwargs:
        return ''
    return ' | ' + ', '.join(f"{k}={_format_value(v)}" for k, v in kwargs.items())


def _prefix(category: str) -> str:
    """Timestamp, category tag and, off the main thread, the worker name"""
    timestamp = datetime.now().strftime('%H:%M:%S.%f')[:-3]
    color = COLORS.get(CATEGORY_COLORS.get(category, 'white'), '')
    reset = COLORS['reset']
    thread = threading.current_thread()
    worker = '' if thread is threading.main_thread() else f" ({thread.name})"
    return f"{COLORS['dim']}{timestamp}{reset} {color}[{category.upper():12s}]{reset}{worker}"


def _emit(*lines: str):
    with _OUTPUT_LOCK:
        for line in lines:
            print(line, file=sys.stderr)


def debug_log(category: str, message: str, **kwargs):
    """Log a debug message with optional key-value pairs

    Args:
        category: Debug category (e.g., 'star', 'lift', 'checks')
        message: Debug message
        **kwargs: Optional key-value pairs to include in the log

    Example:
        debug_log('star', 'Moyal product built', order=4, dim=2)
        debug_log('checks', 'Check finished', name='assoc', status='PASS')
    """
    if not is_debug_enabled(category):
        return
    _emit(f"{_prefix(category)} {message}{_format_kwargs(kwargs)}")


def debug_section(category: str, title: str):
    """Section header, e.g. debug_section('checks', 'VERIFY flagship (seed 0)')"""
    if not is_debug_enabled(category):
        return
    color = COLORS.get(CATEGORY_COLORS.get(category, 'white'), '')
    reset = COLORS['reset']
    separator = f"{color}{'=' * 60}{reset}"
    _emit(separator, f"{color}{COLORS['bold']}{title}{reset}", separator)


def debug_timer_start(category: str, operation: str) -> float:
    """Start a performance timer

    Returns:
        Start time for debug_timer_end, or 0 when the category is off

    Example:
        start = debug_timer_start('performance', 'lift_idempotent')
        # ... do work ...
        debug_timer_end('performance', 'lift_idempotent', start)
    """
    if not is_debug_enabled(category):
        return 0
    debug_log(category, f"{operation} started")
    return time.perf_counter()


def debug_timer_end(category: str, operation: str, start_time: float):
    if not is_debug_enabled(category) or start_time <= 0:
        return
    duration_ms = (time.perf_counter() - start_time) * 1000
    debug_log(category, f"{operation} completed", duration_ms=f"{duration_ms:.2f}ms")


def debug_error(category: str, message: str, exception: Optional[BaseException] = None, **kwargs):
    """Log an error; printed even when debug logging is off

    The traceback is added only when the category is enabled.

    Example:
        try:
            lifted = lift_idempotent(P0, star)
        except NotIdempotentError as e:
            debug_error('lift', 'P0 rejected', exception=e)
    """
    red, bold, reset = COLORS['red'], COLORS['bold'], COLORS['reset']
    detail = f": {type(exception).__name__}: {exception}" if exception is not None else ''
    lines = [f"{_prefix(category)} {red}{bold}ERROR{reset} {message}{detail}{_format_kwargs(kwargs)}"]
    if exception is not None and is_debug_enabled(category):
        trace = traceback.format_exception(type(exception), exception, exception.__traceback__)
        lines.append(''.join(trace).rstrip())
    _emit(*lines)


def print_debug_config():
    """Print current debug configuration"""
    lines = [f"Debug logging: {'ON' if _DEBUG_ENABLED else 'OFF'}"]
    for category, description in DEBUG_CATEGORIES.items():
        enabled = _CATEGORY_SETTINGS.get(category, True) if _DEBUG_ENABLED else False
        lines.append(f"  {'✓' if enabled else '✗'} {category:12s} {description}")
    _emit(*lines)


def enable_categories(categories: Iterable[str]):
    """Turn on the master switch with only the given categories enabled

    Unknown names are enabled too so ad hoc categories still log.
    """
    set_debug_enabled(True)
    wanted = set(categories)
    for category in DEBUG_CATEGORIES:
        set_category_enabled(category, category in wanted)
    for category in wanted - set(DEBUG_CATEGORIES):
        set_category_enabled(category, True)


def enable_all_categories():
    set_debug_enabled(True)
    for category in DEBUG_CATEGORIES:
        set_category_enabled(category, True)
