"""Workbench preferences: truncation orders, check sampling and report defaults

Preferences live in a JSON file merged over DEFAULT_PREFERENCES. A value with
the wrong type or outside its range is reported on stderr and replaced by the
default, so a bad preferences file never aborts a verification run.
"""

import asyncio
import copy
import json
import os

import aiofiles

from core.debug_logger import debug_error, debug_log

DEFAULT_PREFERENCES_FILE = "~/.deformation_workbench_preferences.json"
HARD_MAX_ORDER = 8
REPORT_FORMATS = ('text', 'json')


def _is_count(value, low=0, high=None):
    if isinstance(value, bool) or not isinstance(value, int):
        return False
    return value >= low and (high is None or value <= high)


# (category, key) -> predicate a stored value has to satisfy
VALIDATORS = {
    ('series', 'default_order'): lambda v: _is_count(v, 0, HARD_MAX_ORDER),
    ('series', 'max_order'): lambda v: _is_count(v, 0, HARD_MAX_ORDER),
    ('checks', 'seed'): lambda v: _is_count(v),
    ('checks', 'random_samples'): lambda v: _is_count(v, 1),
    ('checks', 'identity_samples'): lambda v: _is_count(v, 1),
    ('checks', 'max_degree'): lambda v: _is_count(v, 0, 6),
    ('checks', 'connection_degree'): lambda v: _is_count(v, 0, 6),
    ('report', 'format'): lambda v: v in REPORT_FORMATS,
    ('report', 'show_timings'): lambda v: isinstance(v, bool),
    ('report', 'state_file'): lambda v: isinstance(v, str) and bool(v),
}


class PreferencesManager:
    """Workbench preferences backed by a JSON file"""

    DEFAULT_PREFERENCES = {
        'series': {
            'default_order': 2,
            'max_order': 4,
        },
        'checks': {
            'seed': 0,
            'random_samples': 20,  # fibred bracket and Psi checks
            'identity_samples': 50,  # Poisson engine identities
            'max_degree': 2,
            'connection_degree': 3,
        },
        'report': {
            'format': 'text',
            'show_timings': False,
            'state_file': "~/.deformation_workbench_report.json",
        },
    }

    def __init__(self, preferences_file=None):
        self.preferences_file = os.path.expanduser(preferences_file or DEFAULT_PREFERENCES_FILE)
        self._preferences = self._defaults()
        self._load_lock = asyncio.Lock()
        self._save_lock = asyncio.Lock()
        self.load_preferences_sync()

    def _defaults(self):
        return copy.deepcopy(self.DEFAULT_PREFERENCES)

    def _adopt(self, loaded):
        """Merge loaded values over the defaults and drop the invalid ones"""
        if not isinstance(loaded, dict):
            raise ValueError(f"preferences must be a JSON object, got {type(loaded).__name__}")
        merged = self._deep_merge(self._defaults(), loaded)
        self._preferences = self._sanitize(merged)

    def _sanitize(self, prefs):
        for category, defaults in self.DEFAULT_PREFERENCES.items():
            if not isinstance(prefs.get(category), dict):
                debug_error('state', 'Invalid preference category replaced by defaults', key=category)
                prefs[category] = copy.deepcopy(defaults)
        for (category, key), valid in VALIDATORS.items():
            value = prefs[category][key]
            if not valid(value):
                debug_error('state', 'Invalid preference replaced by default',
                            key=f"{category}.{key}", value=value)
                prefs[category][key] = self.DEFAULT_PREFERENCES[category][key]
        series = prefs['series']
        if series['default_order'] > series['max_order']:
            debug_error('state', 'default_order above max_order, clamped',
                        default_order=series['default_order'], max_order=series['max_order'])
            series['default_order'] = series['max_order']
        return prefs

    async def load_preferences(self):
        async with self._load_lock:
            try:
                if os.path.exists(self.preferences_file):
                    async with aiofiles.open(self.preferences_file, 'r') as f:
                        self._adopt(json.loads(await f.read()))
                else:
                    self._preferences = self._defaults()
            except (OSError, ValueError) as e:
                debug_error('state', 'Failed to load preferences', exception=e)
                self._preferences = self._defaults()

    def load_preferences_sync(self):
        """Startup variant of load_preferences"""
        try:
            if os.path.exists(self.preferences_file):
                with open(self.preferences_file, 'r') as f:
                    self._adopt(json.load(f))
                debug_log('state', 'Preferences loaded', path=self.preferences_file)
        except (OSError, ValueError) as e:
            debug_error('state', 'Failed to load preferences', exception=e)
            self._preferences = self._defaults()

    async def save_preferences(self):
        async with self._save_lock:
            try:
                async with aiofiles.open(self.preferences_file, 'w') as f:
                    await f.write(json.dumps(self._preferences, indent=2))
                return True
            except OSError as e:
                debug_error('state', 'Failed to save preferences', exception=e)
                return False

    def save_preferences_sync(self):
        try:
            with open(self.preferences_file, 'w') as f:
                json.dump(self._preferences, f, indent=2)
            return True
        except OSError as e:
            debug_error('state', 'Failed to save preferences', exception=e)
            return False

    def get(self, category, key, default=None):
        value = self._preferences.get(category, {}).get(key, default)
        if (category, key) == ('report', 'state_file'):
            return os.path.expanduser(value)
        return value

    def set(self, category, key, value):
        """Set one value; validated keys reject bad values with ValueError"""
        valid = VALIDATORS.get((category, key))
        if valid is not None and not valid(value):
            raise ValueError(f"invalid value for {category}.{key}: {value!r}")
        self._preferences.setdefault(category, {})[key] = value

    def _deep_merge(self, base, update):
        for key, value in update.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                base[key] = self._deep_merge(base[key], value)
            else:
                base[key] = value
        return base
