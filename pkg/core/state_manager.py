"""Persistence of the last verification report"""

import asyncio
import json
import os
from datetime import datetime

import aiofiles

from core.debug_logger import debug_error, debug_log


class ReportStore:
    """The last report of `verify`, replayed by `report`

    Writes go to a sibling temp file first and are moved into place, so an
    interrupted run leaves the previous report intact.
    """

    def __init__(self, state_file):
        self.state_file = os.path.expanduser(state_file)
        self._lock = asyncio.Lock()

    @property
    def _partial_file(self):
        return self.state_file + '.partial'

    async def save_report(self, report_data):
        stamped = {**report_data, 'last_saved': datetime.now().isoformat(timespec='seconds')}
        async with self._lock:
            try:
                async with aiofiles.open(self._partial_file, 'w', encoding='utf-8') as f:
                    await f.write(json.dumps(stamped, indent=2, ensure_ascii=False))
                await asyncio.to_thread(os.replace, self._partial_file, self.state_file)
            except OSError as e:
                debug_error('state', 'Failed to save report', exception=e, path=self.state_file)
                return False
        debug_log('state', 'Report saved', path=self.state_file, checks=len(stamped.get('checks', [])))
        return True

    async def load_report(self):
        """The saved report dictionary, or None when missing or unreadable"""
        if not os.path.exists(self.state_file):
            return None
        try:
            async with aiofiles.open(self.state_file, 'r', encoding='utf-8') as f:
                data = json.loads(await f.read())
        except (OSError, ValueError) as e:
            debug_error('state', 'Failed to load report', exception=e, path=self.state_file)
            return None
        if not isinstance(data, dict):
            debug_error('state', 'Saved report is not an object', path=self.state_file)
            return None
        return data

    async def clear(self):
        try:
            for path in (self.state_file, self._partial_file):
                if os.path.exists(path):
                    await asyncio.to_thread(os.remove, path)
        except OSError as e:
            debug_error('state', 'Failed to clear report', exception=e)
            return False
        return True
