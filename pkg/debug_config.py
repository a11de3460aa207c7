"""Debug configuration read at startup

Set ENABLE_DEBUG = True and pick categories below to get debug output on
stderr for every run. `--debug` on the command line overrides this file.
The category names are listed in core.debug_logger.DEBUG_CATEGORIES.
"""

ENABLE_DEBUG = False

# Overrides ENABLED_CATEGORIES
ENABLE_ALL = False

ENABLED_CATEGORIES = [
    # 'series',
    # 'poisson',
    # 'star',
    # 'lift',
    # 'corner',
    # 'bundle',
    # 'connection',
    # 'classes',
    # 'scenario',
    # 'checks',
    # 'report',
    # 'state',
    # 'performance',
]

# Presets
# ENABLED_CATEGORIES = ['star', 'lift', 'corner']  # construction pipeline
# ENABLED_CATEGORIES = ['bundle', 'connection']  # line bundle quantization
# ENABLED_CATEGORIES = ['checks', 'performance']  # check timing
