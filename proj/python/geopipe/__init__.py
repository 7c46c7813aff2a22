"""Geographic street-view retrieval and panorama alignment pipeline."""

try:
    from geopipe._geopipe import *  # noqa: F401,F403  (installed layout)
    from geopipe._geopipe import __doc__ as _doc
except ImportError:
    from _geopipe import *  # noqa: F401,F403  (build-tree layout)
    from _geopipe import __doc__ as _doc

__doc__ = _doc
