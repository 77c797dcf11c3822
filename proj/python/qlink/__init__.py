"""Atom-photon entanglement link simulator and analysis toolkit."""

from _qlink import *  # noqa: F401,F403
from _qlink import __version__  # noqa: F401
