"""Bayesian-updated multi-period mean-variance portfolios with uncertain exit time."""

from ._mvbayes import *  # noqa: F401,F403
from ._mvbayes import __version__
