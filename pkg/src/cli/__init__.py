"""
groundloc CLI - command-line interface for the ground-texture feature benchmark.
"""

__version__ = "0.1.0"
