"""Compact three-layer classifiers with symbolic rule extraction.

The pipeline: constructive training with weight freezing, magnitude
pruning under a weight-decay penalty, one-pass clustering of hidden
activations, and covering-rule generation merged down to input-level
rules that match the pruned network's accuracy.
"""

from .backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
