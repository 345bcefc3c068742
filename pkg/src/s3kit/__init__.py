"""Constructions and analyses of one-neuron-wide shortcut networks."""

__version__ = "0.1.0"
