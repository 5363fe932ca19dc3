"""Bayesian estimation of procedural material parameters from single
flash-lit photographs: differentiable forward models, summary-function
posteriors, MAP optimization, and MALA/MH posterior sampling."""

__version__ = "0.1.0"
