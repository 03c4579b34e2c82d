"""Analytical handover evaluation: delay timelines, guard-channel blocking,
AHP weighting and TOPSIS ranking of MIPv6-family handover protocols."""

__version__ = "0.1.0"
