"""Interpretable multidrug-resistance prediction from antibiotic susceptibility records."""

__version__ = "0.1.0"
