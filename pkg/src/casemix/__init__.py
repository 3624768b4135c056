"""Casemix grouping toolkit for burn-care cohorts.

Builds ranked patient groups from resource-usage factors (length of stay,
treatment cost, burn surface area) with a cost-sensitive decision tree, and
compares their homogeneity against rule-based HRG-style groups.
"""

__version__ = "0.1.0"
