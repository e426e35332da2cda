"""Bifurcation structure of a Neumann problem with point-interaction matching."""
