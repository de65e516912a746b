"""Interpolated Pareto front approximations for interactive decision making.

Pipeline: ingest or generate mutually nondominated outcomes, interpolate
them into an inherently nondominated front approximation (Delaunay faces
filtered by pairwise dominance LPs), expose the approximation as a mixed
integer linear surrogate, and drive NIMBUS classification iterations with
projection of chosen outcomes onto the true Pareto front of the original
problem.
"""

__version__ = "0.1.0"
