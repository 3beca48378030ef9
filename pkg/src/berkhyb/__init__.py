"""Exact skeleton combinatorics, tropical metrics and hybrid limits.

Desk-scale toolkit: quasi-monomial valuations and dual complexes of snc
models, tropical Fubini-Study metrics with exact non-archimedean limits,
hybrid-circle evaluation and Lelong estimation, atomic and grid
Monge-Ampere measures on degenerating curve families, and subharmonicity
on the tree of arithmetic absolute values.
"""

__version__ = "0.1.0"
