"""Desk-scale models of right-angled hyperbolic-building boundaries.

The package builds one apartment of the building (a right-angled polygon
tessellation of the hyperbolic plane), codes boundary points as a direction
plus a branch word over wall crossings, and verifies metric, measure and
potential-theoretic estimates on the resulting space: regularity of the
sampled measure, fiber-measure bounds, a dyadic averaging inequality,
pointwise and ball Poincare inequalities, and discrete curve modulus.
"""

__version__ = "0.1.0"
