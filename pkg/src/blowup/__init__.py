"""Blow-up lemma embedding machinery for partite complexes."""
from .complex import (Complex, Ground, IndexComplex, MarkedComplex, compose, intersection,
                      make_complete, neighborhood, preplus, relative_density, absolute_density,
                      restrict, star_set, union, validate)

__version__ = "0.1.0"
