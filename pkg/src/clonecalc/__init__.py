"""Executable clone and clonoid calculus on squarefree Z_n.

Library layers, bottom up:

- core: squarefree carriers, dense function tables, CRT split, linear maps
- poly: reduced polynomial calculus with function-valued coefficients
- pclonoid: constructive monomial extraction with replayable certificates
- clonoid: linearly closed clonoids, closures, lattices, enumeration
- clone: clones above the additive clone as graded coefficient systems
- bounds: Gaussian binomials, factorizations over Z_p, cardinality bounds
- cli: command-line interface, JSON/DOT serialization, verification suites
"""

__version__ = "0.1.0"
