"""Semiclassical Einstein equation on flat Robertson-Walker spacetime.

Modules:

- ``series``: exact truncated series in the point separation.
- ``hadamard``: Hadamard expansion catalog and its certification.
- ``subtraction``: mode counterterms and zero-mode terms.
- ``quadrature``: momentum grids and the regularized ``k^-3`` pairing.
- ``dynamics``: coupled mode and scale-factor evolution.
- ``cli``: ``verify`` and ``run`` commands.
"""

__version__ = "0.1.0"
