"""Manifold SGD - Riemannian optimization on matrix manifolds.

Manifold operators (exp, log, retraction, transport) over batched numpy
arrays, Riemannian SGD / constrained RMSProp / Riemannian Adam with dense and
sparse updates, and the tooling to verify and benchmark them.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
