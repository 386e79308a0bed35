"""Inverse mean curvature flow of S^1-invariant star-shaped hypersurfaces in CH^n."""

__version__ = "0.1.0"
