"""Path sampling, trajectory metrics and grounding masks for panorama navigation graphs."""

__version__ = "0.1.0"
