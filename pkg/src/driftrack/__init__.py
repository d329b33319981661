"""Change-detection-gated online updates with entropy-maximizing replay."""

__version__ = "0.1.0"
