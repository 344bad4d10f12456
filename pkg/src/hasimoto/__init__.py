"""Moving frames, curvature tensors and integrators for fourth-order geometric flows on Kähler targets."""

__version__ = "0.1.0"
