"""rodworks: design-to-assembly toolkit for 3D-printed joints and precision-cut rods."""

__version__ = "0.1.0"
