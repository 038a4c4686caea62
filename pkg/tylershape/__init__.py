"""tylershape - sparse shape-matrix estimation for heavy-tailed elliptical data"""

__version__ = "0.1.0"
