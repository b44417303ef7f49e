"""Feature-subset selection wrappers and classifiers for coronary artery disease data."""

__version__ = "0.1.0"
