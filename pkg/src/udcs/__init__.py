"""Universal dyadic coding for remote generation of continuous random variables."""

__version__ = "0.1.0"
