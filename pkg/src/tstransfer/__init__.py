"""Transfer learning experiments for time series on a small numpy autodiff engine."""
__version__ = "0.1.0"
