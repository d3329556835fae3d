"""
GenFL simulator: federated averaging combined with a server-side model
trained on generated data, plus the benchmark harness around it.
"""
__version__ = "1.0.0"
