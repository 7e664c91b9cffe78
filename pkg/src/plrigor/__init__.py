"""plrigor: rigorous power-law testing for time series and distributions.

Library + batch CLI implementing the full distributional power-law
protocol (cutoff selection, ML exponent, bootstrap goodness of fit, Vuong
comparisons), its time-domain adaptations (shift sweep, residual-diagnostic
bootstrap, Vuong on trends), scale-invariance tests, the K-component
wave-stability bootstrap, Granger/CCF causality tests, and a walk-forward
forecasting harness with Diebold-Mariano statistics.
"""

__version__ = "0.1.0"
