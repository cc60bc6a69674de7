"""Solver suite for a two-player volatility-control game on the unit interval:
closed-form and shooting benchmarks, finite-difference best responses,
equilibrium construction/verification, comparative statics, a Markov-chain
oracle, and Monte Carlo path simulation.
"""

__version__ = "0.1.0"
