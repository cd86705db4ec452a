"""Adaptive fighting-game opponent.

An online player model imitates whoever is playing, a background RL agent
trains to beat that model, and the live opponent is swapped for the latest
RL snapshot at fixed intervals.
"""

__version__ = "0.1.0"
