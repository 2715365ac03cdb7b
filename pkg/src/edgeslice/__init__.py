"""Multi-slice RAN simulator with edge caching and a DQN slice/cache controller."""
__version__ = "0.1.0"
