"""Multi-topic user profiles: tweet vectors, a Gaussian mixture over
topics, and per-user topic percentages."""

__version__ = "0.1.0"
