"""Runnable mock plugins and fixture generators for tests and simulation.

Each module doubles as a command: ``python -m hitloop.mocks.<name> ...``.
They honor the hub's plugin contracts and are fully deterministic given
their seed and inputs.
"""
