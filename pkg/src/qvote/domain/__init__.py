"""
Domain layer - exceptions shared across the simulator.
"""
