"""Monte Carlo simulation of energy buffers."""
