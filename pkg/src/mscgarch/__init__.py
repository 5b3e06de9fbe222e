"""Markov switching component GARCH volatility models."""
