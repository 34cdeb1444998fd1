"""Entropy-injection security toolkit."""
