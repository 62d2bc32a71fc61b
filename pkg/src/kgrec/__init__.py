"""Weighted content-based movie recommender over a knowledge graph."""
