"""Elevated-LiDAR pedestrian activity pipeline: simulate, detect, extract, classify, evaluate."""

__version__ = "0.1.0"
