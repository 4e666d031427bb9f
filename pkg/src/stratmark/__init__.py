"""Watermarking game-playing strategies and detecting the watermark from play."""

__version__ = "0.1.0"
