"""Keyed, distribution-preserving watermarking for binary autoregressive sources."""
