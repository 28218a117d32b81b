"""Token-passing message algorithms for constraint satisfaction problems."""
