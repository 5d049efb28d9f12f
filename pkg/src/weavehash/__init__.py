"""Fibonacci-anyon weave compilation by iterative pseudogroup hashing."""
