"""Hamilton cycles in pseudorandom graphs."""
