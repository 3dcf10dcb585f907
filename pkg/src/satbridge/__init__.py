"""Combinatorial optimization on graphs through Max-SAT."""
