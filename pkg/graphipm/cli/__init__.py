"""Command-line driver: run, bench, partition and validate."""
