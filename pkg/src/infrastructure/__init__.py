"""Infrastructure package for technical concerns."""
