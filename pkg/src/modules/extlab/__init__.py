"""Extension operators from the complement into the inclusions."""
