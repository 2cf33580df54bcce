"""Double-porosity problems at scale eps, their homogenized limits and error diagnostics."""
