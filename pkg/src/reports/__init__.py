"""Run artifacts, plots and the validation suite."""
