"""Cross-cutting configuration, logging and errors."""
