"""Configure local testing."""
