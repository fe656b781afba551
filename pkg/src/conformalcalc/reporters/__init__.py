"""Output reporters (terminal, JSON)."""
