"""The object language: syntax, parser, and small-step interpreter."""
