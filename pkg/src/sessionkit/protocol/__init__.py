"""Session protocols: terms, predicates, syntax, and structural operations."""
