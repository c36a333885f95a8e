__all__ = [
    "games",
    "knowledge",
    "reductions",
    "lp",
    "equilibrium",
    "json_io",
    "fixtures",
    "config",
    "settings",
    "log",
    "exceptions",
    "schemas",
    "cli",
]
