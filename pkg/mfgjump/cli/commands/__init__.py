# Package for CLI commands
