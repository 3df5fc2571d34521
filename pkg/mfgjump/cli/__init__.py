# Package for CLI logic
