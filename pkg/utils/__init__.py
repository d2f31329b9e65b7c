# Shared helpers: logging, validation, conversion and on-disk containers
