# Settings and experiment configuration
