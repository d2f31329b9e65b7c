# Single runs, parallel sweeps and progress reporting
