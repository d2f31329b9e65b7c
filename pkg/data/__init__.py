# Raw counter ingestion, pre-processing, clustering and synthetic data
