# Accuracy metrics, report assembly and compute accounting
