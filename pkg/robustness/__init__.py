# Noise and drift injection with KS shift quantification
