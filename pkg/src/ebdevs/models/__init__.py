"""Case-study models: SIR epidemics, boids flocking and mitochondrial dynamics."""
