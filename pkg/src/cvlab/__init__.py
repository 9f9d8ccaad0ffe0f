"""Phase-space toolkit for continuous-variable Gaussian states."""
