"""Explainable prediction of legislative progression stages for climate
policies: featurization, ordinal-as-regression models, RMSE/R-squared
evaluation, and permutation/Shapley attributions."""

__version__ = "0.1.0"
