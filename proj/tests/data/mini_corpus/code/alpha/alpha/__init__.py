from alpha.stats import mean, variance

__all__ = ["mean", "variance"]
