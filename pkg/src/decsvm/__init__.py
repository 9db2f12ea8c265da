"""Decentralized penalized convoluted support vector machines."""
