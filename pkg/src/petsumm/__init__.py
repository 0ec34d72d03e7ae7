"""petsumm: fine-tune and evaluate personalized PET report impression generators."""

__version__ = "0.1.0"
