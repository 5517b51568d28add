"""
Entry point for running mest as a module.

Usage:
    python -m mest simulate --n 200 --reps 100
    python -m mest normality --n 700
"""

from .cli import main

if __name__ == "__main__":
    main()
