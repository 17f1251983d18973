"""Allow running skillgeo as: python3 -m skillgeo"""

from .cli import main

if __name__ == "__main__":
    main()
