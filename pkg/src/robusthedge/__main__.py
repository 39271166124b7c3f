"""Entry point for running robusthedge as a module: python -m robusthedge"""

from robusthedge.cli import main

if __name__ == "__main__":
    main()
