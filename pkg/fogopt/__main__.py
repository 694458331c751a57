import sys

from fogopt.cli import main

sys.exit(main())
