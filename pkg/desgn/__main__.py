import sys

from desgn.ui.cli import main

sys.exit(main())
