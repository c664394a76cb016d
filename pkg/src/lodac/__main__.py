import sys

from lodac.harness.cli import main

sys.exit(main())
