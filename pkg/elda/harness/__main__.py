import sys

from elda.harness.cli import main

sys.exit(main())
