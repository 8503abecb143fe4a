import sys

from sasa.harness.cli import main

sys.exit(main())
