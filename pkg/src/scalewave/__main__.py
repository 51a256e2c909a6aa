import sys

from scalewave.harness.cli import main

sys.exit(main())
