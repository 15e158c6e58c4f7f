import sys

from sleap.cli import main

sys.exit(main())
