import sys

from overcommit.cli import main

sys.exit(main())
